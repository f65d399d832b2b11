#include "pce/engine.hpp"

#include <cstdio>

namespace pce {

namespace {

std::string fault_message(FaultKind kind, uint16_t pc, uint64_t steps) {
    char buf[96];
    switch (kind) {
        case FaultKind::BadSelector:
            std::snprintf(buf, sizeof buf, "execution fault: selector out of range at 0x%02x", pc);
            break;
        case FaultKind::OutOfBounds:
            std::snprintf(buf, sizeof buf, "execution fault: pc 0x%02x out of bounds", pc);
            break;
        case FaultKind::Watchdog:
            std::snprintf(buf, sizeof buf,
                          "execution fault: watchdog tripped after %llu steps (non-terminating image)",
                          static_cast<unsigned long long>(steps));
            break;
    }
    return buf;
}

}  // namespace

ExecutionFault::ExecutionFault(FaultKind kind, uint16_t pc, uint64_t steps)
    : std::runtime_error(fault_message(kind, pc, steps)), kind_(kind), pc_(pc), steps_(steps) {}

Engine::Engine(MemoryImage image) : image_(std::move(image)) {
    if (image_.words.empty()) throw std::invalid_argument("empty image");
    if (image_.words.size() > kRulesMemoryWords)
        throw std::invalid_argument("image exceeds 256 words");
}

void Engine::reset() {
    state_ = EngineState{};
    steps_ = 0;
}

void Engine::start(const PacketHeader& h) {
    if (state_.fsm != Phase::Idle) throw std::logic_error("engine busy");
    // START: latch inputs, clean outputs, enter process_1.
    state_.fsm = Phase::Process1;
    state_.pc = 0;
    state_.latched = h;
    state_.valid_out = false;
    state_.forward_out = false;
    state_.hold = false;
    steps_ = 0;
}

// One clock: fetch the word at pc, mux the sub-field, compare, and either
// stop (terminal hit) or advance the program counter. The process_2 status
// check shares the clock with process_1.
bool Engine::exec_one(std::vector<TraceEntry>* trace) {
    if (state_.pc >= image_.words.size())
        throw ExecutionFault(FaultKind::OutOfBounds, state_.pc, steps_);
    ++steps_;
    if (steps_ > kWatchdogLimit) throw ExecutionFault(FaultKind::Watchdog, state_.pc, steps_);

    const SubRule& w = image_.words[state_.pc];
    auto sub = subfield_value(state_.latched, w.selector);
    if (!sub) throw ExecutionFault(FaultKind::BadSelector, state_.pc, steps_);

    const bool match = compare(w.op, *sub, w.operand);
    const bool finished = match && w.action;
    std::optional<uint8_t> next;
    if (!finished)
        next = match ? (w.jump ? w.address : uint8_t(state_.pc + 1)) : w.address;

    if (trace)
        trace->push_back({uint32_t(steps_), state_.pc, encode(w), w.selector, *sub, w.op,
                          w.operand, match, next});

    if (finished) {
        state_.fsm = Phase::Stop;
        state_.valid_out = w.jump;  // terminal verdict lives in the jump bit
        state_.forward_out = true;
        state_.hold = true;
        return true;
    }
    state_.pc = *next;
    return false;
}

void Engine::auto_idle() {
    // Stop -> idle happens automatically; outputs are only raised in Stop.
    state_.fsm = Phase::Idle;
    state_.valid_out = false;
    state_.forward_out = false;
}

Verdict Engine::classify(const PacketHeader& h, bool with_trace) {
    start(h);
    Verdict v;
    while (!exec_one(with_trace ? &v.trace : nullptr)) {
    }
    v.permit = state_.valid_out;
    v.cycles = uint32_t(steps_);
    auto_idle();
    return v;
}

EngineState Engine::step() {
    if (state_.fsm != Phase::Process1) throw std::logic_error("engine idle");
    bool finished = exec_one(nullptr);
    EngineState snapshot = state_;
    if (finished) auto_idle();
    return snapshot;
}

std::string format_trace_entry(const TraceEntry& t) {
    char buf[64];
    if (t.next_pc)
        std::snprintf(buf, sizeof buf, "%u %02x %06x %x %02x %x %02x %d %02x", t.cycle, t.pc,
                      t.word, t.selector, t.subfield, unsigned(t.op), t.operand, t.match ? 1 : 0,
                      *t.next_pc);
    else
        std::snprintf(buf, sizeof buf, "%u %02x %06x %x %02x %x %02x %d -", t.cycle, t.pc, t.word,
                      t.selector, t.subfield, unsigned(t.op), t.operand, t.match ? 1 : 0);
    return buf;
}

std::string format_trace(const std::vector<TraceEntry>& trace) {
    std::string out;
    for (const TraceEntry& t : trace) {
        out += format_trace_entry(t);
        out += '\n';
    }
    return out;
}

}  // namespace pce
