// engine.hpp -- cycle-accurate virtual machine for rules-memory images.
//
// Models the PCE datapath: input latch, sub-field selector mux, 8-bit
// comparator, program counter with jump/hold, and the final compile unit that
// raises Forward/Valid. The state machine is idle / process_1 / process_2 /
// stop; one executed word costs one cycle, with the process_2 status check
// folded into the same clock.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pce/isa.hpp"
#include "pce/packet.hpp"

namespace pce {

enum class Phase : uint8_t { Idle, Process1, Process2, Stop };

struct EngineState {
    Phase fsm = Phase::Idle;
    uint8_t pc = 0;
    PacketHeader latched{};
    bool valid_out = false;    // permit/deny result, meaningful with forward_out
    bool forward_out = false;  // raised only in Stop
    bool hold = false;         // execution finished, awaiting reset/start
};

struct TraceEntry {
    uint32_t cycle = 0;  // 1-based
    uint8_t pc = 0;
    uint32_t word = 0;
    uint8_t selector = 0;
    uint8_t subfield = 0;
    CompareOp op = CompareOp::Eq;
    uint8_t operand = 0;
    bool match = false;
    std::optional<uint8_t> next_pc;  // absent on the terminal word
};

struct Verdict {
    bool permit = false;
    uint32_t cycles = 0;
    std::vector<TraceEntry> trace;
};

enum class FaultKind : uint8_t { BadSelector, OutOfBounds, Watchdog };

// Malformed-image failures, distinct from Deny verdicts: a broken image is a
// build error, not a policy decision.
class ExecutionFault : public std::runtime_error {
public:
    ExecutionFault(FaultKind kind, uint16_t pc, uint64_t steps);
    FaultKind kind() const { return kind_; }
    uint16_t pc() const { return pc_; }
    uint64_t steps() const { return steps_; }

private:
    FaultKind kind_;
    uint16_t pc_;
    uint64_t steps_;
};

// Generous bound: a 256-word memory cannot legitimately need more.
inline constexpr uint64_t kWatchdogLimit = 65536;

class Engine {
public:
    // Engine comes up in Idle with pc=0 and outputs clear. Throws
    // std::invalid_argument for an empty or oversized image.
    explicit Engine(MemoryImage image);

    // START pulse: latch the header and run to Stop, then return to Idle.
    // Requires Idle. Throws ExecutionFault on bad selector / out-of-bounds
    // fetch / watchdog.
    Verdict classify(const PacketHeader& h, bool with_trace = false);

    // Single-step interface. start() latches the header and enters
    // process_1; step() executes exactly one word and returns the observable
    // state at the end of that clock. Stepping an idle engine throws
    // std::logic_error.
    void start(const PacketHeader& h);
    EngineState step();

    // Clears latch, outputs, pc, hold; back to Idle. Idempotent.
    void reset();

    const EngineState& state() const { return state_; }
    const MemoryImage& image() const { return image_; }

private:
    bool exec_one(std::vector<TraceEntry>* trace);  // true when Stop reached
    void auto_idle();

    MemoryImage image_;
    EngineState state_{};
    uint64_t steps_ = 0;
};

// Line format: `cycle pc word selector subfield op operand match next_pc`,
// numeric fields in hex except the decimal cycle and 0/1 match; `-` marks the
// terminal's absent next_pc.
std::string format_trace_entry(const TraceEntry& t);
std::string format_trace(const std::vector<TraceEntry>& trace);

}  // namespace pce
