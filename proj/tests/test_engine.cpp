#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "pce/compiler.hpp"
#include "pce/engine.hpp"
#include "pce/oracle.hpp"

using namespace pce;

namespace {

const char* kTableRules =
    "allow tcp 167.205.3.11 167.205.65.32 25 8080\n"
    "deny  tcp 192.168.*.* *.*.*.* 80 *\n"
    "allow udp 167.205.65.5 *.*.*.* * *\n"
    "allow tcp *.*.*.* 134.25.5.2 >1023 80\n";

MemoryImage deny_all_image() { return {{SubRule{false, 0, CompareOp::Always, 0, 0, true}}}; }

const PacketHeader kRow1Packet = make_header(6, 0xA7CD030B, 0xA7CD4120, 25, 8080);

}  // namespace

TEST_CASE("deny-all image stops in one cycle") {
    Engine engine(deny_all_image());
    Verdict v = engine.classify(PacketHeader{});
    CHECK(v.permit == false);
    CHECK(v.cycles == 1);
    v = engine.classify(kRow1Packet);
    CHECK(v.permit == false);
    CHECK(v.cycles == 1);
}

TEST_CASE("table image permits the row-1 packet in 13 cycles") {
    Engine engine(compile(parse_rules(kTableRules)));
    Verdict v = engine.classify(kRow1Packet);
    CHECK(v.permit == true);
    CHECK(v.cycles == 13);
}

TEST_CASE("table image denies via the row-2 deny rule") {
    Engine engine(compile(parse_rules(kTableRules)));
    Verdict v = engine.classify(make_header(6, 0xC0A80105, 0x0A000001, 80, 443), true);
    CHECK(v.permit == false);
    CHECK(v.cycles == 7);  // 2 words of row 1, then row 2's 5-word chain
    CHECK(v.cycles == v.trace.size());
    OracleVerdict o = classify_linear(parse_rules(kTableRules),
                                      make_header(6, 0xC0A80105, 0x0A000001, 80, 443));
    CHECK(o.permit == v.permit);
    CHECK(o.matched_rule == 1);
}

TEST_CASE("unmatched packet falls through to the default-deny terminal") {
    MemoryImage img = compile(parse_rules(kTableRules));
    Engine engine(img);
    Verdict v = engine.classify(make_header(17, 0x08080808, 0x09090909, 53, 53), true);
    CHECK(v.permit == false);
    REQUIRE(!v.trace.empty());
    CHECK(v.trace.back().pc == img.words.size() - 1);
    CHECK(v.trace.back().op == CompareOp::Always);
}

TEST_CASE("step walks the row-1 chain one word per clock") {
    Engine engine(compile(parse_rules(kTableRules)));
    engine.start(kRow1Packet);
    EngineState st{};
    for (int i = 0; i < 13; ++i) {
        INFO("step ", i);
        st = engine.step();
        if (i < 12) {
            CHECK(st.fsm == Phase::Process1);
            CHECK(st.pc == i + 1);
            CHECK(st.forward_out == false);
        }
    }
    CHECK(st.fsm == Phase::Stop);
    CHECK(st.forward_out == true);
    CHECK(st.valid_out == true);
    CHECK(st.hold == true);
    CHECK(st.pc == 12);  // program counter held at the terminal word
    CHECK_THROWS_WITH_AS(engine.step(), doctest::Contains("engine idle"), std::logic_error);
}

TEST_CASE("step without start is an error") {
    Engine engine(deny_all_image());
    CHECK_THROWS_WITH_AS(engine.step(), doctest::Contains("engine idle"), std::logic_error);
}

TEST_CASE("reset is idempotent and restores a fresh engine") {
    MemoryImage img = compile(parse_rules(kTableRules));
    Engine fresh(img);
    Verdict expected = fresh.classify(kRow1Packet, true);

    Engine engine(img);
    engine.start(kRow1Packet);
    engine.step();
    engine.step();
    engine.reset();
    CHECK(engine.state().fsm == Phase::Idle);
    CHECK(engine.state().pc == 0);
    CHECK(engine.state().valid_out == false);
    CHECK(engine.state().forward_out == false);
    CHECK(engine.state().hold == false);
    CHECK(engine.state().latched == PacketHeader{});
    engine.reset();
    CHECK(engine.state().fsm == Phase::Idle);

    Verdict after = engine.classify(kRow1Packet, true);
    CHECK(after.permit == expected.permit);
    CHECK(after.cycles == expected.cycles);
    REQUIRE(after.trace.size() == expected.trace.size());
    for (size_t i = 0; i < after.trace.size(); ++i) {
        CHECK(after.trace[i].pc == expected.trace[i].pc);
        CHECK(after.trace[i].word == expected.trace[i].word);
        CHECK(after.trace[i].match == expected.trace[i].match);
    }
}

TEST_CASE("classification is deterministic and stateless across runs") {
    MemoryImage img = compile(parse_rules(kTableRules));
    Engine shared(img);
    std::mt19937 rng(29);
    for (int i = 0; i < 500; ++i) {
        PacketHeader h = make_header(uint8_t(rng()), rng(), rng(), uint16_t(rng()),
                                     uint16_t(rng()));
        Verdict a = shared.classify(h);
        Engine fresh(img);
        Verdict b = fresh.classify(h);
        CHECK(a.permit == b.permit);
        CHECK(a.cycles == b.cycles);
    }
}

TEST_CASE("trace is sound: next-pc chain reproduces the cycle count") {
    MemoryImage img = compile(parse_rules(kTableRules));
    Engine engine(img);
    std::mt19937 rng(31);
    for (int i = 0; i < 200; ++i) {
        PacketHeader h = make_header(uint8_t(rng()), rng(), rng(), uint16_t(rng()),
                                     uint16_t(rng()));
        Verdict v = engine.classify(h, true);
        REQUIRE(v.trace.size() == v.cycles);
        for (size_t k = 0; k < v.trace.size(); ++k) {
            const TraceEntry& t = v.trace[k];
            CHECK(t.cycle == k + 1);
            CHECK(t.pc < img.words.size());
            CHECK(t.word == encode(img.words[t.pc]));
            if (k + 1 < v.trace.size()) {
                REQUIRE(t.next_pc.has_value());
                CHECK(*t.next_pc == v.trace[k + 1].pc);
            } else {
                CHECK(!t.next_pc.has_value());
            }
        }
    }
}

TEST_CASE("forward-edge images terminate within their word count") {
    for (uint32_t seed = 200; seed < 240; ++seed) {
        RuleSet rs = gen_random_ruleset(seed, 8);
        MemoryImage img = compile(rs);
        Engine engine(img);
        for (const PacketHeader& h : gen_random_headers(rs, seed, 50)) {
            Verdict v = engine.classify(h);
            CHECK(v.cycles >= 1);
            CHECK(v.cycles <= img.words.size());
        }
    }
}

TEST_CASE("watchdog trips on a backward self-loop instead of hanging") {
    // EQ 0xFF against proto 0 always fails; the fail edge points at itself.
    MemoryImage img{{SubRule{false, 0, CompareOp::Eq, 0xFF, 0x00, false}}};
    Engine engine(img);
    try {
        engine.classify(PacketHeader{});
        FAIL("expected watchdog fault");
    } catch (const ExecutionFault& e) {
        CHECK(e.kind() == FaultKind::Watchdog);
        CHECK(e.steps() == kWatchdogLimit + 1);
        CHECK(std::string(e.what()).find("watchdog") != std::string::npos);
    }
}

TEST_CASE("bad selector is an execution fault, not a verdict") {
    MemoryImage img{{SubRule{false, 13, CompareOp::Eq, 0, 0, true},
                     SubRule{false, 0, CompareOp::Always, 0, 0, true}}};
    Engine engine(img);
    try {
        engine.classify(PacketHeader{});
        FAIL("expected selector fault");
    } catch (const ExecutionFault& e) {
        CHECK(e.kind() == FaultKind::BadSelector);
        CHECK(e.pc() == 0);
    }
}

TEST_CASE("falling off the end is an execution fault") {
    // ALWAYS with action=0 succeeds into pc+1 == image size.
    MemoryImage img{{SubRule{false, 0, CompareOp::Always, 0, 0, false}}};
    Engine engine(img);
    CHECK_THROWS_AS(engine.classify(PacketHeader{}), ExecutionFault);
}

TEST_CASE("image bounds on load") {
    CHECK_THROWS_AS(Engine(MemoryImage{}), std::invalid_argument);
    MemoryImage full{std::vector<SubRule>(256, SubRule{false, 0, CompareOp::Always, 0, 0, true})};
    Engine engine(full);
    CHECK(engine.classify(PacketHeader{}).cycles == 1);
    MemoryImage oversize{std::vector<SubRule>(257)};
    CHECK_THROWS_AS(Engine{oversize}, std::invalid_argument);
}

TEST_CASE("success jump on a non-terminal word redirects the program counter") {
    // word 0 always matches and jumps to 2; word 1 would permit, word 2 denies.
    MemoryImage img{{SubRule{true, 0, CompareOp::Always, 0, 2, false},
                     SubRule{true, 0, CompareOp::Always, 0, 0, true},
                     SubRule{false, 0, CompareOp::Always, 0, 0, true}}};
    Engine engine(img);
    Verdict v = engine.classify(PacketHeader{}, true);
    CHECK(v.permit == false);
    CHECK(v.cycles == 2);
    CHECK(v.trace[0].next_pc == 2);
}

TEST_CASE("split port range behaves like the integer range end to end") {
    RuleSet rs = parse_rules("allow tcp * * * 80-443");
    Engine engine(compile(rs));
    for (uint32_t port : {0u, 79u, 80u, 81u, 255u, 256u, 300u, 443u, 444u, 65535u}) {
        PacketHeader h = make_header(6, 1, 2, 3, uint16_t(port));
        bool want = port >= 80 && port <= 443;
        CHECK(engine.classify(h).permit == want);
        CHECK(classify_linear(rs, h).permit == want);
    }
}

TEST_CASE("trace text format") {
    // deny-all terminal encodes as op ALWAYS (3<<17) with the action bit set
    Engine engine(deny_all_image());
    Verdict v = engine.classify(kRow1Packet, true);
    CHECK(format_trace(v.trace) == "1 00 060001 0 06 3 00 1 -\n");
}
