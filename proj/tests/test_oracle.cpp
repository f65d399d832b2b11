#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>
#include <set>

#include "pce/oracle.hpp"

using namespace pce;

namespace {

const char* kTableRules =
    "allow tcp 167.205.3.11 167.205.65.32 25 8080\n"
    "deny  tcp 192.168.*.* *.*.*.* 80 *\n"
    "allow udp 167.205.65.5 *.*.*.* * *\n"
    "allow tcp *.*.*.* 134.25.5.2 >1023 80\n";

}  // namespace

TEST_CASE("linear scan reproduces the table actions") {
    RuleSet rs = parse_rules(kTableRules);

    OracleVerdict row1 = classify_linear(rs, make_header(6, 0xA7CD030B, 0xA7CD4120, 25, 8080));
    CHECK(row1.permit == true);
    CHECK(row1.matched_rule == 0);

    OracleVerdict none = classify_linear(rs, make_header(17, 0x08080808, 0x09090909, 53, 53));
    CHECK(none.permit == false);
    CHECK(!none.matched_rule.has_value());

    OracleVerdict row3 = classify_linear(rs, make_header(17, 0xA7CD4105, 0x01020304, 1000, 2000));
    CHECK(row3.permit == true);
    CHECK(row3.matched_rule == 2);
}

TEST_CASE("first match wins over later rules") {
    RuleSet rs = parse_rules(
        "deny tcp * * 80 *\n"
        "allow tcp * * * *\n");
    CHECK(classify_linear(rs, make_header(6, 1, 2, 80, 9)).permit == false);
    CHECK(classify_linear(rs, make_header(6, 1, 2, 81, 9)).permit == true);
}

TEST_CASE("default deny on empty ruleset") {
    std::mt19937 rng(41);
    for (int i = 0; i < 100; ++i) {
        PacketHeader h = make_header(uint8_t(rng()), rng(), rng(), uint16_t(rng()),
                                     uint16_t(rng()));
        OracleVerdict v = classify_linear(RuleSet{}, h);
        CHECK(v.permit == false);
        CHECK(!v.matched_rule.has_value());
    }
}

TEST_CASE("appending a rule never disturbs earlier matches") {
    for (uint32_t seed = 300; seed < 340; ++seed) {
        RuleSet rs = gen_random_ruleset(seed, 6);
        RuleSet extended = rs;
        extended.rules.push_back(gen_random_ruleset(seed + 1000, 1).rules[0]);
        for (const PacketHeader& h : gen_random_headers(rs, seed, 100)) {
            OracleVerdict before = classify_linear(rs, h);
            if (before.matched_rule.has_value()) {
                OracleVerdict after = classify_linear(extended, h);
                CHECK(after.permit == before.permit);
                CHECK(after.matched_rule == before.matched_rule);
            }
        }
    }
}

TEST_CASE("ruleset generator is reproducible") {
    CHECK(gen_random_ruleset(42, 8) == gen_random_ruleset(42, 8));
    CHECK(gen_random_headers(gen_random_ruleset(42, 8), 7, 50) ==
          gen_random_headers(gen_random_ruleset(42, 8), 7, 50));
}

TEST_CASE("generated rulesets always fit the rules memory") {
    for (uint32_t seed = 1; seed <= 200; ++seed) {
        RuleSet rs = gen_random_ruleset(seed, 12);
        MemoryImage img = compile(rs);
        CHECK(img.words.size() <= 256);
    }
}

TEST_CASE("boundary headers enumerate the >1023 edges") {
    RuleSet rs = parse_rules("allow tcp * * >1023 *");
    std::set<uint16_t> sports;
    for (const PacketHeader& h : gen_boundary_headers(rs)) sports.insert(h.src_port);
    for (uint16_t want : {1022, 1023, 1024, 1025, 65535}) {
        INFO("port ", want);
        CHECK(sports.count(want) == 1);
    }
}

TEST_CASE("boundary headers probe prefix edges") {
    RuleSet rs = parse_rules("allow tcp 192.168.0.0/16 * * *");
    std::set<uint32_t> srcs;
    for (const PacketHeader& h : gen_boundary_headers(rs)) srcs.insert(h.src_ip);
    CHECK(srcs.count(0xC0A7FFFF) == 1);  // just below the prefix
    CHECK(srcs.count(0xC0A80000) == 1);  // first address inside
    CHECK(srcs.count(0xC0A8FFFF) == 1);  // last address inside
    CHECK(srcs.count(0xC0A90000) == 1);  // just above
}

TEST_CASE("differential run over the table rules is clean") {
    RuleSet rs = parse_rules(kTableRules);
    std::vector<PacketHeader> headers = gen_random_headers(rs, 99, 1000);
    std::vector<PacketHeader> boundary = gen_boundary_headers(rs);
    headers.insert(headers.end(), boundary.begin(), boundary.end());
    DiffReport report = differential_run(rs, headers);
    CHECK(report.clean());
    CHECK(report.headers_checked == headers.size());
}

TEST_CASE("differential run over the empty ruleset is clean") {
    std::vector<PacketHeader> headers = gen_random_headers(RuleSet{}, 5, 200);
    DiffReport report = differential_run(RuleSet{}, headers);
    CHECK(report.clean());
}

TEST_CASE("harness catches a mutated verdict bit") {
    RuleSet rs = parse_rules(kTableRules);
    MemoryImage mutant = compile(rs);
    mutant.words[12].jump = !mutant.words[12].jump;  // flip row 1's terminal verdict

    std::vector<PacketHeader> headers = gen_boundary_headers(rs);
    DiffReport report = differential_run_image(rs, mutant, headers);
    CHECK(!report.clean());
    CHECK(report.mismatches[0].engine_permit != report.mismatches[0].oracle_permit);
    CHECK(!report.mismatches[0].trace.empty());
}

TEST_CASE("mismatch json lines are well formed") {
    Mismatch m{make_header(6, 0x01020304, 0x05060708, 1, 2), true, false, "1 00 aa\n"};
    CHECK(mismatch_json(m) ==
          "{\"header\":\"tcp,1.2.3.4,5.6.7.8,1,2\",\"engine\":true,\"oracle\":false,"
          "\"trace\":\"1 00 aa\\n\"}");
}
