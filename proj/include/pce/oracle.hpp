// oracle.hpp -- reference classifier and differential-testing harness.
//
// The oracle is a deliberately naive ordered linear scan over the semantic
// per-field matcher; it shares no code with the compile/execute path so the
// two sides fail independently.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pce/compiler.hpp"
#include "pce/engine.hpp"
#include "pce/packet.hpp"
#include "pce/rules.hpp"

namespace pce {

struct OracleVerdict {
    bool permit = false;
    std::optional<std::size_t> matched_rule;  // absent => default deny
};

// First rule (file order) whose five patterns all match decides; otherwise
// deny.
OracleVerdict classify_linear(const RuleSet& rs, const PacketHeader& h);

struct Mismatch {
    PacketHeader header{};
    bool engine_permit = false;
    bool oracle_permit = false;
    std::string trace;
};

struct DiffReport {
    std::size_t headers_checked = 0;
    std::vector<Mismatch> mismatches;

    bool clean() const { return mismatches.empty(); }
};

// Compiles `rs` (errors propagate) and compares engine vs oracle verdicts.
DiffReport differential_run(const RuleSet& rs, std::span<const PacketHeader> headers);

// Same comparison against a caller-supplied image; lets tests verify the
// harness itself catches a mutated image.
DiffReport differential_run_image(const RuleSet& rs, const MemoryImage& img,
                                  std::span<const PacketHeader> headers);

std::string mismatch_json(const Mismatch& m);

// Reproducible ruleset generator: only DSL-expressible patterns, retried
// until the compiled image fits in 256 words.
RuleSet gen_random_ruleset(uint32_t seed, std::size_t max_rules);

// Boundary probes: for every rule, a witness header plus per-field
// substitutions at the pattern's match-interval edges (lo-2..lo+1,
// hi-1..hi+2, clamped), deduplicated.
std::vector<PacketHeader> gen_boundary_headers(const RuleSet& rs);

// Random header mix: half uniform, half mutations of rule witnesses so
// narrow rules still see matching traffic.
std::vector<PacketHeader> gen_random_headers(const RuleSet& rs, uint32_t seed, std::size_t count);

}  // namespace pce
