// compiler.hpp -- lowers a RuleSet into a rules-memory image: each field
// pattern is decomposed into 8-bit sub-field comparisons, per-rule check
// chains are laid out in inspection order (protocol, source IP, destination
// IP, source port, destination port), fail edges point at the next
// alternative, and a default-deny terminal closes the image.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pce/isa.hpp"
#include "pce/rules.hpp"

namespace pce {

struct SubFieldCheck {
    uint8_t selector = 0;
    CompareOp op = CompareOp::Eq;
    uint8_t operand = 0;

    friend auto operator<=>(const SubFieldCheck&, const SubFieldCheck&) = default;
};

// A conjunction must hold check order by inspection sequence; alternatives
// are a disjunction sharing one verdict.
using Conjunction = std::vector<SubFieldCheck>;
using Alternatives = std::vector<Conjunction>;

struct CheckChain {
    Alternatives alternatives;
    Action verdict = Action::Deny;
};

class CompileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// 8-bit field (protocol). Any yields one empty conjunction: no instruction
// is emitted for a wildcard.
Alternatives decompose_pattern8(const FieldPattern& p, uint8_t selector);

// Exact cover of [lo, hi] over a 16-bit field split into high/low bytes:
// a partial segment at the low boundary's high byte, a middle run matched by
// the high byte alone, and a partial segment at the high boundary, in that
// order. Degenerate segments collapse.
Alternatives decompose_range16(uint16_t lo, uint16_t hi, uint8_t hi_selector, uint8_t lo_selector);

// 32-bit field (addresses), pattern in {Any, Exact, Prefix}. One conjunction:
// full-byte EQ checks MSB-first, plus a two-comparison span on a partial
// prefix byte.
Conjunction decompose_ip(const FieldPattern& p, uint8_t base_selector);

// Cross product of the per-field alternatives, flattened in inspection
// order. A fully wildcarded rule yields a single ALWAYS check. Throws
// CompileError beyond 64 conjunctions or on empty-match patterns.
CheckChain lower_rule(const Rule& r);

// Whole-set lowering. Every fail edge is strictly forward; the last check of
// each conjunction is the terminal carrying the verdict in its jump bit; one
// default-deny ALWAYS terminal ends the image. Throws CompileError when the
// result exceeds 256 words.
MemoryImage compile(const RuleSet& rs);

}  // namespace pce
