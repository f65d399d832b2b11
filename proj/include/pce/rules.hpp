// rules.hpp -- ordered 5-tuple firewall rules: patterns, the text DSL, and the
// semantic matcher the reference oracle is built on.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pce/packet.hpp"

namespace pce {

enum class PatternKind : uint8_t { Any, Exact, Prefix, Greater, Less, Range };

// Match pattern over one header field. `lo` holds the Exact/Greater/Less
// value, the Range low bound, or the Prefix base; `hi` is the Range high
// bound; `prefix_len` is in bits (Prefix only, 32-bit fields).
struct FieldPattern {
    PatternKind kind = PatternKind::Any;
    uint32_t lo = 0;
    uint32_t hi = 0;
    uint8_t prefix_len = 0;

    static FieldPattern any() { return {}; }
    static FieldPattern exact(uint32_t v) { return {PatternKind::Exact, v, 0, 0}; }
    static FieldPattern prefix(uint32_t base, uint8_t len) { return {PatternKind::Prefix, base, 0, len}; }
    static FieldPattern greater(uint32_t n) { return {PatternKind::Greater, n, 0, 0}; }
    static FieldPattern less(uint32_t n) { return {PatternKind::Less, n, 0, 0}; }
    static FieldPattern range(uint32_t lo, uint32_t hi) { return {PatternKind::Range, lo, hi, 0}; }

    friend auto operator<=>(const FieldPattern&, const FieldPattern&) = default;
};

enum class Action : uint8_t { Permit, Deny };

struct Rule {
    FieldPattern proto;     // 8-bit field
    FieldPattern src_ip;    // 32-bit
    FieldPattern dst_ip;    // 32-bit
    FieldPattern src_port;  // 16-bit
    FieldPattern dst_port;  // 16-bit
    Action action = Action::Deny;

    friend auto operator<=>(const Rule&, const Rule&) = default;
};

// Ordered rule list. First match wins; the default action is Deny and is not
// configurable.
struct RuleSet {
    std::vector<Rule> rules;

    friend auto operator<=>(const RuleSet&, const RuleSet&) = default;
};

// Canonical form for a pattern over a `bits`-wide field: full ranges and
// zero-length prefixes become Any, prefix host bits are cleared, ALWAYS-style
// operands are zeroed. Idempotent.
FieldPattern normalize(FieldPattern p, unsigned bits);
Rule normalize_rule(Rule r);

// Returns an error description for patterns that cannot match anything
// (Greater max, Less 0), overflow the field, or use a kind the field does not
// support. Empty string means the pattern is fine.
std::string check_pattern(const FieldPattern& p, unsigned bits, bool ip_field);

// True iff `v` satisfies `p`. Purely semantic; shares nothing with the
// compiled byte-comparison path.
bool pattern_matches(const FieldPattern& p, uint32_t v);

// Rules DSL, one rule per line:
//   allow|deny <proto> <src_ip> <dst_ip> <src_port> <dst_port>
//   proto: tcp|udp|icmp|*|0-255
//   ip:    a.b.c.d | a.b.c.d/len | trailing-octet wildcards (192.168.*.*) | *
//   port:  * | N | >N | <N | N-M
// `#` starts a comment, blank lines are skipped. Throws ParseError.
RuleSet parse_rules(std::string_view text);

std::string print_rule(const Rule& r);
std::string print_rules(const RuleSet& rs);

}  // namespace pce
