#include "pce/compiler.hpp"

namespace pce {

namespace {

constexpr size_t kMaxConjunctionsPerRule = 64;

// Comparisons covering the byte interval [lo, hi] on one selector. Sides that
// are vacuously true at the domain edge are dropped; an unconstrained byte
// yields no checks.
void append_byte_span(Conjunction& out, uint8_t selector, unsigned lo, unsigned hi) {
    if (lo == hi) {
        out.push_back({selector, CompareOp::Eq, uint8_t(lo)});
        return;
    }
    if (lo > 0) out.push_back({selector, CompareOp::Gt, uint8_t(lo - 1)});
    if (hi < 255) out.push_back({selector, CompareOp::Lt, uint8_t(hi + 1)});
}

// Match interval of an already-validated 8/16-bit pattern.
std::pair<uint32_t, uint32_t> match_interval(const FieldPattern& p, uint32_t max) {
    switch (p.kind) {
        case PatternKind::Exact: return {p.lo, p.lo};
        case PatternKind::Greater: return {p.lo + 1, max};
        case PatternKind::Less: return {0, p.lo - 1};
        case PatternKind::Range: return {p.lo, p.hi};
        default: return {0, max};
    }
}

void check_or_throw(const FieldPattern& p, unsigned bits, bool ip_field, const char* field) {
    std::string err = check_pattern(p, bits, ip_field);
    if (!err.empty()) throw CompileError(std::string(field) + ": " + err);
}

}  // namespace

Alternatives decompose_pattern8(const FieldPattern& p, uint8_t selector) {
    FieldPattern n = normalize(p, 8);
    if (n.kind == PatternKind::Any) return {Conjunction{}};
    check_or_throw(n, 8, false, "8-bit field");
    auto [lo, hi] = match_interval(n, 255);
    Conjunction conj;
    append_byte_span(conj, selector, lo, hi);
    return {std::move(conj)};
}

Alternatives decompose_range16(uint16_t lo, uint16_t hi, uint8_t hi_selector, uint8_t lo_selector) {
    const unsigned hl = lo >> 8, ll = lo & 0xFF;
    const unsigned hh = hi >> 8, lh = hi & 0xFF;
    Alternatives alts;

    if (hl == hh) {
        Conjunction conj;
        conj.push_back({hi_selector, CompareOp::Eq, uint8_t(hl)});
        append_byte_span(conj, lo_selector, ll, lh);
        alts.push_back(std::move(conj));
        return alts;
    }

    // Partial low segment: high byte == hl, low byte >= ll.
    if (ll > 0) {
        Conjunction conj;
        conj.push_back({hi_selector, CompareOp::Eq, uint8_t(hl)});
        conj.push_back({lo_selector, CompareOp::Gt, uint8_t(ll - 1)});
        alts.push_back(std::move(conj));
    }
    // Middle run matched by the high byte alone.
    const unsigned mid_lo = hl + (ll > 0 ? 1 : 0);
    const unsigned mid_hi = hh - (lh < 255 ? 1 : 0);
    if (mid_lo <= mid_hi) {
        Conjunction conj;
        append_byte_span(conj, hi_selector, mid_lo, mid_hi);
        alts.push_back(std::move(conj));
    }
    // Partial high segment: high byte == hh, low byte <= lh.
    if (lh < 255) {
        Conjunction conj;
        conj.push_back({hi_selector, CompareOp::Eq, uint8_t(hh)});
        conj.push_back({lo_selector, CompareOp::Lt, uint8_t(lh + 1)});
        alts.push_back(std::move(conj));
    }
    return alts;
}

Conjunction decompose_ip(const FieldPattern& p, uint8_t base_selector) {
    FieldPattern n = normalize(p, 32);
    if (n.kind == PatternKind::Any) return {};
    check_or_throw(n, 32, true, "address field");

    uint32_t base = n.lo;
    unsigned len = n.kind == PatternKind::Exact ? 32 : n.prefix_len;
    Conjunction conj;
    unsigned full_bytes = len / 8;
    for (unsigned i = 0; i < full_bytes; ++i)
        conj.push_back({uint8_t(base_selector + i), CompareOp::Eq, uint8_t(base >> (24 - 8 * i))});

    unsigned rem = len % 8;
    if (rem != 0) {
        // Partial byte spans [base_byte, base_byte + 2^(8-rem) - 1]; the base
        // is prefix-aligned so the span never crosses the byte boundary.
        unsigned byte = (base >> (24 - 8 * full_bytes)) & 0xFF;
        unsigned width = 1u << (8 - rem);
        append_byte_span(conj, uint8_t(base_selector + full_bytes), byte, byte + width - 1);
    }
    return conj;
}

CheckChain lower_rule(const Rule& r) {
    Rule n = normalize_rule(r);
    check_or_throw(n.proto, 8, false, "proto");
    check_or_throw(n.src_ip, 32, true, "src_ip");
    check_or_throw(n.dst_ip, 32, true, "dst_ip");
    check_or_throw(n.src_port, 16, false, "src_port");
    check_or_throw(n.dst_port, 16, false, "dst_port");

    auto port_alternatives = [](const FieldPattern& p, uint8_t hi_sel, uint8_t lo_sel) {
        if (p.kind == PatternKind::Any) return Alternatives{Conjunction{}};
        auto [lo, hi] = match_interval(p, 65535);
        return decompose_range16(uint16_t(lo), uint16_t(hi), hi_sel, lo_sel);
    };

    const Alternatives proto_alts = decompose_pattern8(n.proto, 0);
    const Conjunction src_conj = decompose_ip(n.src_ip, 1);
    const Conjunction dst_conj = decompose_ip(n.dst_ip, 5);
    const Alternatives sport_alts = port_alternatives(n.src_port, 9, 10);
    const Alternatives dport_alts = port_alternatives(n.dst_port, 11, 12);

    CheckChain chain;
    chain.verdict = n.action;
    for (const Conjunction& pa : proto_alts) {
        for (const Conjunction& sp : sport_alts) {
            for (const Conjunction& dp : dport_alts) {
                Conjunction conj;
                conj.insert(conj.end(), pa.begin(), pa.end());
                conj.insert(conj.end(), src_conj.begin(), src_conj.end());
                conj.insert(conj.end(), dst_conj.begin(), dst_conj.end());
                conj.insert(conj.end(), sp.begin(), sp.end());
                conj.insert(conj.end(), dp.begin(), dp.end());
                if (conj.empty())
                    conj.push_back({0, CompareOp::Always, 0});  // fully wildcarded rule
                chain.alternatives.push_back(std::move(conj));
                if (chain.alternatives.size() > kMaxConjunctionsPerRule)
                    throw CompileError("rule expands to more than " +
                                       std::to_string(kMaxConjunctionsPerRule) + " alternatives");
            }
        }
    }
    return chain;
}

MemoryImage compile(const RuleSet& rs) {
    struct Block {
        Conjunction checks;
        Action verdict;
    };
    std::vector<Block> blocks;
    for (const Rule& r : rs.rules) {
        CheckChain chain = lower_rule(r);
        for (Conjunction& alt : chain.alternatives)
            blocks.push_back({std::move(alt), chain.verdict});
    }

    std::vector<size_t> entry(blocks.size() + 1, 0);
    size_t total = 0;
    for (size_t i = 0; i < blocks.size(); ++i) {
        entry[i] = total;
        total += blocks[i].checks.size();
    }
    entry[blocks.size()] = total;  // default-deny terminal address
    total += 1;

    if (total > kRulesMemoryWords)
        throw CompileError("rules memory overflow: " + std::to_string(total) + " words > " +
                           std::to_string(kRulesMemoryWords));

    MemoryImage img;
    img.words.reserve(total);
    for (size_t i = 0; i < blocks.size(); ++i) {
        const Block& b = blocks[i];
        const uint8_t fail = uint8_t(entry[i + 1]);
        for (size_t k = 0; k < b.checks.size(); ++k) {
            const SubFieldCheck& c = b.checks[k];
            const bool terminal = k + 1 == b.checks.size();
            SubRule w;
            w.selector = c.selector;
            w.op = c.op;
            w.operand = c.operand;
            w.address = fail;
            w.action = terminal;
            w.jump = terminal && b.verdict == Action::Permit;
            img.words.push_back(w);
        }
    }
    img.words.push_back({false, 0, CompareOp::Always, 0, 0, true});  // default deny
    return img;
}

}  // namespace pce
