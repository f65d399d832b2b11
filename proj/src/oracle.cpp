#include "pce/oracle.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

namespace pce {

namespace {

bool rule_matches(const Rule& r, const PacketHeader& h) {
    return pattern_matches(r.proto, h.proto) && pattern_matches(r.src_ip, h.src_ip) &&
           pattern_matches(r.dst_ip, h.dst_ip) && pattern_matches(r.src_port, h.src_port) &&
           pattern_matches(r.dst_port, h.dst_port);
}

}  // namespace

OracleVerdict classify_linear(const RuleSet& rs, const PacketHeader& h) {
    for (size_t i = 0; i < rs.rules.size(); ++i)
        if (rule_matches(rs.rules[i], h))
            return {rs.rules[i].action == Action::Permit, i};
    return {false, std::nullopt};
}

DiffReport differential_run_image(const RuleSet& rs, const MemoryImage& img,
                                  std::span<const PacketHeader> headers) {
    Engine engine(img);
    DiffReport report;
    for (const PacketHeader& h : headers) {
        ++report.headers_checked;
        Verdict v = engine.classify(h);
        OracleVerdict o = classify_linear(rs, h);
        if (v.permit != o.permit) {
            Verdict traced = engine.classify(h, true);
            report.mismatches.push_back({h, v.permit, o.permit, format_trace(traced.trace)});
        }
    }
    return report;
}

DiffReport differential_run(const RuleSet& rs, std::span<const PacketHeader> headers) {
    return differential_run_image(rs, compile(rs), headers);
}

namespace {

std::string json_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

}  // namespace

std::string mismatch_json(const Mismatch& m) {
    std::string out = "{\"header\":\"" + json_escape(format_csv(m.header)) + "\"";
    out += ",\"engine\":";
    out += m.engine_permit ? "true" : "false";
    out += ",\"oracle\":";
    out += m.oracle_permit ? "true" : "false";
    out += ",\"trace\":\"" + json_escape(m.trace) + "\"}";
    return out;
}

namespace {

// All randomness goes through below()/pick() on a mt19937 stream so results
// are reproducible everywhere.
struct Rng {
    std::mt19937 g;
    explicit Rng(uint32_t seed) : g(seed) {}
    uint32_t next() { return g(); }
    uint32_t below(uint32_t n) { return n ? g() % n : 0; }
    bool percent(uint32_t p) { return below(100) < p; }
};

uint8_t random_proto(Rng& rng) {
    static constexpr uint8_t common[3] = {6, 17, 1};
    return rng.percent(60) ? common[rng.below(3)] : uint8_t(rng.below(256));
}

FieldPattern gen_proto_pattern(Rng& rng) {
    if (rng.percent(35)) return FieldPattern::any();
    return FieldPattern::exact(random_proto(rng));
}

FieldPattern gen_ip_pattern(Rng& rng) {
    uint32_t r = rng.below(100);
    if (r < 30) return FieldPattern::any();
    if (r < 65) return FieldPattern::exact(rng.next());
    return normalize(FieldPattern::prefix(rng.next(), uint8_t(1 + rng.below(32))), 32);
}

FieldPattern gen_port_pattern(Rng& rng) {
    uint32_t r = rng.below(100);
    if (r < 30) return FieldPattern::any();
    if (r < 55) return FieldPattern::exact(rng.below(65536));
    if (r < 70) return FieldPattern::greater(rng.below(65535));
    if (r < 85) return FieldPattern::less(1 + rng.below(65535));
    uint32_t lo = rng.below(65536);
    uint32_t hi = lo + rng.below(65536 - lo);
    return normalize(FieldPattern::range(lo, hi), 16);
}

Rule gen_rule(Rng& rng) {
    Rule r;
    r.proto = gen_proto_pattern(rng);
    r.src_ip = gen_ip_pattern(rng);
    r.dst_ip = gen_ip_pattern(rng);
    r.src_port = gen_port_pattern(rng);
    r.dst_port = gen_port_pattern(rng);
    r.action = rng.percent(50) ? Action::Permit : Action::Deny;
    return r;
}

// A value satisfying the pattern. Wildcard protocols pick TCP so port
// patterns on the same rule stay reachable.
uint32_t witness(const FieldPattern& p, bool proto_field) {
    switch (p.kind) {
        case PatternKind::Any: return proto_field ? 6 : 0;
        case PatternKind::Exact: return p.lo;
        case PatternKind::Prefix: return p.lo;
        case PatternKind::Greater: return p.lo + 1;
        case PatternKind::Less: return p.lo - 1;
        case PatternKind::Range: return p.lo;
    }
    return 0;
}

PacketHeader witness_header(const Rule& r) {
    return make_header(uint8_t(witness(r.proto, true)), witness(r.src_ip, false),
                       witness(r.dst_ip, false), uint16_t(witness(r.src_port, false)),
                       uint16_t(witness(r.dst_port, false)));
}

// Edges of the pattern's match interval, +/- a couple of steps, clamped.
std::vector<uint32_t> boundary_values(const FieldPattern& p, uint32_t max) {
    uint32_t lo = 0, hi = max;
    switch (p.kind) {
        case PatternKind::Any: break;
        case PatternKind::Exact: lo = hi = p.lo; break;
        case PatternKind::Greater: lo = p.lo + 1; break;
        case PatternKind::Less: hi = p.lo - 1; break;
        case PatternKind::Range: lo = p.lo; hi = p.hi; break;
        case PatternKind::Prefix: {
            if (p.prefix_len == 0) break;
            uint32_t mask = ~uint32_t(0) << (32 - p.prefix_len);
            lo = p.lo & mask;
            hi = lo | ~mask;
            break;
        }
    }
    std::vector<uint32_t> vals;
    for (int d = -2; d <= 1; ++d) {
        int64_t v = int64_t(lo) + d;
        if (v >= 0 && v <= int64_t(max)) vals.push_back(uint32_t(v));
    }
    for (int d = -1; d <= 2; ++d) {
        int64_t v = int64_t(hi) + d;
        if (v >= 0 && v <= int64_t(max)) vals.push_back(uint32_t(v));
    }
    return vals;
}

}  // namespace

RuleSet gen_random_ruleset(uint32_t seed, std::size_t max_rules) {
    Rng rng(seed);
    if (max_rules == 0) max_rules = 1;
    for (int attempt = 0;; ++attempt) {
        // After a few oversized draws, shrink until a set fits (a single rule
        // always does).
        size_t limit = attempt < 8 ? max_rules : std::max<size_t>(1, max_rules >> (attempt - 7));
        size_t n = 1 + rng.below(uint32_t(limit));
        RuleSet rs;
        for (size_t i = 0; i < n; ++i) rs.rules.push_back(gen_rule(rng));
        try {
            compile(rs);
            return rs;
        } catch (const CompileError&) {
            continue;
        }
    }
}

std::vector<PacketHeader> gen_boundary_headers(const RuleSet& rs) {
    std::vector<PacketHeader> headers;
    for (const Rule& r : rs.rules) {
        PacketHeader w = witness_header(r);
        headers.push_back(w);
        for (uint32_t v : boundary_values(r.proto, 255)) {
            PacketHeader h = w;
            h.proto = uint8_t(v);
            headers.push_back(make_header(h.proto, h.src_ip, h.dst_ip, h.src_port, h.dst_port));
        }
        for (uint32_t v : boundary_values(r.src_ip, 0xFFFFFFFFu)) {
            PacketHeader h = w;
            h.src_ip = v;
            headers.push_back(h);
        }
        for (uint32_t v : boundary_values(r.dst_ip, 0xFFFFFFFFu)) {
            PacketHeader h = w;
            h.dst_ip = v;
            headers.push_back(h);
        }
        for (uint32_t v : boundary_values(r.src_port, 65535)) {
            headers.push_back(
                make_header(w.proto, w.src_ip, w.dst_ip, uint16_t(v), w.dst_port));
        }
        for (uint32_t v : boundary_values(r.dst_port, 65535)) {
            headers.push_back(
                make_header(w.proto, w.src_ip, w.dst_ip, w.src_port, uint16_t(v)));
        }
    }
    std::sort(headers.begin(), headers.end());
    headers.erase(std::unique(headers.begin(), headers.end()), headers.end());
    return headers;
}

std::vector<PacketHeader> gen_random_headers(const RuleSet& rs, uint32_t seed, std::size_t count) {
    Rng rng(seed);
    std::vector<PacketHeader> headers;
    headers.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        if (rs.rules.empty() || rng.percent(50)) {
            headers.push_back(make_header(random_proto(rng), rng.next(), rng.next(),
                                          uint16_t(rng.below(65536)),
                                          uint16_t(rng.below(65536))));
            continue;
        }
        // Mutate a rule witness in one or two fields to probe near-misses.
        const Rule& r = rs.rules[rng.below(uint32_t(rs.rules.size()))];
        PacketHeader h = witness_header(r);
        int mutations = 1 + int(rng.below(2));
        for (int m = 0; m < mutations; ++m) {
            switch (rng.below(5)) {
                case 0: h.proto = random_proto(rng); break;
                case 1: h.src_ip = rng.next(); break;
                case 2: h.dst_ip = rng.next(); break;
                case 3: h.src_port = uint16_t(rng.below(65536)); break;
                case 4: h.dst_port = uint16_t(rng.below(65536)); break;
            }
        }
        headers.push_back(make_header(h.proto, h.src_ip, h.dst_ip, h.src_port, h.dst_port));
    }
    return headers;
}

}  // namespace pce
