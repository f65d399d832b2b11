#include "pce/rules.hpp"

#include <charconv>

namespace pce {

namespace {

uint32_t field_max(unsigned bits) { return bits >= 32 ? 0xFFFFFFFFu : (1u << bits) - 1; }

uint32_t prefix_mask(uint8_t len) { return len == 0 ? 0 : ~uint32_t(0) << (32 - len); }

}  // namespace

FieldPattern normalize(FieldPattern p, unsigned bits) {
    const uint32_t max = field_max(bits);
    switch (p.kind) {
        case PatternKind::Any:
            return FieldPattern::any();
        case PatternKind::Exact:
        case PatternKind::Greater:
        case PatternKind::Less:
            p.hi = 0;
            p.prefix_len = 0;
            return p;
        case PatternKind::Range:
            if (p.lo == 0 && p.hi == max) return FieldPattern::any();
            p.prefix_len = 0;
            return p;
        case PatternKind::Prefix:
            if (p.prefix_len == 0) return FieldPattern::any();
            p.lo &= prefix_mask(p.prefix_len);
            p.hi = 0;
            return p;
    }
    return p;
}

Rule normalize_rule(Rule r) {
    r.proto = normalize(r.proto, 8);
    r.src_ip = normalize(r.src_ip, 32);
    r.dst_ip = normalize(r.dst_ip, 32);
    r.src_port = normalize(r.src_port, 16);
    r.dst_port = normalize(r.dst_port, 16);
    return r;
}

std::string check_pattern(const FieldPattern& p, unsigned bits, bool ip_field) {
    const uint32_t max = field_max(bits);
    switch (p.kind) {
        case PatternKind::Any:
            return "";
        case PatternKind::Exact:
            if (p.lo > max) return "value exceeds field width";
            return "";
        case PatternKind::Greater:
            if (p.lo > max) return "value exceeds field width";
            if (p.lo == max) return "empty match: greater than field maximum";
            if (ip_field) return "greater pattern not supported on address fields";
            return "";
        case PatternKind::Less:
            if (p.lo > max) return "value exceeds field width";
            if (p.lo == 0) return "empty match: less than 0";
            if (ip_field) return "less pattern not supported on address fields";
            return "";
        case PatternKind::Range:
            if (p.lo > max || p.hi > max) return "value exceeds field width";
            if (p.lo > p.hi) return "range low bound exceeds high bound";
            if (ip_field) return "range pattern not supported on address fields";
            return "";
        case PatternKind::Prefix:
            if (!ip_field) return "prefix pattern only valid on address fields";
            if (p.prefix_len > 32) return "invalid prefix length";
            return "";
    }
    return "";
}

bool pattern_matches(const FieldPattern& p, uint32_t v) {
    switch (p.kind) {
        case PatternKind::Any: return true;
        case PatternKind::Exact: return v == p.lo;
        case PatternKind::Greater: return v > p.lo;
        case PatternKind::Less: return v < p.lo;
        case PatternKind::Range: return p.lo <= v && v <= p.hi;
        case PatternKind::Prefix:
            if (p.prefix_len == 0) return true;
            return ((v ^ p.lo) & prefix_mask(p.prefix_len)) == 0;
    }
    return false;
}

namespace {

struct Token {
    std::string_view text;
    int col;  // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
    std::vector<Token> tokens;
    size_t i = 0;
    while (i < line.size()) {
        if (line[i] == ' ' || line[i] == '\t' || line[i] == '\r') {
            ++i;
            continue;
        }
        size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        tokens.push_back({line.substr(start, i - start), int(start) + 1});
    }
    return tokens;
}

bool parse_uint(std::string_view s, uint32_t& out) {
    if (s.empty()) return false;
    uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || v > 0xFFFFFFFFull) return false;
    out = uint32_t(v);
    return true;
}

FieldPattern parse_proto(const Token& tok, int line) {
    if (tok.text == "*") return FieldPattern::any();
    if (auto p = proto_from_name(tok.text)) return FieldPattern::exact(*p);
    uint32_t v = 0;
    if (parse_uint(tok.text, v))
        throw ParseError(line, tok.col, "protocol out of range: " + std::string(tok.text));
    throw ParseError(line, tok.col, "bad protocol '" + std::string(tok.text) + "'");
}

FieldPattern parse_ip_pattern(const Token& tok, int line) {
    std::string_view text = tok.text;
    if (text == "*") return FieldPattern::any();

    if (size_t slash = text.find('/'); slash != std::string_view::npos) {
        uint32_t base = 0, len = 0;
        if (!parse_ipv4(text.substr(0, slash), base))
            throw ParseError(line, tok.col, "bad address '" + std::string(text) + "'");
        if (!parse_uint(text.substr(slash + 1), len) || len > 32)
            throw ParseError(line, tok.col, "invalid prefix length");
        return normalize(FieldPattern::prefix(base, uint8_t(len)), 32);
    }

    // Dotted quad with optional trailing-octet wildcards: 192.168.*.*.
    uint32_t base = 0;
    int wild_from = 4;
    for (int i = 0; i < 4; ++i) {
        size_t dot = text.find('.');
        std::string_view part = i == 3 ? text : text.substr(0, dot);
        if (i < 3 && dot == std::string_view::npos)
            throw ParseError(line, tok.col, "bad address '" + std::string(tok.text) + "'");
        if (part == "*") {
            if (wild_from == 4) wild_from = i;
        } else {
            if (wild_from < 4)
                throw ParseError(line, tok.col,
                                 "non-contiguous wildcard in '" + std::string(tok.text) + "'");
            uint32_t v = 0;
            if (!parse_uint(part, v) || v > 255)
                throw ParseError(line, tok.col, "bad address '" + std::string(tok.text) + "'");
            base = base << 8 | v;
        }
        if (i < 3) text.remove_prefix(dot + 1);
    }
    if (wild_from == 0) return FieldPattern::any();
    if (wild_from == 4) return FieldPattern::exact(base);
    base <<= 8 * (4 - wild_from);
    return FieldPattern::prefix(base, uint8_t(8 * wild_from));
}

FieldPattern parse_port_pattern(const Token& tok, int line) {
    std::string_view text = tok.text;
    if (text == "*") return FieldPattern::any();

    auto number = [&](std::string_view s) -> uint32_t {
        uint32_t v = 0;
        if (!parse_uint(s, v)) throw ParseError(line, tok.col, "bad port '" + std::string(tok.text) + "'");
        if (v > 65535) throw ParseError(line, tok.col, "port out of range: " + std::string(s));
        return v;
    };

    if (text.front() == '>') {
        uint32_t n = number(text.substr(1));
        if (n == 65535) throw ParseError(line, tok.col, "empty match: >65535 matches no port");
        return FieldPattern::greater(n);
    }
    if (text.front() == '<') {
        uint32_t n = number(text.substr(1));
        if (n == 0) throw ParseError(line, tok.col, "empty match: <0 matches no port");
        return FieldPattern::less(n);
    }
    if (size_t dash = text.find('-'); dash != std::string_view::npos) {
        uint32_t lo = number(text.substr(0, dash));
        uint32_t hi = number(text.substr(dash + 1));
        if (lo > hi) throw ParseError(line, tok.col, "range low bound exceeds high bound");
        return normalize(FieldPattern::range(lo, hi), 16);
    }
    return FieldPattern::exact(number(text));
}

}  // namespace

RuleSet parse_rules(std::string_view text) {
    RuleSet rs;
    int line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        if (size_t hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        std::vector<Token> tokens = tokenize(raw);
        if (tokens.empty()) continue;

        if (tokens.size() != 6)
            throw ParseError(line_no, tokens.back().col,
                             "expected `allow|deny proto src_ip dst_ip src_port dst_port`");

        Rule rule;
        if (tokens[0].text == "allow") {
            rule.action = Action::Permit;
        } else if (tokens[0].text == "deny") {
            rule.action = Action::Deny;
        } else {
            throw ParseError(line_no, tokens[0].col,
                             "expected 'allow' or 'deny', got '" + std::string(tokens[0].text) + "'");
        }
        rule.proto = parse_proto(tokens[1], line_no);
        rule.src_ip = parse_ip_pattern(tokens[2], line_no);
        rule.dst_ip = parse_ip_pattern(tokens[3], line_no);
        rule.src_port = parse_port_pattern(tokens[4], line_no);
        rule.dst_port = parse_port_pattern(tokens[5], line_no);
        rs.rules.push_back(normalize_rule(rule));
    }
    return rs;
}

namespace {

std::string print_ip_pattern(const FieldPattern& p) {
    switch (p.kind) {
        case PatternKind::Any: return "*";
        case PatternKind::Exact: return format_ipv4(p.lo);
        case PatternKind::Prefix:
            return format_ipv4(p.lo) + "/" + std::to_string(p.prefix_len);
        default: return "?";
    }
}

std::string print_port_pattern(const FieldPattern& p) {
    switch (p.kind) {
        case PatternKind::Any: return "*";
        case PatternKind::Exact: return std::to_string(p.lo);
        case PatternKind::Greater: return ">" + std::to_string(p.lo);
        case PatternKind::Less: return "<" + std::to_string(p.lo);
        case PatternKind::Range: return std::to_string(p.lo) + "-" + std::to_string(p.hi);
        default: return "?";
    }
}

}  // namespace

std::string print_rule(const Rule& r) {
    std::string out = r.action == Action::Permit ? "allow" : "deny";
    out += ' ';
    out += r.proto.kind == PatternKind::Any ? "*" : proto_name(uint8_t(r.proto.lo));
    out += ' ';
    out += print_ip_pattern(r.src_ip);
    out += ' ';
    out += print_ip_pattern(r.dst_ip);
    out += ' ';
    out += print_port_pattern(r.src_port);
    out += ' ';
    out += print_port_pattern(r.dst_port);
    return out;
}

std::string print_rules(const RuleSet& rs) {
    std::string out;
    for (const Rule& r : rs.rules) {
        out += print_rule(r);
        out += '\n';
    }
    return out;
}

}  // namespace pce
