#include "pce/isa.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>

namespace pce {

bool compare(CompareOp op, uint8_t subfield, uint8_t operand) {
    switch (op) {
        case CompareOp::Eq: return subfield == operand;
        case CompareOp::Gt: return subfield > operand;
        case CompareOp::Lt: return subfield < operand;
        case CompareOp::Always: return true;
    }
    return false;
}

std::string_view op_name(CompareOp op) {
    switch (op) {
        case CompareOp::Eq: return "EQ";
        case CompareOp::Gt: return "GT";
        case CompareOp::Lt: return "LT";
        case CompareOp::Always: return "ALWAYS";
    }
    return "?";
}

uint32_t encode(const SubRule& sr) {
    return uint32_t(sr.jump) << 23 | uint32_t(sr.selector & 0x0F) << 19 |
           uint32_t(uint8_t(sr.op) & 0x03) << 17 | uint32_t(sr.operand) << 9 |
           uint32_t(sr.address) << 1 | uint32_t(sr.action);
}

SubRule decode(uint32_t word) {
    SubRule sr;
    sr.jump = (word >> 23) & 1;
    sr.selector = (word >> 19) & 0x0F;
    sr.op = CompareOp((word >> 17) & 0x03);
    sr.operand = (word >> 9) & 0xFF;
    sr.address = (word >> 1) & 0xFF;
    sr.action = word & 1;
    return sr;
}

std::optional<uint8_t> subfield_value(const PacketHeader& h, uint8_t selector) {
    switch (selector) {
        case 0: return h.proto;
        case 1: return uint8_t(h.src_ip >> 24);
        case 2: return uint8_t(h.src_ip >> 16);
        case 3: return uint8_t(h.src_ip >> 8);
        case 4: return uint8_t(h.src_ip);
        case 5: return uint8_t(h.dst_ip >> 24);
        case 6: return uint8_t(h.dst_ip >> 16);
        case 7: return uint8_t(h.dst_ip >> 8);
        case 8: return uint8_t(h.dst_ip);
        case 9: return uint8_t(h.src_port >> 8);
        case 10: return uint8_t(h.src_port);
        case 11: return uint8_t(h.dst_port >> 8);
        case 12: return uint8_t(h.dst_port);
        default: return std::nullopt;
    }
}

std::string_view subfield_name(uint8_t selector) {
    static constexpr std::string_view names[13] = {
        "proto", "src[0]", "src[1]", "src[2]", "src[3]", "dst[0]", "dst[1]",
        "dst[2]", "dst[3]", "sport_hi", "sport_lo", "dport_hi", "dport_lo"};
    if (selector < kSubFieldCount) return names[selector];
    return "invalid";
}

ImageFormatError::ImageFormatError(int line, const std::string& msg)
    : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}

namespace {

std::string to_binary(uint32_t value, int bits) {
    std::string s(bits, '0');
    for (int i = 0; i < bits; ++i)
        if (value >> (bits - 1 - i) & 1) s[i] = '1';
    return s;
}

}  // namespace

void write_image(const MemoryImage& img, std::ostream& out) {
    for (size_t addr = 0; addr < img.words.size(); ++addr)
        out << to_binary(uint32_t(addr), 8) << ' ' << to_binary(encode(img.words[addr]), 24)
            << '\n';
}

std::string write_image_string(const MemoryImage& img) {
    std::ostringstream out;
    write_image(img, out);
    return out.str();
}

MemoryImage read_image(std::istream& in) {
    std::ostringstream buf;
    buf << in.rdbuf();
    return read_image_string(buf.str());
}

namespace {

bool parse_binary(std::string_view s, uint32_t& out) {
    uint32_t v = 0;
    for (char c : s) {
        if (c != '0' && c != '1') return false;
        v = v << 1 | uint32_t(c - '0');
    }
    out = v;
    return true;
}

}  // namespace

MemoryImage read_image_string(std::string_view text) {
    MemoryImage img;
    int line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        if (size_t hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        while (!raw.empty() && (raw.back() == ' ' || raw.back() == '\t' || raw.back() == '\r'))
            raw.remove_suffix(1);
        while (!raw.empty() && (raw.front() == ' ' || raw.front() == '\t')) raw.remove_prefix(1);
        if (raw.empty()) continue;

        size_t space = raw.find(' ');
        if (space == std::string_view::npos)
            throw ImageFormatError(line_no, "expected `address word`");
        std::string_view addr_s = raw.substr(0, space);
        std::string_view word_s = raw.substr(space + 1);
        while (!word_s.empty() && word_s.front() == ' ') word_s.remove_prefix(1);

        uint32_t addr = 0, word = 0;
        if (addr_s.size() != 8 || !parse_binary(addr_s, addr))
            throw ImageFormatError(line_no, "address not 8 binary digits");
        if (word_s.size() != 24 || !parse_binary(word_s, word))
            throw ImageFormatError(line_no, "word not 24 bits");
        if (img.words.size() >= kRulesMemoryWords)
            throw ImageFormatError(line_no, "more than 256 words");
        if (addr != img.words.size())
            throw ImageFormatError(
                line_no, addr < img.words.size() ? "duplicate or non-ascending address"
                                                 : "gap in addresses");
        img.words.push_back(decode(word));
    }
    if (img.words.empty()) throw ImageFormatError(line_no, "empty image");
    return img;
}

std::vector<Diagnostic> validate_image(const MemoryImage& img) {
    std::vector<Diagnostic> diags;
    const size_t size = img.words.size();

    auto hex_addr = [](size_t a) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "0x%02x", unsigned(a & 0xFF));
        return std::string(buf);
    };

    for (size_t addr = 0; addr < size; ++addr) {
        const SubRule& w = img.words[addr];
        if (w.selector >= kSubFieldCount)
            diags.push_back({uint16_t(addr), "selector " + std::to_string(w.selector) +
                                                 " out of range at " + hex_addr(addr)});

        // Live control edges only: an ALWAYS terminal's address field is dead.
        std::vector<size_t> targets;
        if (w.op != CompareOp::Always) targets.push_back(w.address);  // fail edge
        if (!w.action) targets.push_back(w.jump ? w.address : addr + 1);  // success edge
        if (targets.size() == 2 && targets[0] == targets[1]) targets.pop_back();

        for (size_t target : targets) {
            if (target <= addr)
                diags.push_back({uint16_t(addr), "backward edge at " + hex_addr(addr)});
            else if (target >= size)
                diags.push_back({uint16_t(addr), "fall-off-end reachable at " + hex_addr(addr)});
        }
    }

    const SubRule& last = img.words.back();
    if (!(last.action && last.op == CompareOp::Always))
        diags.push_back({uint16_t(size - 1), "final word not an ALWAYS terminal"});
    return diags;
}

std::string disassemble(const MemoryImage& img) {
    std::ostringstream out;
    char buf[128];
    for (size_t addr = 0; addr < img.words.size(); ++addr) {
        const SubRule& w = img.words[addr];
        const unsigned a = unsigned(addr & 0xFF);
        if (w.op == CompareOp::Always && w.action) {
            std::snprintf(buf, sizeof buf, "%02x: %06x  ALWAYS -> %s\n", a, encode(w),
                          w.jump ? "PERMIT" : "DENY");
        } else if (w.action) {
            std::snprintf(buf, sizeof buf, "%02x: %06x  %s %s 0x%02x  ok -> %s  fail -> 0x%02x\n",
                          a, encode(w), std::string(subfield_name(w.selector)).c_str(),
                          std::string(op_name(w.op)).c_str(), w.operand,
                          w.jump ? "PERMIT" : "DENY", w.address);
        } else {
            char ok_target[16];
            if (w.jump)
                std::snprintf(ok_target, sizeof ok_target, "0x%02x", w.address);
            else
                std::snprintf(ok_target, sizeof ok_target, "0x%02x", (a + 1) & 0xFF);
            std::snprintf(buf, sizeof buf, "%02x: %06x  %s %s 0x%02x  ok -> %s  fail -> 0x%02x\n",
                          a, encode(w), std::string(subfield_name(w.selector)).c_str(),
                          std::string(op_name(w.op)).c_str(), w.operand, ok_target, w.address);
        }
        out << buf;
    }
    return out.str();
}

}  // namespace pce
