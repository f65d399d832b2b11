#include "pce/packet.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace pce {

namespace {

bool is_port_proto(uint8_t proto) { return proto == 6 || proto == 17; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool parse_u32(std::string_view s, uint32_t& out) {
    if (s.empty()) return false;
    uint32_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return false;
    out = v;
    return true;
}

uint16_t be16(const uint8_t* p) { return uint16_t(p[0]) << 8 | p[1]; }
uint32_t be32(const uint8_t* p) {
    return uint32_t(p[0]) << 24 | uint32_t(p[1]) << 16 | uint32_t(p[2]) << 8 | p[3];
}

}  // namespace

PacketHeader make_header(uint8_t proto, uint32_t src_ip, uint32_t dst_ip,
                         uint16_t src_port, uint16_t dst_port) {
    if (!is_port_proto(proto)) {
        src_port = 0;
        dst_port = 0;
    }
    return {proto, src_ip, dst_ip, src_port, dst_port};
}

ParseError::ParseError(int line, int col, const std::string& msg)
    : std::runtime_error(col > 0 ? "line " + std::to_string(line) + ", col " + std::to_string(col) +
                                       ": " + msg
                                 : "line " + std::to_string(line) + ": " + msg),
      line_(line),
      col_(col) {}

std::string format_ipv4(uint32_t addr) {
    std::string s;
    s.reserve(15);
    for (int shift = 24; shift >= 0; shift -= 8) {
        s += std::to_string((addr >> shift) & 0xFF);
        if (shift) s += '.';
    }
    return s;
}

bool parse_ipv4(std::string_view text, uint32_t& out) {
    uint32_t addr = 0;
    int octets = 0;
    while (octets < 4) {
        size_t dot = text.find('.');
        std::string_view part = octets == 3 ? text : text.substr(0, dot);
        if (octets < 3 && dot == std::string_view::npos) return false;
        uint32_t v = 0;
        if (!parse_u32(part, v) || v > 255) return false;
        addr = addr << 8 | v;
        if (octets < 3) text.remove_prefix(dot + 1);
        ++octets;
    }
    out = addr;
    return true;
}

std::string proto_name(uint8_t proto) {
    switch (proto) {
        case 1: return "icmp";
        case 6: return "tcp";
        case 17: return "udp";
        default: return std::to_string(proto);
    }
}

std::optional<uint8_t> proto_from_name(std::string_view s) {
    std::string lower(s);
    for (char& c : lower) c = char(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "tcp") return 6;
    if (lower == "udp") return 17;
    if (lower == "icmp") return 1;
    uint32_t v = 0;
    if (parse_u32(lower, v) && v <= 255) return uint8_t(v);
    return std::nullopt;
}

std::string format_csv(const PacketHeader& h) {
    return proto_name(h.proto) + "," + format_ipv4(h.src_ip) + "," + format_ipv4(h.dst_ip) + "," +
           std::to_string(h.src_port) + "," + std::to_string(h.dst_port);
}

std::string format_5tuple(const PacketHeader& h) {
    return proto_name(h.proto) + " " + format_ipv4(h.src_ip) + ":" + std::to_string(h.src_port) +
           " " + format_ipv4(h.dst_ip) + ":" + std::to_string(h.dst_port);
}

std::vector<IngestRecord> parse_csv(std::string_view text, CsvMode mode) {
    std::vector<IngestRecord> records;
    int line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        if (size_t hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        std::string_view line = trim(raw);
        if (line.empty()) continue;

        std::string origin = "csv:" + std::to_string(line_no);
        auto fail = [&](const std::string& msg) -> std::optional<IngestRecord> {
            if (mode == CsvMode::Strict) throw ParseError(line_no, 0, msg);
            return IngestRecord{std::nullopt, origin, msg};
        };

        std::vector<std::string_view> fields;
        std::string_view rest = line;
        while (true) {
            size_t comma = rest.find(',');
            fields.push_back(trim(rest.substr(0, comma)));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }

        if (fields.size() != 5) {
            records.push_back(*fail("expected 5 fields, got " + std::to_string(fields.size())));
            continue;
        }
        auto proto = proto_from_name(fields[0]);
        if (!proto) {
            records.push_back(*fail("bad protocol '" + std::string(fields[0]) + "'"));
            continue;
        }
        uint32_t src = 0, dst = 0;
        if (!parse_ipv4(fields[1], src)) {
            records.push_back(*fail("bad source address '" + std::string(fields[1]) + "'"));
            continue;
        }
        if (!parse_ipv4(fields[2], dst)) {
            records.push_back(*fail("bad destination address '" + std::string(fields[2]) + "'"));
            continue;
        }
        uint32_t sport = 0, dport = 0;
        if (!parse_u32(fields[3], sport) || sport > 65535) {
            records.push_back(*fail("port out of range"));
            continue;
        }
        if (!parse_u32(fields[4], dport) || dport > 65535) {
            records.push_back(*fail("port out of range"));
            continue;
        }
        records.push_back(IngestRecord{
            make_header(*proto, src, dst, uint16_t(sport), uint16_t(dport)), origin, ""});
    }
    return records;
}

IngestRecord parse_frame(std::span<const uint8_t> bytes, std::string origin) {
    auto non_classifiable = [&](const char* reason) {
        return IngestRecord{std::nullopt, origin, reason};
    };

    if (bytes.size() < 14) return non_classifiable("truncated");
    uint16_t ethertype = be16(bytes.data() + 12);
    if (ethertype != 0x0800) return non_classifiable("non-IPv4 ethertype");

    if (bytes.size() < 14 + 20) return non_classifiable("truncated");
    const uint8_t* ip = bytes.data() + 14;
    uint8_t version = ip[0] >> 4;
    uint8_t ihl = ip[0] & 0x0F;
    if (version != 4 || ihl < 5) return non_classifiable("bad ip header");
    size_t ip_header_len = size_t(ihl) * 4;
    if (bytes.size() < 14 + ip_header_len) return non_classifiable("truncated");

    // Fragments past the first never carry the transport header.
    uint16_t frag = be16(ip + 6);
    if ((frag & 0x1FFF) != 0) return non_classifiable("fragment");

    uint8_t proto = ip[9];
    uint32_t src = be32(ip + 12);
    uint32_t dst = be32(ip + 16);

    uint16_t sport = 0, dport = 0;
    if (proto == 6 || proto == 17) {
        const uint8_t* transport = ip + ip_header_len;
        if (bytes.size() < 14 + ip_header_len + 4) return non_classifiable("truncated");
        sport = be16(transport);
        dport = be16(transport + 2);
    }
    return IngestRecord{make_header(proto, src, dst, sport, dport), std::move(origin), ""};
}

namespace {

// Classic pcap global header fields after the magic, already byte-swapped if
// the capture machine's endianness differs from the reader's view.
uint32_t pcap_u32(const uint8_t* p, bool swap) {
    uint32_t v = uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
    if (swap) v = __builtin_bswap32(v);
    return v;
}

}  // namespace

std::vector<IngestRecord> read_pcap(std::span<const uint8_t> bytes) {
    if (bytes.size() < 24) throw PcapError("truncated pcap global header");
    uint32_t magic = pcap_u32(bytes.data(), false);
    bool swap = false;
    if (magic == 0xa1b2c3d4) {
        swap = false;
    } else if (magic == 0xd4c3b2a1) {
        swap = true;
    } else {
        throw PcapError("bad pcap magic");
    }
    uint32_t link_type = pcap_u32(bytes.data() + 20, swap);
    if (link_type != 1) {
        throw PcapError("unsupported link type " + std::to_string(link_type) + " (expected 1)");
    }

    std::vector<IngestRecord> records;
    size_t pos = 24;
    size_t index = 0;
    while (pos < bytes.size()) {
        if (bytes.size() - pos < 16) throw PcapError("truncated pcap record header");
        uint32_t caplen = pcap_u32(bytes.data() + pos + 8, swap);
        pos += 16;
        if (bytes.size() - pos < caplen) throw PcapError("truncated pcap record body");
        records.push_back(
            parse_frame(bytes.subspan(pos, caplen), "pcap:" + std::to_string(index)));
        pos += caplen;
        ++index;
    }
    return records;
}

std::vector<IngestRecord> read_pcap_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PcapError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string data = buf.str();
    return read_pcap(std::span<const uint8_t>(
        reinterpret_cast<const uint8_t*>(data.data()), data.size()));
}

}  // namespace pce
