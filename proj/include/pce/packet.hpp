// packet.hpp -- packet headers and ingestion from CSV, raw Ethernet frames, and pcap files.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pce {

// The five header fields inspected by the engine. Protocols without a
// transport port (anything other than TCP/UDP) carry src_port = dst_port = 0.
struct PacketHeader {
    uint8_t proto = 0;
    uint32_t src_ip = 0;
    uint32_t dst_ip = 0;
    uint16_t src_port = 0;
    uint16_t dst_port = 0;

    friend auto operator<=>(const PacketHeader&, const PacketHeader&) = default;
};

// Builds a header enforcing the portless-protocol invariant.
PacketHeader make_header(uint8_t proto, uint32_t src_ip, uint32_t dst_ip,
                         uint16_t src_port, uint16_t dst_port);

// One ingested record: either a classifiable header or a marker explaining
// why the source bytes could not be reduced to a 5-tuple.
struct IngestRecord {
    std::optional<PacketHeader> header;
    std::string origin;  // source locator, e.g. "csv:3" or "pcap:0"
    std::string reason;  // set iff header is absent

    bool classifiable() const { return header.has_value(); }
};

class ParseError : public std::runtime_error {
public:
    ParseError(int line, int col, const std::string& msg);
    int line() const { return line_; }
    int col() const { return col_; }

private:
    int line_;
    int col_;
};

enum class CsvMode { Strict, Lenient };

// Lines of `proto,src_ip,dst_ip,src_port,dst_port`; `#` comments and blank
// lines are skipped. Strict mode throws ParseError on the first bad line,
// lenient mode yields a NonClassifiable record instead.
std::vector<IngestRecord> parse_csv(std::string_view text, CsvMode mode = CsvMode::Strict);

// One Ethernet II frame. Never reads past the span; anything that is not a
// whole, unfragmented IPv4 packet becomes a NonClassifiable record.
IngestRecord parse_frame(std::span<const uint8_t> bytes, std::string origin = "frame");

class PcapError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Classic pcap only (magic 0xa1b2c3d4 in either byte order, link type 1).
// File-level problems throw PcapError; per-frame problems become
// NonClassifiable records.
std::vector<IngestRecord> read_pcap(std::span<const uint8_t> bytes);
std::vector<IngestRecord> read_pcap_file(const std::string& path);

// Formatting / small parse helpers shared by the rules DSL and the CLI.
std::string format_ipv4(uint32_t addr);
bool parse_ipv4(std::string_view text, uint32_t& out);
std::string proto_name(uint8_t proto);                       // "tcp", "udp", "icmp" or decimal
std::optional<uint8_t> proto_from_name(std::string_view s);  // names or decimal, else nullopt
std::string format_csv(const PacketHeader& h);
std::string format_5tuple(const PacketHeader& h);  // "tcp 1.2.3.4:25 5.6.7.8:80"

}  // namespace pce
