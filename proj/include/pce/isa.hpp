// isa.hpp -- the 24-bit sub-rule instruction word, the selector map over the
// 13 header sub-fields, and the rules-memory image format.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pce/packet.hpp"

namespace pce {

// 2-bit comparator criteria. ALWAYS is the spare code; it implements
// wildcards and unconditional terminals.
enum class CompareOp : uint8_t { Eq = 0, Gt = 1, Lt = 2, Always = 3 };

bool compare(CompareOp op, uint8_t subfield, uint8_t operand);
std::string_view op_name(CompareOp op);

// One rules-memory word. Packed MSB-first as
//   jump(1) | selector(4) | operation(2) | operand(8) | address(8) | action(1)
// `address` is the fail edge (and the success target when jump=1 on a
// non-terminal). On a terminal (action=1) the jump bit carries the verdict:
// 1 = permit, 0 = deny.
struct SubRule {
    bool jump = false;
    uint8_t selector = 0;  // 0..15; only 0..12 are valid sub-fields
    CompareOp op = CompareOp::Eq;
    uint8_t operand = 0;
    uint8_t address = 0;
    bool action = false;

    friend auto operator<=>(const SubRule&, const SubRule&) = default;
};

uint32_t encode(const SubRule& sr);
SubRule decode(uint32_t word);  // low 24 bits; total function, exact inverse of encode

// Sub-field index assignment for the 4-bit selector mux:
//   0        protocol
//   1..4     source IP bytes, MSB first
//   5..8     destination IP bytes, MSB first
//   9,10     source port high/low byte
//   11,12    destination port high/low byte
//   13..15   invalid
inline constexpr int kSubFieldCount = 13;
inline constexpr std::size_t kRulesMemoryWords = 256;

std::optional<uint8_t> subfield_value(const PacketHeader& h, uint8_t selector);
std::string_view subfield_name(uint8_t selector);

// Up to 256 words based at address 0. Compiler-produced images always end in
// an ALWAYS terminal; hand-written ones may not and rely on the engine
// watchdog instead.
struct MemoryImage {
    std::vector<SubRule> words;

    friend auto operator<=>(const MemoryImage&, const MemoryImage&) = default;
};

class ImageFormatError : public std::runtime_error {
public:
    ImageFormatError(int line, const std::string& msg);
    int line() const { return line_; }

private:
    int line_;
};

// Text image format, one word per line, addresses consecutive from zero:
//   AAAAAAAA DDDDDDDDDDDDDDDDDDDDDDDD
// (8-bit binary address, space, 24-bit binary word, MSB first). `#` starts a
// comment. This format is the contract between `compile` and `run`.
void write_image(const MemoryImage& img, std::ostream& out);
std::string write_image_string(const MemoryImage& img);
MemoryImage read_image(std::istream& in);
MemoryImage read_image_string(std::string_view text);

struct Diagnostic {
    uint16_t address = 0;
    std::string message;
};

// Static checks: selector out of range, live backward edges (possible
// non-termination), reachable fall-off-the-end, missing ALWAYS terminal.
// Address fields of ALWAYS terminals are dead and are not checked.
std::vector<Diagnostic> validate_image(const MemoryImage& img);

std::string disassemble(const MemoryImage& img);

}  // namespace pce
