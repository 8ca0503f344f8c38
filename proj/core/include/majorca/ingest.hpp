#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "majorca/arch.hpp"
#include "majorca/microop.hpp"

namespace majorca {

struct RawGadget {
    Word address = 0;
    std::string asm_text;
    std::vector<std::uint8_t> bytes; // empty for corpus input
    std::vector<MicroOp> ops;
};

/// Half-open address range [begin, end).
struct AddressRange {
    Word begin = 0;
    Word end = 0;
    bool contains(Word a) const { return a >= begin && a < end; }
    friend bool operator==(const AddressRange&, const AddressRange&) = default;
};

/// Named function entry point (e.g. a libc wrapper for a system call).
struct FunctionSymbol {
    std::string name;
    Word address = 0;
    friend bool operator==(const FunctionSymbol&, const FunctionSymbol&) = default;
};

struct Corpus {
    ArchProfile profile;
    Word base = 0;
    std::vector<AddressRange> writable;
    std::vector<FunctionSymbol> functions;
    std::vector<RawGadget> gadgets;
    std::vector<std::string> skipped; // diagnostics of lines dropped in lenient mode
};

/// Decodes `;`-separated instructions. x86 uses Intel operand order; MIPS uses
/// `$`-prefixed registers. MIPS delay slots after jr/jalr are hoisted above the
/// jump. Throws ParseError or UnsupportedError.
std::vector<MicroOp> decode_asm(const ArchProfile& profile, std::string_view text);

/// Inverse of decode_asm on its image.
std::string render_asm(const ArchProfile& profile, const std::vector<MicroOp>& ops);

/// Corpus text: `arch=`, `base=`, `writable=lo-hi` and `func=name:addr` header
/// lines, then `0x<addr>: <asm>` gadget lines. `#` starts a comment.
Corpus parse_corpus(std::string_view text, bool lenient = false);
std::string format_corpus(const Corpus& corpus);

/// Back-scan of a flat x86 image from every ret, jmp/call reg, syscall and
/// (x86_32) int 0x80 byte pattern.
std::vector<RawGadget> scan_binary(const ArchProfile& profile, std::span<const std::uint8_t> image, Word base,
                                   unsigned depth_bytes = 40);

/// Decodes one x86 instruction at `code` into Intel text. Returns the length,
/// or 0 when the bytes are outside the supported subset.
std::size_t decode_x86_instruction(const ArchProfile& profile, std::span<const std::uint8_t> code,
                                   std::string& text);

} // namespace majorca
