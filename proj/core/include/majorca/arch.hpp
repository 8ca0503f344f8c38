#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace majorca {

using Word = std::uint64_t;
using RegId = std::uint8_t;

enum class ArchId { x86_64, x86_32, mips32be };
enum class Endian { little, big };

std::string_view to_string(ArchId id);
ArchId parse_arch(std::string_view text);

/// A (possibly narrow) view of a full-width register.
struct RegRef {
    RegId reg = 0;
    std::uint8_t width = 0; // bytes

    friend bool operator==(const RegRef&, const RegRef&) = default;
};

/// Register file layout and calling conventions of one target.
struct ArchProfile {
    ArchId id = ArchId::x86_64;
    unsigned word_bytes = 8;
    Endian endian = Endian::little;
    std::vector<std::string> registers; // full-width names, index == RegId
    RegId sp = 0;
    RegId ip = 0;
    std::map<std::string, RegRef, std::less<>> subregs; // narrow aliases
    RegId syscall_number = 0;
    std::vector<RegId> syscall_args;
    std::vector<RegId> call_args; // empty: arguments go on the stack
    std::map<std::string, Word, std::less<>> syscall_table;
    /// Interrupt vector used for system calls, if the target traps via `int`.
    std::optional<std::uint32_t> syscall_interrupt;

    std::size_t reg_count() const { return registers.size(); }
    const std::string& reg_name(RegId r) const { return registers.at(r); }
    std::optional<RegId> find_reg(std::string_view name) const;
    /// Resolves a full or narrow register name.
    std::optional<RegRef> resolve(std::string_view name) const;
    /// Name for a register view; narrow views use their alias.
    std::string ref_name(RegRef ref) const;
    RegRef full(RegId r) const { return {r, static_cast<std::uint8_t>(word_bytes)}; }
    Word mask() const { return word_bytes == 8 ? ~Word{0} : (Word{1} << (8 * word_bytes)) - 1; }
    /// Registers that may carry data (everything but SP and IP).
    std::vector<RegId> data_regs() const;
    bool is_data_reg(RegId r) const { return r != sp && r != ip; }

    /// Encodes a word with the target byte order, truncated to `width` bytes.
    std::vector<std::uint8_t> encode(Word value, unsigned width) const;
    std::vector<std::uint8_t> encode(Word value) const { return encode(value, word_bytes); }
    Word decode(const std::uint8_t* bytes, unsigned width) const;
};

ArchProfile make_arch_profile(ArchId id);

inline Word width_mask(unsigned width) {
    return width >= 8 ? ~Word{0} : (Word{1} << (8 * width)) - 1;
}

} // namespace majorca
