#pragma once

#include <bitset>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "majorca/arch.hpp"
#include "majorca/microop.hpp"

namespace majorca {

/// Restricted byte values.
class BadBytes {
public:
    BadBytes() = default;
    BadBytes(std::initializer_list<std::uint8_t> bytes) {
        for (auto b : bytes) bits_.set(b);
    }

    /// Accepts hex byte tokens separated by spaces or commas ("00 2f",
    /// "0x00,0x2f") or a run of hex digit pairs ("002f").
    static BadBytes parse(std::string_view text);

    void add(std::uint8_t b) { bits_.set(b); }
    bool contains(std::uint8_t b) const { return bits_.test(b); }
    bool empty() const { return bits_.none(); }
    std::size_t size() const { return bits_.count(); }
    std::vector<std::uint8_t> list() const;
    std::string to_string() const; // "00 2f"

    bool clean(std::span<const std::uint8_t> bytes) const;

    friend bool operator==(const BadBytes&, const BadBytes&) = default;

private:
    std::bitset<256> bits_;
};

/// True iff none of the low `width` bytes of `value` is restricted.
bool screen(Word value, unsigned width, const BadBytes& bad);

enum class AddressScreen { full, significant };

/// Gadget address screening: the whole emitted word, or only the bytes up to
/// the most significant non-zero one.
bool screen_address(const ArchProfile& profile, Word address, const BadBytes& bad,
                    AddressScreen mode = AddressScreen::full);

using OperandPair = std::pair<Word, Word>;

/// lv + rv == value (mod 2^(8*width)) with both operands clean. Iterative
/// per-byte search with an explicit stack of (byte, lv, rv, carry) states.
std::optional<OperandPair> find_addends(Word value, unsigned width, const BadBytes& bad);

/// op(lv, rv) == value for op in {add, sub, xor_}.
std::optional<OperandPair> find_operands(Word value, unsigned width, const BadBytes& bad, BinOp op);

/// Smallest clean byte, preferring 0x41.
std::optional<std::uint8_t> pick_fill(const BadBytes& bad);

} // namespace majorca
