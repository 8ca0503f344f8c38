#include "majorca/badchar.hpp"

#include <cctype>
#include <charconv>
#include <sstream>
#include <tuple>

#include "majorca/error.hpp"

namespace majorca {

BadBytes BadBytes::parse(std::string_view text) {
    BadBytes out;
    std::string token;
    auto flush = [&]() {
        std::string_view t = token;
        if (t.starts_with("0x") || t.starts_with("0X")) t.remove_prefix(2);
        if (t.starts_with("\\x")) t.remove_prefix(2);
        if (t.empty()) {
            token.clear();
            return;
        }
        if (t.size() % 2 != 0) throw Error("bad byte list: odd hex token '" + token + "'");
        for (std::size_t i = 0; i < t.size(); i += 2) {
            unsigned v = 0;
            auto [p, ec] = std::from_chars(t.data() + i, t.data() + i + 2, v, 16);
            if (ec != std::errc{} || p != t.data() + i + 2) throw Error("bad byte list: '" + token + "' is not hex");
            out.add(static_cast<std::uint8_t>(v));
        }
        token.clear();
    };
    for (char ch : text) {
        if (ch == ',' || std::isspace(static_cast<unsigned char>(ch))) flush();
        else token += ch;
    }
    flush();
    return out;
}

std::vector<std::uint8_t> BadBytes::list() const {
    std::vector<std::uint8_t> out;
    for (unsigned b = 0; b < 256; ++b) {
        if (bits_.test(b)) out.push_back(static_cast<std::uint8_t>(b));
    }
    return out;
}

std::string BadBytes::to_string() const {
    std::ostringstream os;
    bool first = true;
    for (auto b : list()) {
        os << (first ? "" : " ") << std::hex << (b < 16 ? "0" : "") << static_cast<unsigned>(b);
        first = false;
    }
    return os.str();
}

bool BadBytes::clean(std::span<const std::uint8_t> bytes) const {
    for (auto b : bytes) {
        if (bits_.test(b)) return false;
    }
    return true;
}

bool screen(Word value, unsigned width, const BadBytes& bad) {
    for (unsigned i = 0; i < width; ++i) {
        if (bad.contains(static_cast<std::uint8_t>((value >> (8 * i)) & 0xff))) return false;
    }
    return true;
}

bool screen_address(const ArchProfile& profile, Word address, const BadBytes& bad, AddressScreen mode) {
    if (mode == AddressScreen::full) return screen(address, profile.word_bytes, bad);
    unsigned width = 1;
    while (width < profile.word_bytes && (address >> (8 * width)) != 0) ++width;
    return screen(address, width, bad);
}

std::optional<OperandPair> find_addends(Word value, unsigned width, const BadBytes& bad) {
    struct State {
        unsigned i;
        Word lv, rv;
        unsigned carry;
    };
    std::vector<State> stack{{0, 0, 0, 0}};
    auto ok = [&](unsigned a, unsigned b) {
        return !bad.contains(static_cast<std::uint8_t>(a)) && !bad.contains(static_cast<std::uint8_t>(b));
    };
    while (!stack.empty()) {
        auto [i, lv0, rv0, carry] = stack.back();
        stack.pop_back();
        const unsigned c = (value >> (8 * i)) & 255;
        const unsigned d = (256 + c - carry) % 256;
        // without overflow
        if (carry == 0 || c != 0) {
            for (unsigned a = 0; a <= d / 2; ++a) {
                unsigned b = (d - a) % 256;
                if (!ok(a, b)) continue;
                Word lv = lv0 | (Word{a} << (8 * i));
                Word rv = rv0 | (Word{b} << (8 * i));
                if (i + 1 == width) return OperandPair{lv, rv};
                stack.push_back({i + 1, lv, rv, 0});
                break;
            }
        }
        // with overflow
        if (carry != 0 || c != 255) {
            unsigned la = c != 0 ? d / 2 : 0;
            for (unsigned a = 128 + la; a <= 255; ++a) {
                unsigned b = (256 + d - a) % 256;
                if (!ok(a, b)) continue;
                Word lv = lv0 | (Word{a} << (8 * i));
                Word rv = rv0 | (Word{b} << (8 * i));
                if (i + 1 == width) return OperandPair{lv, rv};
                stack.push_back({i + 1, lv, rv, 1});
                break;
            }
        }
    }
    return std::nullopt;
}

namespace {

/// lv - rv == value, per byte with borrow; same stack discipline as the
/// addend search, one child per borrow outcome.
std::optional<OperandPair> find_subtrahend(Word value, unsigned width, const BadBytes& bad) {
    struct State {
        unsigned i;
        Word lv, rv;
        unsigned borrow;
    };
    std::vector<State> stack{{0, 0, 0, 0}};
    while (!stack.empty()) {
        auto [i, lv0, rv0, borrow] = stack.back();
        stack.pop_back();
        const int c = static_cast<int>((value >> (8 * i)) & 255);
        bool seen[2] = {false, false};
        for (int a = 0; a < 256 && !(seen[0] && seen[1]); ++a) {
            if (bad.contains(static_cast<std::uint8_t>(a))) continue;
            int b = (a - static_cast<int>(borrow) - c + 512) % 256;
            if (bad.contains(static_cast<std::uint8_t>(b))) continue;
            unsigned out = a - static_cast<int>(borrow) - b < 0 ? 1 : 0;
            if (seen[out]) continue;
            seen[out] = true;
            Word lv = lv0 | (Word(a) << (8 * i));
            Word rv = rv0 | (Word(b) << (8 * i));
            if (i + 1 == width) return OperandPair{lv, rv};
            stack.push_back({i + 1, lv, rv, out});
        }
    }
    return std::nullopt;
}

std::optional<OperandPair> find_xor(Word value, unsigned width, const BadBytes& bad) {
    Word lv = 0, rv = 0;
    for (unsigned i = 0; i < width; ++i) {
        unsigned c = (value >> (8 * i)) & 255;
        bool found = false;
        for (unsigned a = 0; a < 256; ++a) {
            unsigned b = a ^ c;
            if (bad.contains(static_cast<std::uint8_t>(a)) || bad.contains(static_cast<std::uint8_t>(b))) continue;
            lv |= Word{a} << (8 * i);
            rv |= Word{b} << (8 * i);
            found = true;
            break;
        }
        if (!found) return std::nullopt;
    }
    return OperandPair{lv, rv};
}

} // namespace

std::optional<OperandPair> find_operands(Word value, unsigned width, const BadBytes& bad, BinOp op) {
    value &= width_mask(width);
    switch (op) {
    case BinOp::add: return find_addends(value, width, bad);
    case BinOp::sub: return find_subtrahend(value, width, bad);
    case BinOp::xor_: return find_xor(value, width, bad);
    default: return std::nullopt;
    }
}

std::optional<std::uint8_t> pick_fill(const BadBytes& bad) {
    if (!bad.contains(0x41)) return 0x41;
    for (unsigned b = 0; b < 256; ++b) {
        if (!bad.contains(static_cast<std::uint8_t>(b))) return static_cast<std::uint8_t>(b);
    }
    return std::nullopt;
}

} // namespace majorca
