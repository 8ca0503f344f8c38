#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "majorca/badchar.hpp"
#include "majorca/dag.hpp"
#include "majorca/error.hpp"

namespace majorca {

struct Slot {
    enum class Kind { value, text, next_ip, fixed };
    Kind kind = Kind::value;
    std::int64_t offset = 0;
    Word value = 0;
    std::string comment; // fixed slots: the JOP gadget text
};

struct Frame {
    Word gadget_address = 0;
    std::string comment;
    /// Body bytes after the gadget address word (the entry's frame size).
    std::int64_t body = 0;
    std::vector<Slot> slots;
    bool terminal = false;
    std::optional<std::int64_t> next_ip_slot;

    /// Frame size including the leading address word.
    std::int64_t size(unsigned word_bytes) const { return body + word_bytes; }
};

struct Payload {
    ArchProfile profile;
    BadBytes bad;
    std::uint8_t fill = 0x41;
    std::vector<Frame> frames;
    std::string note; // appended to the last frame comment (e.g. the goal)

    std::vector<std::uint8_t> serialize() const;
};

class LinearizeError : public Error {
public:
    LinearizeError(const std::string& what, int frame, std::int64_t offset)
        : Error(what), frame_(frame), offset_(offset) {}
    int frame() const { return frame_; }
    std::int64_t offset() const { return offset_; }

private:
    int frame_;
    std::int64_t offset_;
};

/// Frames in schedule order; each next-IP slot gets the following frame's
/// address. Throws LinearizeError when a word or the fill byte is not clean.
Payload linearize(const ArchProfile& profile, const std::vector<const DagNode*>& schedule, const BadBytes& bad,
                  std::uint8_t fill = 0x41, AddressScreen address_screen = AddressScreen::full);

/// Frame-order concatenation. Throws Error when a non-final part ends in a
/// terminal frame.
Payload concat(const std::vector<Payload>& parts);

/// Builder script: `from struct import pack`, a `fill` definition, commented
/// `pack` lines, bytes literals for text, `n * fill` runs, and a raw write of
/// `chain` to stdout.
std::string render_script(const Payload& payload);

/// Python bytes literal, e.g. b'/bin/sh\x00'.
std::string bytes_literal(const std::vector<std::uint8_t>& bytes);

} // namespace majorca
