#include "majorca/emit.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace majorca {

namespace {

std::string hex(Word v) {
    std::ostringstream os;
    os << "0x" << std::hex << v;
    return os.str();
}

/// Body bytes of a frame: slot words at their offsets, fill elsewhere.
struct Piece {
    enum class Kind { word, text, fill } kind;
    Word value = 0;
    std::int64_t length = 0;
    std::string comment; // printed before the piece
};

std::vector<Piece> pieces(const Payload& p) {
    const unsigned wb = p.profile.word_bytes;
    std::vector<Piece> out;
    if (p.frames.empty()) return out;
    auto comment_of = [&](std::size_t i) {
        std::string c = p.frames[i].comment;
        if (i + 1 == p.frames.size() && !p.note.empty()) c += " # " + p.note;
        return c;
    };
    out.push_back({Piece::Kind::word, p.frames.front().gadget_address, wb, comment_of(0)});
    for (std::size_t i = 0; i < p.frames.size(); ++i) {
        const Frame& f = p.frames[i];
        std::map<std::int64_t, const Slot*> at;
        for (const auto& s : f.slots) at[s.offset] = &s;
        std::int64_t pos = 0;
        while (pos < f.body) {
            auto it = at.lower_bound(pos);
            std::int64_t next = it == at.end() ? f.body : std::min(it->first, f.body);
            if (next > pos) {
                if (!out.empty() && out.back().kind == Piece::Kind::fill && out.back().comment.empty())
                    out.back().length += next - pos;
                else out.push_back({Piece::Kind::fill, 0, next - pos, ""});
                pos = next;
                continue;
            }
            const Slot& s = *it->second;
            Piece piece{s.kind == Slot::Kind::text ? Piece::Kind::text : Piece::Kind::word, s.value, wb, ""};
            if (s.kind == Slot::Kind::next_ip && i + 1 < p.frames.size()) piece.comment = comment_of(i + 1);
            if (s.kind == Slot::Kind::fixed) piece.comment = "JOP # " + s.comment;
            out.push_back(piece);
            pos += wb;
        }
    }
    return out;
}

void check_word(const ArchProfile& profile, const BadBytes& bad, Word v, int frame, std::int64_t offset,
                const char* what) {
    if (!screen(v, profile.word_bytes, bad))
        throw LinearizeError(std::string(what) + " " + hex(v) + " in frame " + std::to_string(frame) + " at offset " +
                                 hex(static_cast<Word>(offset)) + " contains a restricted byte",
                             frame, offset);
}

} // namespace

std::vector<std::uint8_t> Payload::serialize() const {
    std::vector<std::uint8_t> out;
    for (const auto& piece : pieces(*this)) {
        if (piece.kind == Piece::Kind::fill) {
            out.insert(out.end(), static_cast<std::size_t>(piece.length), fill);
        } else {
            auto bytes = profile.encode(piece.value);
            out.insert(out.end(), bytes.begin(), bytes.end());
        }
    }
    return out;
}

Payload linearize(const ArchProfile& profile, const std::vector<const DagNode*>& schedule, const BadBytes& bad,
                  std::uint8_t fill, AddressScreen address_screen) {
    if (bad.contains(fill)) throw LinearizeError("fill byte is restricted", -1, 0);
    Payload p;
    p.profile = profile;
    p.bad = bad;
    p.fill = fill;
    const unsigned wb = profile.word_bytes;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const DagNode& n = *schedule[i];
        const int fi = static_cast<int>(i);
        Frame f;
        if (n.direct_target) {
            f.gadget_address = *n.direct_target;
            f.comment = "call " + hex(*n.direct_target);
            f.terminal = true;
            std::int64_t body = 0;
            for (const auto& s : n.stack_params) body = std::max(body, s.offset + static_cast<std::int64_t>(wb));
            f.body = body;
        } else {
            f.gadget_address = n.entry.address;
            f.comment = n.entry.asm_text;
            f.body = n.entry.frame.frame_size;
            f.terminal = !n.preserving();
            f.next_ip_slot = n.entry.frame.next_ip_slot;
            // a terminal jump may leave stack arguments for its target
            if (f.terminal) {
                for (const auto& s : n.stack_params) f.body = std::max(f.body, s.offset + static_cast<std::int64_t>(wb));
            }
            if (n.entry.frame.next_ip_slot && i + 1 < schedule.size()) {
                const DagNode& next = *schedule[i + 1];
                Word addr = next.direct_target ? *next.direct_target : next.entry.address;
                bool ok = next.direct_target ? screen(addr, wb, bad)
                                             : screen_address(profile, addr, bad, address_screen);
                if (!ok) check_word(profile, bad, addr, fi, *n.entry.frame.next_ip_slot, "next gadget address");
                f.slots.push_back({Slot::Kind::next_ip, *n.entry.frame.next_ip_slot, addr, ""});
            }
            for (const auto& fx : n.entry.frame.fixed) {
                if (!screen_address(profile, fx.value, bad, address_screen))
                    check_word(profile, bad, fx.value, fi, fx.offset, "JOP gadget address");
                f.slots.push_back({Slot::Kind::fixed, fx.offset, fx.value, fx.comment});
            }
        }
        if (i == 0 && !screen_address(profile, f.gadget_address, bad, address_screen))
            check_word(profile, bad, f.gadget_address, fi, -static_cast<std::int64_t>(wb), "first gadget address");
        for (const auto& s : n.stack_params) {
            check_word(profile, bad, s.value, fi, s.offset, "stack parameter");
            if (s.offset < 0 || s.offset + static_cast<std::int64_t>(wb) > f.body)
                throw LinearizeError("stack parameter outside the frame", fi, s.offset);
            f.slots.push_back({s.text ? Slot::Kind::text : Slot::Kind::value, s.offset, s.value, ""});
        }
        std::sort(f.slots.begin(), f.slots.end(), [](const Slot& a, const Slot& b) { return a.offset < b.offset; });
        for (std::size_t k = 1; k < f.slots.size(); ++k) {
            if (f.slots[k].offset < f.slots[k - 1].offset + static_cast<std::int64_t>(wb))
                throw LinearizeError("overlapping frame slots", fi, f.slots[k].offset);
        }
        if (f.terminal && i + 1 != schedule.size())
            throw LinearizeError("terminal gadget is not last", fi, 0);
        p.frames.push_back(std::move(f));
    }
    return p;
}

Payload concat(const std::vector<Payload>& parts) {
    Payload out;
    bool first = true;
    for (const auto& part : parts) {
        if (part.frames.empty()) continue;
        if (first) {
            out = part;
            first = false;
            continue;
        }
        if (part.profile.id != out.profile.id || !(part.bad == out.bad))
            throw Error("cannot concatenate payloads for different targets or restricted sets");
        Frame& last = out.frames.back();
        if (last.terminal || !last.next_ip_slot) throw Error("cannot append after a terminal frame");
        std::erase_if(last.slots, [](const Slot& s) { return s.kind == Slot::Kind::next_ip; });
        last.slots.push_back({Slot::Kind::next_ip, *last.next_ip_slot, part.frames.front().gadget_address, ""});
        std::sort(last.slots.begin(), last.slots.end(), [](const Slot& a, const Slot& b) { return a.offset < b.offset; });
        out.frames.insert(out.frames.end(), part.frames.begin(), part.frames.end());
        out.note = part.note;
    }
    return out;
}

std::string bytes_literal(const std::vector<std::uint8_t>& bytes) {
    std::string s = "b'";
    for (auto b : bytes) {
        if (b == '\\' || b == '\'') {
            s += '\\';
            s += static_cast<char>(b);
        } else if (b >= 0x20 && b < 0x7f) {
            s += static_cast<char>(b);
        } else {
            s += "\\x";
            s += "0123456789abcdef"[b >> 4];
            s += "0123456789abcdef"[b & 15];
        }
    }
    return s + "'";
}

std::string render_script(const Payload& p) {
    std::ostringstream os;
    const char* code = p.profile.word_bytes == 8 ? "Q" : "I";
    const char* order = p.profile.endian == Endian::little ? "<" : ">";
    os << "from struct import pack\n";
    os << "fill = " << bytes_literal({p.fill}) << "  # fill character";
    if (p.fill != 0x41) os << " (0x41 is restricted)";
    os << "\n";
    os << "chain = b''\n";
    auto list = pieces(p);
    for (const auto& piece : list) {
        if (!piece.comment.empty()) os << "# " << piece.comment << "\n";
        switch (piece.kind) {
        case Piece::Kind::fill: os << "chain += " << piece.length << " * fill\n"; break;
        case Piece::Kind::text: os << "chain += " << bytes_literal(p.profile.encode(piece.value)) << "\n"; break;
        case Piece::Kind::word: os << "chain += pack('" << order << code << "', " << hex(piece.value) << ")\n"; break;
        }
    }
    os << "import os, sys\n";
    os << "fp = os.fdopen(sys.stdout.fileno(), 'wb')\n";
    os << "fp.write(chain)\n";
    return os.str();
}

} // namespace majorca
