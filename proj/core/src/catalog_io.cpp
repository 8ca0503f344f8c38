#include <charconv>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "majorca/catalog.hpp"
#include "majorca/error.hpp"

namespace majorca {

namespace {

constexpr std::string_view kMagic = "majorca-catalog v1";

std::string hex(Word v) {
    std::ostringstream os;
    os << "0x" << std::hex << v;
    return os.str();
}

std::string shex(std::int64_t v) { return v < 0 ? "-" + hex(static_cast<Word>(-v)) : hex(static_cast<Word>(v)); }

Word parse_word(std::string_view s, int line) {
    if (s.starts_with("0x")) s.remove_prefix(2);
    Word v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) throw ParseError("bad hex number", line, 1);
    return v;
}

std::int64_t parse_signed(std::string_view s, int line) {
    bool neg = s.starts_with("-");
    if (neg) s.remove_prefix(1);
    auto v = static_cast<std::int64_t>(parse_word(s, line));
    return neg ? -v : v;
}

std::string regs_text(const ArchProfile& p, RegSet s) {
    std::string out;
    for (RegId r : regs_of(s)) out += (out.empty() ? "" : ",") + p.reg_name(r);
    return out.empty() ? "-" : out;
}

RegId parse_reg(const ArchProfile& p, std::string_view s, int line) {
    auto r = p.find_reg(s);
    if (!r) throw ParseError("unknown register '" + std::string(s) + "'", line, 1);
    return *r;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        auto next = s.find(sep, pos);
        if (next == std::string_view::npos) next = s.size();
        if (next > pos) out.push_back(s.substr(pos, next - pos));
        pos = next + 1;
    }
    return out;
}

std::optional<BinOp> parse_op(std::string_view s) {
    for (BinOp op : {BinOp::add, BinOp::sub, BinOp::xor_, BinOp::and_, BinOp::or_, BinOp::neg, BinOp::sltu}) {
        if (to_string(op) == s) return op;
    }
    return std::nullopt;
}

} // namespace

void write_catalog(std::ostream& os, const Catalog& cat) {
    const ArchProfile& p = cat.profile;
    os << kMagic << "\n";
    os << "arch=" << to_string(p.id) << "\n";
    for (const auto& r : cat.writable) os << "writable=" << hex(r.begin) << "-" << hex(r.end) << "\n";
    for (const auto& f : cat.functions) os << "func=" << f.name << ":" << hex(f.address) << "\n";
    for (const auto& g : cat.gadgets) os << "gadget " << hex(g.address) << " " << g.asm_text << "\n";
    for (const auto& e : cat.entries()) {
        const Params& q = e.params;
        os << "entry " << hex(e.address) << " " << to_string(e.kind);
        if (e.jop_address) os << " jop=" << hex(*e.jop_address);
        if (q.in) os << " in=" << p.reg_name(*q.in);
        if (q.in2) os << " in2=" << p.reg_name(*q.in2);
        if (q.out) os << " out=" << p.reg_name(*q.out);
        if (q.addr) os << " addr=" << p.reg_name(*q.addr);
        if (q.off) os << " off=" << shex(q.off);
        if (q.val) os << " val=" << hex(q.val);
        os << " op=" << to_string(q.op);
        if (q.size) os << " size=" << q.size;
        if (!q.loads.empty()) {
            os << " loads=";
            for (std::size_t i = 0; i < q.loads.size(); ++i)
                os << (i ? "," : "") << p.reg_name(q.loads[i].reg) << "@" << shex(q.loads[i].offset);
        }
        os << " clobbers=" << regs_text(p, e.clobbers);
        os << " frame=" << hex(static_cast<Word>(e.frame.frame_size));
        if (e.frame.next_ip_slot) os << " next=" << hex(static_cast<Word>(*e.frame.next_ip_slot));
        for (const auto& f : e.frame.fixed) os << " fixed=" << hex(static_cast<Word>(f.offset)) << ":" << hex(f.value);
        os << " score=" << std::setprecision(17) << e.score << "\n";
    }
}

Catalog read_catalog(std::istream& is) {
    std::string line;
    int line_no = 0;
    if (!std::getline(is, line) || line != kMagic) throw ParseError("missing '" + std::string(kMagic) + "' header", 1, 1);
    ++line_no;
    Catalog cat;
    bool have_arch = false;
    std::vector<SemanticEntry> entries;
    std::map<Word, const RawGadget*> gadgets;

    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        std::string_view s = line;
        if (s.starts_with("arch=")) {
            cat.profile = make_arch_profile(parse_arch(s.substr(5)));
            have_arch = true;
        } else if (s.starts_with("writable=")) {
            auto parts = split(s.substr(9), '-');
            if (parts.size() != 2) throw ParseError("bad writable range", line_no, 10);
            cat.writable.push_back({parse_word(parts[0], line_no), parse_word(parts[1], line_no)});
        } else if (s.starts_with("func=")) {
            auto v = s.substr(5);
            auto c = v.rfind(':');
            if (c == std::string_view::npos) throw ParseError("bad func entry", line_no, 6);
            cat.functions.push_back({std::string(v.substr(0, c)), parse_word(v.substr(c + 1), line_no)});
        } else if (s.starts_with("gadget ")) {
            if (!have_arch) throw ParseError("gadget before arch=", line_no, 1);
            s.remove_prefix(7);
            auto sp = s.find(' ');
            if (sp == std::string_view::npos) throw ParseError("bad gadget record", line_no, 8);
            RawGadget g;
            g.address = parse_word(s.substr(0, sp), line_no);
            g.asm_text = std::string(s.substr(sp + 1));
            try {
                g.ops = decode_asm(cat.profile, g.asm_text);
            } catch (const Error& e) {
                throw ParseError(e.what(), line_no, static_cast<int>(sp + 9));
            }
            cat.gadgets.push_back(std::move(g));
        } else if (s.starts_with("entry ")) {
            auto tokens = split(s.substr(6), ' ');
            if (tokens.size() < 2) throw ParseError("bad entry record", line_no, 7);
            SemanticEntry e;
            e.address = parse_word(tokens[0], line_no);
            auto kind = parse_gadget_kind(tokens[1]);
            if (!kind) throw ParseError("unknown gadget kind '" + std::string(tokens[1]) + "'", line_no, 1);
            e.kind = *kind;
            for (std::size_t i = 2; i < tokens.size(); ++i) {
                auto eq = tokens[i].find('=');
                if (eq == std::string_view::npos) throw ParseError("bad field '" + std::string(tokens[i]) + "'", line_no, 1);
                auto key = tokens[i].substr(0, eq);
                auto val = tokens[i].substr(eq + 1);
                Params& q = e.params;
                if (key == "jop") e.jop_address = parse_word(val, line_no);
                else if (key == "in") q.in = parse_reg(cat.profile, val, line_no);
                else if (key == "in2") q.in2 = parse_reg(cat.profile, val, line_no);
                else if (key == "out") q.out = parse_reg(cat.profile, val, line_no);
                else if (key == "addr") q.addr = parse_reg(cat.profile, val, line_no);
                else if (key == "off") q.off = parse_signed(val, line_no);
                else if (key == "val") q.val = parse_word(val, line_no);
                else if (key == "op") {
                    auto op = parse_op(val);
                    if (!op) throw ParseError("unknown op", line_no, 1);
                    q.op = *op;
                } else if (key == "size") q.size = static_cast<unsigned>(parse_word(val, line_no));
                else if (key == "loads") {
                    for (auto item : split(val, ',')) {
                        auto at = item.find('@');
                        if (at == std::string_view::npos) throw ParseError("bad load", line_no, 1);
                        q.loads.push_back({parse_reg(cat.profile, item.substr(0, at), line_no),
                                           parse_signed(item.substr(at + 1), line_no)});
                    }
                } else if (key == "clobbers") {
                    if (val != "-") {
                        for (auto r : split(val, ',')) e.clobbers |= reg_bit(parse_reg(cat.profile, r, line_no));
                    }
                } else if (key == "frame") e.frame.frame_size = static_cast<std::int64_t>(parse_word(val, line_no));
                else if (key == "next") e.frame.next_ip_slot = static_cast<std::int64_t>(parse_word(val, line_no));
                else if (key == "fixed") {
                    auto c = val.find(':');
                    if (c == std::string_view::npos) throw ParseError("bad fixed slot", line_no, 1);
                    e.frame.fixed.push_back({static_cast<std::int64_t>(parse_word(val.substr(0, c), line_no)),
                                             parse_word(val.substr(c + 1), line_no), ""});
                } else if (key == "score") {
                    e.score = std::stod(std::string(val));
                } else {
                    throw ParseError("unknown field '" + std::string(key) + "'", line_no, 1);
                }
            }
            entries.push_back(std::move(e));
        } else {
            throw ParseError("unrecognised catalog line", line_no, 1);
        }
    }
    if (!have_arch) throw ParseError("missing arch= line", line_no, 1);

    for (const auto& g : cat.gadgets) gadgets.emplace(g.address, &g);
    auto text_of = [&](Word a) -> const RawGadget& {
        auto it = gadgets.find(a);
        if (it == gadgets.end()) throw Error("catalog entry refers to unknown gadget " + hex(a));
        return *it->second;
    };
    for (auto& e : entries) {
        const RawGadget& g = text_of(e.address);
        e.asm_text = g.asm_text;
        e.ops = g.ops;
        if (e.jop_address) {
            const RawGadget& j = text_of(*e.jop_address);
            e.jop_asm = j.asm_text;
            e.asm_text += " # " + j.asm_text;
            const TermKind lt = terminator_of(g.ops).kind;
            e.ops.pop_back();
            if (lt == TermKind::ret) e.ops.push_back(AdjustSP{static_cast<std::int64_t>(cat.profile.word_bytes)});
            e.ops.insert(e.ops.end(), j.ops.begin(), j.ops.end());
            for (auto& f : e.frame.fixed) f.comment = j.asm_text;
        }
    }
    cat.set_entries(std::move(entries));
    return cat;
}

} // namespace majorca
