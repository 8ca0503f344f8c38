#include <charconv>
#include <sstream>

#include "majorca/error.hpp"
#include "majorca/ingest.hpp"

namespace majorca {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::optional<Word> parse_hex(std::string_view s) {
    s = trim(s);
    if (s.starts_with("0x") || s.starts_with("0X")) s.remove_prefix(2);
    if (s.empty()) return std::nullopt;
    Word v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
    if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
    return v;
}

std::string hex(Word v) {
    std::ostringstream os;
    os << "0x" << std::hex << v;
    return os.str();
}

} // namespace

Corpus parse_corpus(std::string_view text, bool lenient) {
    Corpus corpus;
    bool have_arch = false;
    bool in_body = false;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        auto colon = line.find(':');
        auto eq = line.find('=');
        if (eq != std::string_view::npos && (colon == std::string_view::npos || eq < colon)) {
            if (in_body) throw ParseError("header line after gadget lines", line_no, 1);
            std::string_view key = trim(line.substr(0, eq));
            std::string_view value = trim(line.substr(eq + 1));
            if (key == "arch") {
                corpus.profile = make_arch_profile(parse_arch(value));
                have_arch = true;
            } else if (key == "base") {
                auto v = parse_hex(value);
                if (!v) throw ParseError("bad base address", line_no, static_cast<int>(eq + 2));
                corpus.base = *v;
            } else if (key == "writable") {
                auto dash = value.find('-');
                auto lo = parse_hex(value.substr(0, dash));
                auto hi = dash == std::string_view::npos ? std::nullopt : parse_hex(value.substr(dash + 1));
                if (!lo || !hi || *hi <= *lo) throw ParseError("bad writable range", line_no, static_cast<int>(eq + 2));
                corpus.writable.push_back({*lo, *hi});
            } else if (key == "func") {
                auto c = value.find(':');
                auto addr = c == std::string_view::npos ? std::nullopt : parse_hex(value.substr(c + 1));
                if (!addr) throw ParseError("bad func entry, expected name:0xaddr", line_no, static_cast<int>(eq + 2));
                corpus.functions.push_back({std::string(trim(value.substr(0, c))), *addr});
            } else {
                throw ParseError("unknown header key '" + std::string(key) + "'", line_no, 1);
            }
            continue;
        }
        if (!have_arch) throw ParseError("gadget line before arch= header", line_no, 1);
        in_body = true;
        if (colon == std::string_view::npos) {
            if (!lenient) throw ParseError("expected '<address>: <asm>'", line_no, 1);
            corpus.skipped.push_back("line " + std::to_string(line_no) + ": expected '<address>: <asm>'");
            continue;
        }
        auto addr = parse_hex(line.substr(0, colon));
        std::string_view asm_text = trim(line.substr(colon + 1));
        try {
            if (!addr) throw ParseError("bad gadget address", 1, 1);
            RawGadget g;
            g.address = *addr;
            g.asm_text = std::string(asm_text);
            g.ops = decode_asm(corpus.profile, asm_text);
            corpus.gadgets.push_back(std::move(g));
        } catch (const Error& e) {
            int column = static_cast<int>(asm_text.data() - line.data()) + 1;
            if (auto pe = dynamic_cast<const ParseError*>(&e); pe && pe->column() > 0) column += pe->column() - 1;
            std::string what = e.what();
            if (auto p = what.find(": "); what.starts_with("line ") && p != std::string::npos) what = what.substr(p + 2);
            if (!lenient) throw ParseError(what, line_no, column);
            corpus.skipped.push_back("line " + std::to_string(line_no) + ":" + std::to_string(column) + ": " + what);
        }
    }
    if (!have_arch) throw ParseError("missing arch= header", line_no > 0 ? line_no : 1, 1);
    return corpus;
}

std::string format_corpus(const Corpus& corpus) {
    std::ostringstream os;
    os << "arch=" << to_string(corpus.profile.id) << "\n";
    os << "base=" << hex(corpus.base) << "\n";
    for (const auto& r : corpus.writable) os << "writable=" << hex(r.begin) << "-" << hex(r.end) << "\n";
    for (const auto& f : corpus.functions) os << "func=" << f.name << ":" << hex(f.address) << "\n";
    for (const auto& g : corpus.gadgets) os << hex(g.address) << ": " << g.asm_text << "\n";
    return os.str();
}

} // namespace majorca
