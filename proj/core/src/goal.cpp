#include "majorca/goal.hpp"

#include <cctype>
#include <charconv>
#include <sstream>

#include "majorca/error.hpp"

namespace majorca {

namespace {

class GoalParser {
public:
    explicit GoalParser(std::string_view s) : s_(s) {}

    Goal goal() {
        Goal g;
        skip();
        std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        std::string_view head = s_.substr(start, pos_ - start);
        if (head.empty()) fail("expected a syscall name or call address");
        if (head.starts_with("0x") || std::isdigit(static_cast<unsigned char>(head.front()))) {
            g.kind = Goal::Kind::call;
            g.target = number(head, start);
        } else {
            g.kind = Goal::Kind::syscall;
            g.name = std::string(head);
        }
        expect('(');
        skip();
        if (peek() != ')') {
            for (;;) {
                g.args.push_back(arg());
                skip();
                if (peek() == ',') {
                    ++pos_;
                    continue;
                }
                break;
            }
        }
        expect(')');
        skip();
        if (pos_ != s_.size()) fail("trailing characters");
        return g;
    }

private:
    [[noreturn]] void fail(const std::string& what) { throw ParseError("goal: " + what, 1, static_cast<int>(pos_ + 1)); }
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
    void expect(char c) {
        skip();
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    Word number(std::string_view t, std::size_t at) {
        int base = 10;
        if (t.starts_with("0x") || t.starts_with("0X")) {
            t.remove_prefix(2);
            base = 16;
        }
        Word v = 0;
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v, base);
        if (t.empty() || ec != std::errc{} || p != t.data() + t.size()) {
            pos_ = at;
            fail("bad number");
        }
        return v;
    }

    GoalArg arg() {
        skip();
        char c = peek();
        if (c == '"' || c == '\'') return GoalArg::string(quoted());
        if (c == '[') {
            ++pos_;
            std::vector<GoalArg> items;
            skip();
            if (peek() != ']') {
                for (;;) {
                    items.push_back(arg());
                    skip();
                    if (peek() == ',') {
                        ++pos_;
                        continue;
                    }
                    break;
                }
            }
            expect(']');
            return GoalArg::array(std::move(items));
        }
        bool neg = false;
        if (c == '-') {
            neg = true;
            ++pos_;
        }
        std::size_t start = pos_;
        while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        Word v = number(s_.substr(start, pos_ - start), start);
        return GoalArg::integer(neg ? ~v + 1 : v);
    }

    std::string quoted() {
        char q = s_[pos_++];
        std::string out;
        while (pos_ < s_.size() && s_[pos_] != q) {
            char c = s_[pos_++];
            if (c != '\\') {
                out += c;
                continue;
            }
            if (pos_ >= s_.size()) fail("unterminated escape");
            char e = s_[pos_++];
            switch (e) {
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            case 'r': out += '\r'; break;
            case '0': out += '\0'; break;
            case '\\': out += '\\'; break;
            case '"': out += '"'; break;
            case '\'': out += '\''; break;
            case 'x': {
                if (pos_ + 2 > s_.size()) fail("short \\x escape");
                unsigned v = 0;
                auto [p, ec] = std::from_chars(s_.data() + pos_, s_.data() + pos_ + 2, v, 16);
                if (ec != std::errc{} || p != s_.data() + pos_ + 2) fail("bad \\x escape");
                out += static_cast<char>(v);
                pos_ += 2;
                break;
            }
            default: fail(std::string("unknown escape \\") + e);
            }
        }
        if (pos_ >= s_.size()) fail("unterminated string");
        ++pos_;
        return out;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

void format_arg(std::ostream& os, const GoalArg& a) {
    switch (a.kind) {
    case GoalArg::Kind::integer:
        if (a.value < 10) os << a.value;
        else os << "0x" << std::hex << a.value << std::dec;
        break;
    case GoalArg::Kind::string:
        os << '"';
        for (unsigned char c : a.bytes) {
            if (c == '"' || c == '\\') os << '\\' << c;
            else if (c >= 0x20 && c < 0x7f) os << c;
            else os << "\\x" << "0123456789abcdef"[c >> 4] << "0123456789abcdef"[c & 15];
        }
        os << '"';
        break;
    case GoalArg::Kind::array:
        os << '[';
        for (std::size_t i = 0; i < a.items.size(); ++i) {
            if (i) os << ", ";
            format_arg(os, a.items[i]);
        }
        os << ']';
        break;
    }
}

} // namespace

Goal parse_goal(std::string_view text) { return GoalParser(text).goal(); }

std::string format_goal(const Goal& g) {
    std::ostringstream os;
    if (g.kind == Goal::Kind::syscall) os << g.name;
    else os << "0x" << std::hex << g.target << std::dec;
    os << '(';
    for (std::size_t i = 0; i < g.args.size(); ++i) {
        if (i) os << ", ";
        format_arg(os, g.args[i]);
    }
    os << ')';
    return os.str();
}

Word syscall_number(const ArchProfile& profile, const Goal& goal) {
    auto it = profile.syscall_table.find(goal.name);
    if (it == profile.syscall_table.end())
        throw Error("unknown syscall '" + goal.name + "' for " + std::string(to_string(profile.id)));
    return it->second;
}

} // namespace majorca
