#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "majorca/arch.hpp"

namespace majorca {

/// Call argument: an integer, a byte string (stored with a trailing NUL and
/// passed by pointer), or an array of arguments (stored as a NULL-terminated
/// pointer/word table and passed by pointer).
struct GoalArg {
    enum class Kind { integer, string, array };
    Kind kind = Kind::integer;
    Word value = 0;
    std::string bytes;
    std::vector<GoalArg> items;

    static GoalArg integer(Word v) { return {Kind::integer, v, {}, {}}; }
    static GoalArg string(std::string s) { return {Kind::string, 0, std::move(s), {}}; }
    static GoalArg array(std::vector<GoalArg> items) { return {Kind::array, 0, {}, std::move(items)}; }

    friend bool operator==(const GoalArg&, const GoalArg&) = default;
};

struct Goal {
    enum class Kind { syscall, call };
    Kind kind = Kind::syscall;
    std::string name; // syscall name
    Word target = 0;  // call target
    std::vector<GoalArg> args;

    friend bool operator==(const Goal&, const Goal&) = default;
};

/// `execve("/bin/sh", 0, 0)`, `mprotect(0x1000, 0x1000, 7)`,
/// `0x401136(1, "x", [2, "y"])` (a call to an absolute address). Strings take
/// C escapes (\x2f, \n, \0, \\, \").
Goal parse_goal(std::string_view text);
std::string format_goal(const Goal& goal);

/// Syscall number for the goal's name on the target.
Word syscall_number(const ArchProfile& profile, const Goal& goal);

} // namespace majorca
