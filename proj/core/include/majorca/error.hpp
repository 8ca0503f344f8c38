#pragma once

#include <stdexcept>
#include <string>

namespace majorca {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Assembly text or corpus syntax error. Carries the 1-based line and column
/// when known (0 otherwise).
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line = 0, int column = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ":" + std::to_string(column) + ": " + what : what),
          line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

class UnsupportedError : public Error {
public:
    using Error::Error;
};

} // namespace majorca
