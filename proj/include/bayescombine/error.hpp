#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bayescombine {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file. line() is 1-based and counts the header row.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& detail)
        : Error("line " + std::to_string(line) + ": " + detail), line_(line), detail_(detail) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::size_t line_;
    std::string detail_;
};

// Zero-variance input where a scale is required.
class DegenerateError : public Error {
public:
    using Error::Error;
};

// Not enough points for the requested window, season or model order.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

// The data violates a model assumption (e.g. nonpositive values for a
// multiplicative model).
class ModelInapplicableError : public Error {
public:
    using Error::Error;
};

// Invalid arguments or configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace bayescombine
