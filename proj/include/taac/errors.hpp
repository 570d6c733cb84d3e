#pragma once

#include <stdexcept>
#include <string>

namespace taac {

// Base for all library failures. CLI maps these to exit code 1.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape mismatch between operands. Message names both shapes.
struct DimensionError : Error {
    using Error::Error;
};

// Bad configuration value (negative width, rate outside [0,1], ...).
struct ConfigError : Error {
    using Error::Error;
};

// Degenerate numeric input: empty vector, all-zero signal where a peak is
// required, batch of one in train-mode batchnorm, non-finite logits.
struct NumericError : Error {
    using Error::Error;
};

// File and format problems.
struct IoError : Error {
    using Error::Error;
};

// Text parse failure. Carries a 1-based line number when known.
struct ParseError : Error {
    ParseError(const std::string& msg, int line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line_no(line) {}
    explicit ParseError(const std::string& msg) : Error(msg), line_no(-1) {}
    int line_no;
};

}  // namespace taac
