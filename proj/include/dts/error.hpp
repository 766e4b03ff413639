#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dts {

// Base class for all conditions caused by inputs (data, files, queries,
// config). The CLI maps these to exit code 1; anything else is treated as an
// internal error (exit code 2).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dimension mismatch between operands.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Value-level precondition failure: degenerate batch, zero-norm vector,
// empty vocabulary, non-finite loss, and similar.
class ValueError : public Error {
public:
    using Error::Error;
};

// Malformed textual input. `position` is a 0-based character offset for
// query strings, or a 1-based line number for line-oriented files; the
// message says which.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t position)
        : Error(message), position_(position) {}

    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

// Filesystem or format failure while reading/writing artifact files.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace dts
