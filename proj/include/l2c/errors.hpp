#pragma once

#include <stdexcept>
#include <string>

namespace l2c {

// Extents of one or more operands do not conform to what an op expects.
class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A forward op produced NaN or Inf.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Misuse of the gradient tape (non-scalar loss, second backward, ...).
class TapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss; the message carries the last finite
// losses.
class DivergenceError : public NumericError {
public:
    using NumericError::NumericError;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed, truncated or corrupted on-disk data.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace l2c
