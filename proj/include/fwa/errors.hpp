#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fwa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (dimension mismatch, empty batch, ...).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// NaN/Inf showed up in an input or an intermediate gradient.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what, std::size_t step = 0)
        : Error(step ? what + " (step " + std::to_string(step) + ")" : what), step_(step) {}

    [[nodiscard]] std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed input text. Row and column are 1-based; 0 means unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row, std::size_t column)
        : Error(what + " at row " + std::to_string(row) + ", column " + std::to_string(column)),
          row_(row), column_(column) {}

    [[nodiscard]] std::size_t row() const noexcept { return row_; }
    [[nodiscard]] std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

/// Configuration is inconsistent (missing column, window larger than the run, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Parameters fall outside the range where a closed-form bound is stated.
class DomainError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw ContractViolation(message);
    }
}

} // namespace detail
} // namespace fwa
