#pragma once

#include <stdexcept>
#include <string>

namespace wz {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Vector length or index does not match the owning space.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Invalid scalar argument (non-positive horizon, level, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Evaluation point outside the admissible domain, e.g. t outside [0, T].
class DomainError : public Error {
public:
    using Error::Error;
};

/// Noise-mode index out of range.
class IndexError : public Error {
public:
    using Error::Error;
};

/// Quadrature or pointwise evaluation produced a non-finite value.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// A trajectory left the finite range. Carries the last time with a finite state.
class BlowUpError : public Error {
public:
    BlowUpError(const std::string& what, double last_valid_time)
        : Error(what), last_valid_time_(last_valid_time) {}

    double last_valid_time() const noexcept { return last_valid_time_; }

private:
    double last_valid_time_;
};

/// Configuration file could not be parsed or validated.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace wz
