#pragma once

#include <stdexcept>
#include <string>

namespace bhtwa {

/// Invalid configuration or violated precondition on user-supplied input.
/// The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input outside the mathematical domain of an operation (negative
/// occupation, nonpositive value in a log fit, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Too few samples inside a fit window.
class InsufficientDataError : public DomainError {
public:
    using DomainError::DomainError;
};

/// The number-phase representation is singular (some I_j == 0).
class SingularStateError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Numerical failure at a definite simulation time: conservation violated,
/// tangent frame lost rank, eigensolver did not converge. CLI exit code 3.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, double time)
        : std::runtime_error(what + " (t = " + std::to_string(time) + ")"), time_(time) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

/// Integration aborted because number or energy drift exceeded the tolerance.
class IntegrationError : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace bhtwa
