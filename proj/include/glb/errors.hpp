#pragma once

#include <stdexcept>
#include <string>

namespace glb {

/// Input outside a function's mathematical domain (non-finite values, capped Poisson margins).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid user or harness configuration (S <= 0, delta outside (0,1], K < 2, ...).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A caller broke a documented precondition.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Numerical failure: a matrix that should be positive definite is not.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed arm file. Carries the offending 1-based line number (0 for file-level errors).
class LoadError : public std::runtime_error {
public:
    LoadError(const std::string& what, std::size_t line)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what)
        , line_(line)
    {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace glb
