#pragma once

#include <stdexcept>
#include <string>

namespace poynting {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid grid, stepper or run configuration (bad sizes, CFL violation, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A caller broke an operation's precondition on its arguments
/// (layout mismatch, non-conforming field, ...).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Negative or non-finite material entry.
class AdmissibilityError : public Error {
public:
    using Error::Error;
};

/// Material entry below the coercivity bound required in uniqueness mode.
class CoercivityError : public Error {
public:
    using Error::Error;
};

/// Tensor layout the stepper cannot discretize (off-diagonal entries).
class UnsupportedLayout : public Error {
public:
    using Error::Error;
};

/// Iterative solver failed to reach its tolerance.
class SolverError : public Error {
public:
    SolverError(const std::string& what, int iterations, double residual)
        : Error(what), iterations_(iterations), residual_(residual) {}

    [[nodiscard]] int iterations() const noexcept { return iterations_; }
    [[nodiscard]] double residual() const noexcept { return residual_; }

private:
    int iterations_;
    double residual_;
};

/// NaN or Inf appeared in the field state.
class BlowUpError : public Error {
public:
    BlowUpError(const std::string& what, long step) : Error(what), step_(step) {}

    [[nodiscard]] long step() const noexcept { return step_; }

private:
    long step_;
};

/// Argument outside the admissible range of a mollifier or audit operation.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Uniqueness experiment invoked with data violating its hypotheses.
class HypothesisError : public Error {
public:
    using Error::Error;
};

/// Configuration text could not be parsed; `key()` names the offending key path.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::string key)
        : Error(what), key_(std::move(key)) {}

    [[nodiscard]] const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

}  // namespace poynting
