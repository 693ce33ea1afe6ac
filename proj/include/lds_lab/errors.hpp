#pragma once

#include <stdexcept>
#include <string>

namespace lds {

/// Bad input: dimensions, parameter ranges, malformed configs. CLI exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Base for failures of the numerics themselves. CLI exit code 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A recursion or simulation produced values that are non-finite or exceed the
/// magnitude cap. `step()` is the 1-based time index of the first offender.
class OverflowError : public NumericalError {
public:
    OverflowError(const std::string& what, long step)
        : NumericalError(what + " (first offending t = " + std::to_string(step) + ")"), step_(step) {}
    long step() const noexcept { return step_; }

private:
    long step_;
};

class ConvergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Singular normal equations in a masked least-squares row (0-based `row()`).
class RankDeficiencyError : public NumericalError {
public:
    RankDeficiencyError(const std::string& what, long row)
        : NumericalError(what + " (row " + std::to_string(row) + ")"), row_(row) {}
    long row() const noexcept { return row_; }

private:
    long row_;
};

/// The steady-state Kalman representation was requested for a model whose
/// initial covariance is not the Riccati fixed point.
class InexactRepresentationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lds
