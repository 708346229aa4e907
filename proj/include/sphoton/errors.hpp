#pragma once

#include <any>
#include <stdexcept>
#include <string>
#include <utility>

namespace sphoton {

/// Bad input to a public operation: non-finite entries, out-of-range times,
/// ordering violations, non-Hermitian operands.
class InvalidArgument : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Base for numeric failures raised while evaluating a model.
class NumericError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// An integrator could not reach its error target. Carries the best estimate
/// it had when it gave up.
class IntegrationFailure : public NumericError {
  public:
    IntegrationFailure(const std::string &what, std::any best_estimate = {},
                       double error_estimate = 0.0)
        : NumericError(what), best_(std::move(best_estimate)),
          error_estimate_(error_estimate) {}

    template <class T> T best_estimate() const { return std::any_cast<T>(best_); }
    bool has_best_estimate() const noexcept { return best_.has_value(); }
    double error_estimate() const noexcept { return error_estimate_; }

  private:
    std::any best_;
    double error_estimate_;
};

/// A vector-valued formula was asked for a mixed initial state.
class UnsupportedState : public NumericError {
  public:
    using NumericError::NumericError;
};

/// The physical precondition of a formula does not hold for this model.
class PreconditionError : public NumericError {
  public:
    using NumericError::NumericError;
};

/// A statistic is undefined at this point (e.g. Mandel Q with zero mean).
class UndefinedStatistic : public NumericError {
  public:
    using NumericError::NumericError;
};

/// Both measurement branches of a collision step carry zero weight.
class DegenerateState : public NumericError {
  public:
    using NumericError::NumericError;
};

/// A file could not be read or written. The message names the path.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace sphoton
