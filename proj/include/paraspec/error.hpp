#pragma once

#include <stdexcept>
#include <string>

namespace paraspec {

/// Raised when an argument violates an operation's precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when two operands live on different grids.
class GridMismatch : public InvalidInput {
 public:
  explicit GridMismatch(const std::string& where)
      : InvalidInput(where + ": operands are defined on different grids") {}
};

/// Raised when an iterative method fails to reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

/// Raised when a configuration would exceed the declared resource budget.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace paraspec
