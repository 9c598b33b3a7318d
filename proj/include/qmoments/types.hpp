#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace qmoments {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr cplx kI{0.0, 1.0};

/// Shape or size mismatch in the arguments of an operation.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input data violates a structural invariant (generator symmetry, CCR skew part, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A requested size exceeds a configured combinatorial or memory budget.
class BudgetError : public std::length_error {
 public:
  using std::length_error::length_error;
};

}  // namespace qmoments
