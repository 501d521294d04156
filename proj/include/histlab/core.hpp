#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace histlab {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using Index = Eigen::Index;

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Input violates a structural precondition (bad partition, non-nested chain, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// Two evaluations of the same quantity disagreed beyond tolerance.
class ConsistencyViolation : public Error {
 public:
  using Error::Error;
};

/// Numerical thresholds. Operator and vector tolerances scale with the ambient
/// dimension; `global` (when set) replaces all residual tolerances at once.
struct Tolerances {
  double op_scale = 1e-10;
  double vec_scale = 1e-9;
  double prob = 1e-10;
  double meet = 1e-9;
  std::optional<double> rank;
  std::optional<double> global;

  [[nodiscard]] double op(Index dim) const {
    return global.value_or(op_scale * static_cast<double>(dim));
  }
  [[nodiscard]] double vec(Index dim) const {
    return global.value_or(vec_scale * std::sqrt(static_cast<double>(dim)));
  }
  [[nodiscard]] double probability() const { return global.value_or(prob); }

  /// Numerical rank threshold: dim * eps * largest singular value.
  [[nodiscard]] double rank_threshold(Index dim, double sigma_max) const {
    if (rank) return *rank;
    return static_cast<double>(dim) * std::numeric_limits<double>::epsilon() *
           sigma_max;
  }
};

inline void require_same_dim(Index a, Index b, const char* what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": dimension " +
                            std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace histlab
