#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace sketchsvd {

// Dense storage is Eigen's default column-major layout throughout.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

//--------------------------------------------------------------------------//
// Errors
//--------------------------------------------------------------------------//

/// Base class for failures of a numerical kernel on valid input.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RankDeficient : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConvergenceFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NotPositiveSemiDefinite : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// An iteration hit its cap. Subclasses carry the partial result.
class MaxIterationsExceeded : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

template <typename Partial>
class NotConverged : public MaxIterationsExceeded {
 public:
  NotConverged(const std::string& what, Partial partial)
      : MaxIterationsExceeded(what), partial_(std::move(partial)) {}

  const Partial& partial() const noexcept { return partial_; }

 private:
  Partial partial_;
};

/// A size guard on a dense m x m (or larger) object was exceeded.
class DimensionTooLarge : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Relative tolerance `factor * scale` with the absolute floor 1e-14.
inline double relative_tolerance(double factor, double scale) {
  return std::max(factor * scale, 1e-14);
}

//--------------------------------------------------------------------------//
// StiefelPoint
//--------------------------------------------------------------------------//

/// An m x l matrix with orthonormal columns.
template <typename Scalar>
class StiefelPoint {
 public:
  StiefelPoint() = default;

  /// Validates Q^T Q = I to `tol` (Frobenius).
  explicit StiefelPoint(Matrix<Scalar> q, double tol = 1e-10) : q_(std::move(q)) {
    if (q_.rows() < q_.cols() || q_.cols() < 1)
      throw std::invalid_argument("StiefelPoint: need rows >= cols >= 1");
    if (orthonormality_defect() > tol)
      throw std::invalid_argument("StiefelPoint: columns are not orthonormal");
  }

  /// Skips validation; for kernels that produce orthonormal columns by construction.
  static StiefelPoint trusted(Matrix<Scalar> q) {
    StiefelPoint p;
    p.q_ = std::move(q);
    return p;
  }

  const Matrix<Scalar>& matrix() const noexcept { return q_; }
  Index rows() const noexcept { return q_.rows(); }
  Index cols() const noexcept { return q_.cols(); }

  /// ||Q^T Q - I||_F
  Scalar orthonormality_defect() const {
    return (q_.transpose() * q_ - Matrix<Scalar>::Identity(q_.cols(), q_.cols())).norm();
  }

 private:
  Matrix<Scalar> q_;
};

//--------------------------------------------------------------------------//
// SvdApprox
//--------------------------------------------------------------------------//

/// Rank-r factorization U diag(S) V^T, S descending and non-negative.
template <typename Scalar>
struct SvdApprox {
  Matrix<Scalar> U;
  Vector<Scalar> S;
  Matrix<Scalar> V;

  Index rank() const noexcept { return S.size(); }

  Matrix<Scalar> reconstruct() const { return U * S.asDiagonal() * V.transpose(); }
};

}  // namespace sketchsvd
