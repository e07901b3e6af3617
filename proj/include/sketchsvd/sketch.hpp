#pragma once

#include <sketchsvd/dense.hpp>
#include <sketchsvd/linear_operator.hpp>
#include <sketchsvd/rng.hpp>

#include <cstdint>
#include <string>

namespace sketchsvd {

/// Run parameters shared by the single- and multi-sketch pipelines.
struct SketchConfig {
  Index k = 10;         ///< target rank
  Index p = 12;         ///< oversampling; sketch width is k + p
  int q = 0;            ///< power exponent
  Index n_sketches = 1;
  double tau = 1.0;     ///< retraction step in (0, 1]
  double tol = 1e-5;    ///< stop when ||C - I||_F < tol
  int max_iter = 256;
  std::uint64_t seed = 0;
  bool stabilize_power = false;

  Index ell() const noexcept { return k + p; }

  /// Throws std::invalid_argument unless 1 <= k <= l <= min(m, n) and the
  /// remaining fields are in range.
  void validate(Index m, Index n) const {
    auto fail = [](const std::string& why) { throw std::invalid_argument("SketchConfig: " + why); };
    if (k < 1) fail("k must be >= 1");
    if (p < 0) fail("p must be >= 0");
    if (ell() > m || ell() > n) fail("k + p must not exceed the matrix dimensions");
    if (q < 0) fail("q must be >= 0");
    if (n_sketches < 1) fail("number of sketches must be >= 1");
    if (!(tau > 0.0 && tau <= 1.0)) fail("tau must lie in (0, 1]");
    if (!(tol > 0.0)) fail("tol must be positive");
    if (max_iter < 1) fail("max_iter must be >= 1");
  }
};

/// Y = (A A^T)^q A Omega.
///
/// With `stabilize` every application of A or A^T is followed by an
/// orthonormalization. The result then spans the same subspace but is not
/// the literal product; useful when q is large enough for the columns to
/// collapse numerically.
template <typename Scalar>
Matrix<Scalar> power_sketch(const LinearOperator<Scalar>& A, const Matrix<Scalar>& omega, int q,
                            bool stabilize = false) {
  if (omega.rows() != A.cols())
    throw std::invalid_argument("power_sketch: Omega has the wrong row count");
  Matrix<Scalar> y = A.apply(omega);
  for (int i = 0; i < q; ++i) {
    if (stabilize) y = orthonormalize(y).matrix();
    Matrix<Scalar> z = A.apply_transpose(y);
    if (stabilize) z = orthonormalize(z).matrix();
    y = A.apply(z);
  }
  return y;
}

/// Orthonormal basis of sketch i plus the singular values of Y_i.
template <typename Scalar>
OrthoBasis<Scalar> sketch_basis(const LinearOperator<Scalar>& A, const SketchConfig& cfg,
                                std::uint64_t index) {
  cfg.validate(A.rows(), A.cols());
  const Matrix<Scalar> omega = gaussian_matrix<Scalar>(A.cols(), cfg.ell(), RngStream{cfg.seed, index});
  return orthonormal_basis(power_sketch(A, omega, cfg.q, cfg.stabilize_power));
}

/// Keeps the leading k triples.
template <typename Scalar>
SvdApprox<Scalar> truncate(const SvdApprox<Scalar>& approx, Index k) {
  if (k < 0 || k > approx.rank())
    throw std::invalid_argument("truncate: k exceeds the available rank");
  return {approx.U.leftCols(k), approx.S.head(k), approx.V.leftCols(k)};
}

/// Rank-l SVD of Q Q^T A: thin SVD of Q^T A (formed as (A^T Q)^T) lifted
/// back by Q.
template <typename Scalar>
SvdApprox<Scalar> project_svd(const LinearOperator<Scalar>& A, const StiefelPoint<Scalar>& Q) {
  const Matrix<Scalar> b = A.apply_transpose(Q.matrix()).transpose();
  SvdApprox<Scalar> small = thin_svd(b);
  small.U = Q.matrix() * small.U;
  return small;
}

/// Randomized SVD from a single sketch (stream index 0 of cfg.seed).
template <typename Scalar>
SvdApprox<Scalar> rsvd(const LinearOperator<Scalar>& A, const SketchConfig& cfg) {
  const auto basis = sketch_basis(A, cfg, 0);
  return truncate(project_svd(A, basis.Q), cfg.k);
}

}  // namespace sketchsvd
