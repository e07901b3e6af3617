#pragma once

// Small dense factorizations: orthonormal bases, thin SVD, symmetric
// eigendecomposition, PSD square root and the shifted pseudo-inverse.
// All of them act on matrices with at most a few dozen columns, so they are
// thin wrappers over Eigen's Householder QR, Jacobi SVD and self-adjoint
// eigensolver with the ordering and error conventions the rest of the
// library relies on.

#include <sketchsvd/types.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

namespace sketchsvd {

template <typename Scalar>
struct OrthoBasis {
  StiefelPoint<Scalar> Q;
  /// Singular values of the input, descending.
  Vector<Scalar> sigma;
};

/// Orthonormal basis of span(Y) together with the singular values of Y.
///
/// Singular values come from the triangular QR factor, which shares them
/// with Y. Throws RankDeficient when the numerical rank (tolerance
/// 1e-12 * ||Y||_2) is below cols(Y).
template <typename Derived>
OrthoBasis<typename Derived::Scalar> orthonormal_basis(const Eigen::MatrixBase<Derived>& Y) {
  using Scalar = typename Derived::Scalar;
  const Index m = Y.rows();
  const Index l = Y.cols();
  if (m < l || l < 1)
    throw std::invalid_argument("orthonormalize: need rows >= cols >= 1");

  Eigen::HouseholderQR<Matrix<Scalar>> qr(Y);
  Matrix<Scalar> q = qr.householderQ() * Matrix<Scalar>::Identity(m, l);
  Matrix<Scalar> r = qr.matrixQR().topRows(l).template triangularView<Eigen::Upper>();

  Eigen::JacobiSVD<Matrix<Scalar>> svd(r);
  Vector<Scalar> sigma = svd.singularValues();
  const double top = sigma.size() ? static_cast<double>(sigma(0)) : 0.0;
  if (!(top > 0.0) || static_cast<double>(sigma(l - 1)) <= relative_tolerance(1e-12, top))
    throw RankDeficient("orthonormalize: input has numerical rank below its column count");

  return {StiefelPoint<Scalar>::trusted(std::move(q)), std::move(sigma)};
}

template <typename Derived>
StiefelPoint<typename Derived::Scalar> orthonormalize(const Eigen::MatrixBase<Derived>& Y) {
  return orthonormal_basis(Y).Q;
}

/// Thin SVD of an l x n block with l <= n: B = W diag(s) V^T.
template <typename Derived>
SvdApprox<typename Derived::Scalar> thin_svd(const Eigen::MatrixBase<Derived>& B) {
  using Scalar = typename Derived::Scalar;
  if (B.rows() > B.cols())
    throw std::invalid_argument("thin_svd: expects rows <= cols");

  Eigen::JacobiSVD<Matrix<Scalar>> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success)
    throw ConvergenceFailure("thin_svd: Jacobi sweeps did not converge");
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

template <typename Scalar>
struct SymEig {
  /// Descending.
  Vector<Scalar> values;
  Matrix<Scalar> vectors;
};

/// Symmetric eigendecomposition M = G diag(d) G^T with d descending.
template <typename Derived>
SymEig<typename Derived::Scalar> sym_eig(const Eigen::MatrixBase<Derived>& M) {
  using Scalar = typename Derived::Scalar;
  if (M.rows() != M.cols())
    throw std::invalid_argument("sym_eig: matrix must be square");
  const double scale = static_cast<double>(M.norm());
  if (static_cast<double>((M - M.transpose()).norm()) > relative_tolerance(1e-10, scale))
    throw std::invalid_argument("sym_eig: matrix is not symmetric");

  Matrix<Scalar> sym = Scalar(0.5) * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(sym);
  if (es.info() != Eigen::Success)
    throw ConvergenceFailure("sym_eig: tridiagonal QR did not converge");

  // Eigen sorts ascending.
  return {es.eigenvalues().reverse(), es.eigenvectors().rowwise().reverse()};
}

/// The symmetric non-negative definite square root T = G diag(sqrt(d)) G^T.
///
/// Eigenvalues down to -1e-10 * ||M||_2 are treated as rounding dust and
/// clamped to zero; anything more negative throws NotPositiveSemiDefinite.
template <typename Derived>
Matrix<typename Derived::Scalar> psd_sqrt(const Eigen::MatrixBase<Derived>& M) {
  using Scalar = typename Derived::Scalar;
  const auto eig = sym_eig(M);
  const double spec = eig.values.size() ? static_cast<double>(eig.values.cwiseAbs().maxCoeff()) : 0.0;
  if (static_cast<double>(eig.values.minCoeff()) < -relative_tolerance(1e-10, spec))
    throw NotPositiveSemiDefinite("psd_sqrt: matrix has a negative eigenvalue");
  const Vector<Scalar> root = eig.values.cwiseMax(Scalar(0)).cwiseSqrt();
  return eig.vectors * root.asDiagonal() * eig.vectors.transpose();
}

/// (lambda I - M)^+ for symmetric M, with eigenvalue gaps below
/// 1e-10 * max(1, |lambda|) treated as exact null directions.
template <typename Derived>
Matrix<typename Derived::Scalar> shifted_pinv(const Eigen::MatrixBase<Derived>& M,
                                              typename Derived::Scalar lambda) {
  using Scalar = typename Derived::Scalar;
  const auto eig = sym_eig(M);
  const Scalar cutoff = Scalar(1e-10) * std::max(Scalar(1), std::abs(lambda));
  Vector<Scalar> inv(eig.values.size());
  for (Index i = 0; i < inv.size(); ++i) {
    const Scalar gap = lambda - eig.values(i);
    inv(i) = std::abs(gap) > cutoff ? Scalar(1) / gap : Scalar(0);
  }
  return eig.vectors * inv.asDiagonal() * eig.vectors.transpose();
}

}  // namespace sketchsvd
