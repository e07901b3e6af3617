#pragma once

// Verification statistics: the population-average structure of sketch
// projectors, similarity and error metrics against a known SVD, the
// residual decomposition, and delta-method covariance propagation.
// Dense m x m and m^2 x m^2 objects appear only here, behind size guards.

#include <sketchsvd/dense.hpp>
#include <sketchsvd/linear_operator.hpp>
#include <sketchsvd/parallel.hpp>
#include <sketchsvd/sketch.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace sketchsvd {

inline constexpr Index kMaxDenseProjectorDim = 4096;
inline constexpr Index kMaxCltDim = 64;

template <typename Scalar>
struct LambdaEstimate {
  Matrix<Scalar> u_hat;      ///< m x m orthogonal
  Vector<Scalar> lambda_hat;  ///< descending, in [0, 1]
};

/// Sketch bases Q_1..Q_N of A with k = l, p = 0; sketch i uses stream i of `seed`.
template <typename Scalar>
std::vector<StiefelPoint<Scalar>> sketch_members(const LinearOperator<Scalar>& A, Index ell, int q, Index n,
                                                 std::uint64_t seed) {
  SketchConfig cfg;
  cfg.k = ell;
  cfg.p = 0;
  cfg.q = q;
  cfg.n_sketches = n;
  cfg.seed = seed;
  cfg.validate(A.rows(), A.cols());
  std::vector<std::optional<StiefelPoint<Scalar>>> slots(static_cast<std::size_t>(n));
  parallel_for(slots.size(), [&](std::size_t i) { slots[i] = sketch_basis(A, cfg, i).Q; });
  std::vector<StiefelPoint<Scalar>> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

/// Dense Pbar = (1/N) sum Q_i Q_i^T, summed in member order.
template <typename Scalar>
Matrix<Scalar> dense_projector_mean(std::span<const StiefelPoint<Scalar>> members) {
  if (members.empty()) throw std::invalid_argument("dense_projector_mean: no members");
  const Index m = members.front().rows();
  if (m > kMaxDenseProjectorDim) throw DimensionTooLarge("dense_projector_mean: m exceeds 4096");
  Matrix<Scalar> pbar = Matrix<Scalar>::Zero(m, m);
  for (const auto& q : members) pbar.noalias() += q.matrix() * q.matrix().transpose();
  pbar /= static_cast<Scalar>(members.size());
  return pbar;
}

template <typename Scalar>
LambdaEstimate<Scalar> estimate_lambda(std::span<const StiefelPoint<Scalar>> members) {
  const auto eig = sym_eig(dense_projector_mean(members));
  return {eig.vectors, eig.values};
}

/// Eigendecomposition of the mean of N sketch projectors of A.
template <typename Scalar>
LambdaEstimate<Scalar> estimate_lambda(const LinearOperator<Scalar>& A, Index ell, int q, Index n,
                                       std::uint64_t seed) {
  if (A.rows() > kMaxDenseProjectorDim) throw DimensionTooLarge("estimate_lambda: m exceeds 4096");
  const auto members = sketch_members(A, ell, q, n, seed);
  return estimate_lambda<Scalar>(std::span<const StiefelPoint<Scalar>>(members));
}

/// |u_hat_j^T u_j| for each column j.
template <typename DerivedA, typename DerivedB>
Vector<typename DerivedA::Scalar> similarity(const Eigen::MatrixBase<DerivedA>& u_hat,
                                             const Eigen::MatrixBase<DerivedB>& u_true) {
  if (u_hat.cols() != u_true.cols() || u_hat.rows() != u_true.rows())
    throw std::invalid_argument("similarity: shape mismatch");
  return (u_hat.cwiseProduct(u_true)).colwise().sum().cwiseAbs().transpose();
}

/// Flips columns of u_hat so that u_hat_j^T u_j >= 0.
template <typename DerivedA, typename DerivedB>
Matrix<typename DerivedA::Scalar> align_signs(const Eigen::MatrixBase<DerivedA>& u_hat,
                                              const Eigen::MatrixBase<DerivedB>& u_true) {
  if (u_hat.cols() != u_true.cols() || u_hat.rows() != u_true.rows())
    throw std::invalid_argument("align_signs: shape mismatch");
  Matrix<typename DerivedA::Scalar> out = u_hat;
  for (Index j = 0; j < out.cols(); ++j)
    if (out.col(j).dot(u_true.col(j)) < 0) out.col(j) = -out.col(j);
  return out;
}

enum class ErrorNorm { frobenius, spectral };

/// Small factor K with ||K||_* = ||U S V^T - U' S' V'^T||_* for both norms.
template <typename Scalar>
Matrix<Scalar> difference_factor(const SvdApprox<Scalar>& a, const SvdApprox<Scalar>& b) {
  if (a.U.rows() != b.U.rows() || a.V.rows() != b.V.rows() || a.rank() != b.rank())
    throw std::invalid_argument("rank_k_error: shape mismatch");
  const Index r = a.rank();
  Matrix<Scalar> left(a.U.rows(), 2 * r);
  left << a.U * a.S.asDiagonal(), -(b.U * b.S.asDiagonal());
  Matrix<Scalar> right(a.V.rows(), 2 * r);
  right << a.V, b.V;
  // D = left * right^T = left * R^T Q^T with right = Q R, and Q has orthonormal columns.
  Eigen::HouseholderQR<Matrix<Scalar>> qr(right);
  const Index t = std::min<Index>(2 * r, right.rows());
  const Matrix<Scalar> tri = qr.matrixQR().topRows(t).template triangularView<Eigen::Upper>();
  return left * tri.transpose();
}

/// Largest singular value by power iteration on K^T K.
template <typename Scalar>
Scalar spectral_norm(const Matrix<Scalar>& k, double tol = 1e-8, int max_iter = 1000) {
  if (k.size() == 0 || k.norm() == Scalar(0)) return Scalar(0);
  Vector<Scalar> x = Vector<Scalar>::Ones(k.cols()).normalized();
  Scalar estimate = 0;
  for (int it = 0; it < max_iter; ++it) {
    Vector<Scalar> y = k.transpose() * (k * x);
    const Scalar growth = y.norm();
    if (growth == Scalar(0)) {
      // Start vector in the null space; restart along the largest column.
      Index col = 0;
      k.colwise().norm().maxCoeff(&col);
      x = Vector<Scalar>::Unit(k.cols(), col);
      continue;
    }
    x = y / growth;
    const Scalar next = std::sqrt(growth);
    if (std::abs(next - estimate) <= Scalar(tol) * next) return next;
    estimate = next;
  }
  return estimate;
}

/// ||U_k S_k V_k^T - U' S' V'^T|| in the requested norm, without forming
/// either matrix.
template <typename Scalar>
Scalar rank_k_error(const SvdApprox<Scalar>& truth, const SvdApprox<Scalar>& approx,
                    ErrorNorm which = ErrorNorm::frobenius) {
  const Matrix<Scalar> k = difference_factor(truth, approx);
  return which == ErrorNorm::frobenius ? k.norm() : spectral_norm(k);
}

struct ResidualSplit {
  double residual_sq = 0.0;  ///< ||Q Q^T A - A||_F^2
  double tail_sq = 0.0;      ///< sum_{j > l} sigma_j^2
  double excess = 0.0;       ///< residual_sq - tail_sq
};

/// Splits the projection residual of A onto span(Q) into the optimal
/// rank-l tail and the excess. `sigma` is the full singular spectrum of A.
template <typename Scalar>
ResidualSplit residual_decomposition(const LinearOperator<Scalar>& A, const Vector<Scalar>& sigma,
                                     const StiefelPoint<Scalar>& qbar) {
  if (qbar.rows() != A.rows()) throw std::invalid_argument("residual_decomposition: dimension mismatch");
  const Index l = qbar.cols();
  if (sigma.size() < l) throw std::invalid_argument("residual_decomposition: spectrum too short");
  const double total = static_cast<double>(sigma.squaredNorm());
  const double captured = static_cast<double>(A.apply_transpose(qbar.matrix()).squaredNorm());
  ResidualSplit out;
  out.residual_sq = std::max(0.0, total - captured);
  out.tail_sq = static_cast<double>(sigma.tail(sigma.size() - l).squaredNorm());
  out.excess = out.residual_sq - out.tail_sq;
  return out;
}

template <typename Scalar>
struct CltEstimate {
  Index j = 0;
  Matrix<Scalar> delta_j;  ///< m x m^2
  Matrix<Scalar> t1_hat;   ///< m^2 x m^2
  Matrix<Scalar> t2_hat;   ///< m x m
};

/// vec(Q Q^T), column-major.
template <typename Scalar>
Vector<Scalar> vec_projector(const StiefelPoint<Scalar>& q) {
  const Matrix<Scalar> p = q.matrix() * q.matrix().transpose();
  return Eigen::Map<const Vector<Scalar>>(p.data(), p.size());
}

/// Delta_j = u_j^T kron (lambda_j I - M)^+ for M = U diag(lambda) U^T.
template <typename Scalar>
Matrix<Scalar> delta_matrix(const LambdaEstimate<Scalar>& truth, Index j) {
  const Index m = truth.u_hat.rows();
  if (m > kMaxCltDim) throw DimensionTooLarge("delta_matrix: m exceeds 64");
  if (j < 0 || j >= truth.lambda_hat.size()) throw std::invalid_argument("delta_matrix: index out of range");
  const Matrix<Scalar> mm = truth.u_hat * truth.lambda_hat.asDiagonal() * truth.u_hat.transpose();
  const Matrix<Scalar> pinv = shifted_pinv(mm, truth.lambda_hat(j));
  Matrix<Scalar> delta(m, m * m);
  for (Index c = 0; c < m; ++c) delta.middleCols(c * m, m) = truth.u_hat(c, j) * pinv;
  return delta;
}

/// Empirical covariance of vec(Q_i Q_i^T) propagated through Delta_j.
/// `samples` holds one vec(Q_i Q_i^T) per column; j is 0-based.
template <typename Scalar>
CltEstimate<Scalar> clt_covariance(const LambdaEstimate<Scalar>& truth, const Matrix<Scalar>& samples, Index j) {
  const Index m = truth.u_hat.rows();
  if (m > kMaxCltDim) throw DimensionTooLarge("clt_covariance: m exceeds 64");
  if (samples.rows() != m * m || samples.cols() < 2)
    throw std::invalid_argument("clt_covariance: need at least two samples of length m^2");
  CltEstimate<Scalar> out;
  out.j = j;
  out.delta_j = delta_matrix(truth, j);
  const Vector<Scalar> mean = samples.rowwise().mean();
  const Matrix<Scalar> centered = samples.colwise() - mean;
  out.t1_hat = centered * centered.transpose() / static_cast<Scalar>(samples.cols() - 1);
  out.t2_hat = out.delta_j * out.t1_hat * out.delta_j.transpose();
  out.t2_hat = Scalar(0.5) * (out.t2_hat + out.t2_hat.transpose()).eval();
  return out;
}

/// Delta-method prediction against Monte Carlo spread for one eigenvector.
struct CltCheck {
  Vector<double> t2_diagonal;   ///< predicted per-coordinate variance of sqrt(N)(u_hat_j - u_j)
  Vector<double> mc_variance;   ///< observed, over batches
  double t2_trace = 0.0;
  double mc_trace = 0.0;
};

/// Runs `batches` independent batches of N sketches of A (batch b uses
/// stream b of `seed` for its seed). The reference (U, Lambda) is the
/// eigendecomposition of the projector mean pooled over all batches, and T1
/// is the pooled sample covariance.
template <typename Scalar>
CltCheck clt_monte_carlo(const LinearOperator<Scalar>& A, Index ell, int q, Index n, Index batches,
                         std::uint64_t seed, Index j) {
  const Index m = A.rows();
  if (m > kMaxCltDim) throw DimensionTooLarge("clt_monte_carlo: m exceeds 64");
  if (batches < 2) throw std::invalid_argument("clt_monte_carlo: need at least two batches");

  std::vector<Matrix<Scalar>> vecs(static_cast<std::size_t>(batches));
  parallel_for(vecs.size(), [&](std::size_t b) {
    const auto members = sketch_members(A, ell, q, n, RngStream{seed, b}.split(0).seed);
    Matrix<Scalar> block(m * m, n);
    for (Index i = 0; i < n; ++i) block.col(i) = vec_projector(members[static_cast<std::size_t>(i)]);
    vecs[b] = std::move(block);
  });

  Matrix<Scalar> all(m * m, n * batches);
  for (Index b = 0; b < batches; ++b) all.middleCols(b * n, n) = vecs[static_cast<std::size_t>(b)];

  const Vector<Scalar> pooled = all.rowwise().mean();
  const auto eig = sym_eig(Eigen::Map<const Matrix<Scalar>>(pooled.data(), m, m));
  const LambdaEstimate<Scalar> truth{eig.vectors, eig.values};
  const auto clt = clt_covariance(truth, all, j);

  const Vector<Scalar> u = truth.u_hat.col(j);
  Matrix<Scalar> scaled(m, batches);
  for (Index b = 0; b < batches; ++b) {
    const Vector<Scalar> mean = vecs[static_cast<std::size_t>(b)].rowwise().mean();
    const auto be = sym_eig(Eigen::Map<const Matrix<Scalar>>(mean.data(), m, m));
    Vector<Scalar> uj = be.vectors.col(j);
    if (uj.dot(u) < 0) uj = -uj;
    scaled.col(b) = std::sqrt(static_cast<Scalar>(n)) * (uj - u);
  }
  const Vector<Scalar> centre = scaled.rowwise().mean();
  const Matrix<Scalar> dev = scaled.colwise() - centre;

  CltCheck out;
  out.t2_diagonal = clt.t2_hat.diagonal().template cast<double>();
  out.mc_variance = (dev.rowwise().squaredNorm() / static_cast<Scalar>(batches - 1)).template cast<double>();
  out.t2_trace = out.t2_diagonal.sum();
  out.mc_trace = out.mc_variance.sum();
  return out;
}

}  // namespace sketchsvd
