#pragma once

// Integration of sketched subspaces on the Stiefel manifold St(m, l).
//
// The integrated basis maximizes F(Q) = 1/2 tr(Q^T Pbar Q), where Pbar is the
// mean of the sketch projectors Q_i Q_i^T. It is found by a Kolmogorov-Nagumo
// fixed-point iteration: lift every Q_i into the tangent space at the current
// iterate with
//
//     lift_Qc(W) = (I - Qc Qc^T) W W^T Qc,
//
// average the lifted points (which equals the projected gradient D_F(Qc)),
// and pull the average X back with the retraction
//
//     Q+ = Qc C + tau X C^{-1},   C = (I/2 + (I/4 - tau^2 X^T X)^{1/2})^{1/2}.
//
// C solves C^4 - C^2 + tau^2 X^T X = 0, which is what keeps Q+ orthonormal.
// Pbar is an m x m object and is never formed here; everything goes through
// products with the stacked m x (N l) member matrix.

#include <sketchsvd/dense.hpp>
#include <sketchsvd/sketch.hpp>

#include <span>
#include <vector>

namespace sketchsvd {

/// A matrix in the tangent space at some StiefelPoint Q, i.e.
/// X^T Q + Q^T X = 0. The vectors produced here also satisfy Q^T X = 0.
template <typename Scalar>
struct TangentVector {
  Matrix<Scalar> X;

  const Matrix<Scalar>& matrix() const noexcept { return X; }
};

/// ||X^T Q + Q^T X||_F
template <typename Scalar>
Scalar tangency_defect(const StiefelPoint<Scalar>& base, const TangentVector<Scalar>& x) {
  const Matrix<Scalar> cross = x.X.transpose() * base.matrix();
  return (cross + cross.transpose()).norm();
}

/// N sketch bases of identical shape; stands in for Pbar.
template <typename Scalar>
class ProjectorEnsemble {
 public:
  explicit ProjectorEnsemble(std::span<const StiefelPoint<Scalar>> members) {
    if (members.empty())
      throw std::invalid_argument("ProjectorEnsemble: need at least one member");
    rows_ = members.front().rows();
    width_ = members.front().cols();
    count_ = static_cast<Index>(members.size());
    stacked_.resize(rows_, width_ * count_);
    for (Index i = 0; i < count_; ++i) {
      const auto& q = members[static_cast<std::size_t>(i)];
      if (q.rows() != rows_ || q.cols() != width_)
        throw std::invalid_argument("ProjectorEnsemble: members differ in shape");
      stacked_.middleCols(i * width_, width_) = q.matrix();
    }
  }

  Index size() const noexcept { return count_; }
  Index rows() const noexcept { return rows_; }
  Index width() const noexcept { return width_; }

  auto member(Index i) const { return stacked_.middleCols(i * width_, width_); }

  /// All members side by side, m x (N l).
  const Matrix<Scalar>& stacked() const noexcept { return stacked_; }

 private:
  Index rows_ = 0;
  Index width_ = 0;
  Index count_ = 0;
  Matrix<Scalar> stacked_;
};

/// Pbar * Q = (1/N) sum_i Q_i (Q_i^T Q), accumulated in member order.
template <typename Scalar, typename Derived>
Matrix<Scalar> apply_pbar(const ProjectorEnsemble<Scalar>& ensemble, const Eigen::MatrixBase<Derived>& q) {
  if (q.rows() != ensemble.rows())
    throw std::invalid_argument("apply_pbar: dimension mismatch");
  constexpr Index kChunk = 4;
  const Index width = ensemble.width();
  Matrix<Scalar> out = Matrix<Scalar>::Zero(q.rows(), q.cols());
  Matrix<Scalar> coeff;
  for (Index first = 0; first < ensemble.size(); first += kChunk) {
    const Index count = std::min(kChunk, ensemble.size() - first);
    const auto block = ensemble.stacked().middleCols(first * width, count * width);
    coeff.noalias() = block.transpose() * q;
    out.noalias() += block * coeff;
  }
  out /= static_cast<Scalar>(ensemble.size());
  return out;
}

/// F(Q) = 1/2 tr(Q^T Pbar Q), in [0, l/2].
template <typename Scalar>
Scalar objective(const ProjectorEnsemble<Scalar>& ensemble, const StiefelPoint<Scalar>& q) {
  return Scalar(0.5) * (q.matrix().transpose() * apply_pbar(ensemble, q.matrix())).trace();
}

/// D_F(Q) = (I - Q Q^T) Pbar Q.
template <typename Scalar>
TangentVector<Scalar> projected_gradient(const ProjectorEnsemble<Scalar>& ensemble, const StiefelPoint<Scalar>& q) {
  const Matrix<Scalar> g = apply_pbar(ensemble, q.matrix());
  return {g - q.matrix() * (q.matrix().transpose() * g)};
}

/// Lifting map lift_Qc(W) = (I - Qc Qc^T) W (W^T Qc).
template <typename Scalar>
TangentVector<Scalar> lift(const StiefelPoint<Scalar>& base, const StiefelPoint<Scalar>& w) {
  if (base.rows() != w.rows() || base.cols() != w.cols())
    throw std::invalid_argument("lift: shape mismatch");
  const Matrix<Scalar> pulled = w.matrix() * (w.matrix().transpose() * base.matrix());
  return {pulled - base.matrix() * (base.matrix().transpose() * pulled)};
}

/// Mean of lift_Qc(Q_i) over the ensemble. Identical to the projected
/// gradient, which is how it is computed.
template <typename Scalar>
TangentVector<Scalar> average_lift(const ProjectorEnsemble<Scalar>& ensemble, const StiefelPoint<Scalar>& base) {
  return projected_gradient(ensemble, base);
}

template <typename Scalar>
struct RetractionFactors {
  Matrix<Scalar> C;
  Matrix<Scalar> C_inv;
  /// ||C - I||_F, evaluated from the eigenvalues without cancellation.
  Scalar c_residual = 0;
};

/// C and C^{-1} for the retraction. Both are functions of X^T X, so one
/// eigendecomposition X^T X = G diag(e) G^T gives
/// C = G diag(sqrt(1/2 + sqrt(1/4 - tau^2 e))) G^T.
/// Throws NotPositiveSemiDefinite if I/4 - tau^2 X^T X is indefinite beyond
/// rounding.
template <typename Scalar>
RetractionFactors<Scalar> retraction_factors(const TangentVector<Scalar>& x, Scalar tau) {
  const Matrix<Scalar> gram = x.X.transpose() * x.X;
  const auto eig = sym_eig(gram);
  const Index l = gram.rows();
  Vector<Scalar> c(l);
  Vector<Scalar> shift(l);
  for (Index i = 0; i < l; ++i) {
    const Scalar e = std::max(eig.values(i), Scalar(0));
    const Scalar inner = Scalar(0.25) - tau * tau * eig.values(i);
    if (inner < -Scalar(relative_tolerance(1e-10, 0.25)))
      throw NotPositiveSemiDefinite("matrix_c: I/4 - tau^2 X^T X is not positive semi-definite");
    const Scalar root = std::sqrt(std::max(inner, Scalar(0)));
    c(i) = std::sqrt(Scalar(0.5) + root);
    // c - 1 = (c^2 - 1) / (c + 1) and c^2 - 1 = -tau^2 e / (1/2 + root).
    shift(i) = -(tau * tau * e) / ((Scalar(0.5) + root) * (c(i) + Scalar(1)));
  }
  return {eig.vectors * c.asDiagonal() * eig.vectors.transpose(),
          eig.vectors * c.cwiseInverse().asDiagonal() * eig.vectors.transpose(), shift.norm()};
}

template <typename Scalar>
Matrix<Scalar> matrix_c(const TangentVector<Scalar>& x, Scalar tau = Scalar(1)) {
  return retraction_factors(x, tau).C;
}

/// Q+ = Q C + tau X C^{-1}.
template <typename Scalar>
StiefelPoint<Scalar> retract(const StiefelPoint<Scalar>& base, const TangentVector<Scalar>& x,
                             Scalar tau = Scalar(1)) {
  const auto f = retraction_factors(x, tau);
  return StiefelPoint<Scalar>::trusted(base.matrix() * f.C + tau * (x.X * f.C_inv));
}

/// Index of the largest tr(Sigma_i); ties go to the smallest index.
template <typename Scalar>
std::size_t select_initial_index(std::span<const Vector<Scalar>> sigmas) {
  if (sigmas.empty()) throw std::invalid_argument("select_initial: empty list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < sigmas.size(); ++i)
    if (sigmas[i].sum() > sigmas[best].sum()) best = i;
  return best;
}

template <typename Scalar>
StiefelPoint<Scalar> select_initial(const ProjectorEnsemble<Scalar>& ensemble,
                                    std::span<const Vector<Scalar>> sigmas) {
  if (static_cast<Index>(sigmas.size()) != ensemble.size())
    throw std::invalid_argument("select_initial: one singular-value list per member expected");
  return StiefelPoint<Scalar>::trusted(ensemble.member(static_cast<Index>(select_initial_index(sigmas))));
}

struct KnTrace {
  int iterations = 0;
  double final_c_residual = 0.0;       ///< ||C - I||_F of the last step
  std::vector<double> objective_history;  ///< F at each iterate before its step
  double max_orthonormality_defect = 0.0;  ///< over all iterates
  bool converged = false;
};

template <typename Scalar>
struct KnResult {
  StiefelPoint<Scalar> qbar;
  KnTrace trace;
};

/// Kolmogorov-Nagumo fixed-point iteration for argmax F.
///
/// Iterates Q <- retract(Q, average_lift(Q), tau) until ||C - I||_F < cfg.tol.
/// Throws NotConverged<KnResult> carrying the last iterate after
/// cfg.max_iter steps. A single-member ensemble is its own maximizer and is
/// returned unchanged after one step's residual has been recorded.
template <typename Scalar>
KnResult<Scalar> kn_integrate(const ProjectorEnsemble<Scalar>& ensemble, const StiefelPoint<Scalar>& q_ini,
                              const SketchConfig& cfg) {
  if (q_ini.rows() != ensemble.rows() || q_ini.cols() != ensemble.width())
    throw std::invalid_argument("kn_integrate: initial iterate has the wrong shape");
  if (!(cfg.tol > 0.0) || cfg.max_iter < 1 || !(cfg.tau > 0.0 && cfg.tau <= 1.0))
    throw std::invalid_argument("kn_integrate: invalid tolerance, iteration cap or step");

  const auto tau = static_cast<Scalar>(cfg.tau);

  KnTrace trace;
  StiefelPoint<Scalar> current = q_ini;
  trace.max_orthonormality_defect = static_cast<double>(current.orthonormality_defect());

  while (trace.iterations < cfg.max_iter) {
    const Matrix<Scalar>& q = current.matrix();
    const Matrix<Scalar> g = apply_pbar(ensemble, q);
    const Matrix<Scalar> qtg = q.transpose() * g;
    trace.objective_history.push_back(static_cast<double>(Scalar(0.5) * qtg.trace()));

    const TangentVector<Scalar> x{g - q * qtg};
    const auto f = retraction_factors(x, tau);
    trace.final_c_residual = static_cast<double>(f.c_residual);
    ++trace.iterations;

    if (ensemble.size() == 1) {
      trace.converged = true;
      return {StiefelPoint<Scalar>::trusted(ensemble.member(0)), std::move(trace)};
    }

    current = StiefelPoint<Scalar>::trusted(q * f.C + tau * (x.X * f.C_inv));
    trace.max_orthonormality_defect =
        std::max(trace.max_orthonormality_defect, static_cast<double>(current.orthonormality_defect()));

    if (trace.final_c_residual < cfg.tol) {
      trace.converged = true;
      return {std::move(current), std::move(trace)};
    }
  }

  KnResult<Scalar> partial{std::move(current), std::move(trace)};
  throw NotConverged<KnResult<Scalar>>("kn_integrate: iteration cap reached before ||C - I|| < tol",
                                       std::move(partial));
}

}  // namespace sketchsvd
