#pragma once

#include <sketchsvd/parallel.hpp>
#include <sketchsvd/sketch.hpp>
#include <sketchsvd/stiefel.hpp>

#include <optional>
#include <vector>

namespace sketchsvd {

template <typename Scalar>
struct IsvdResult {
  SvdApprox<Scalar> approx;  ///< rank k
  StiefelPoint<Scalar> qbar;
  KnTrace trace;
  std::vector<double> per_sketch_traces;  ///< tr(Sigma_i) of each Y_i
};

/// Integrated SVD from cfg.n_sketches independent sketches.
///
/// Sketch bases are computed concurrently and gathered in index order; the
/// integration and the final small SVD are sequential. If the integration
/// hits its iteration cap, the remaining steps still run on the last
/// iterate and the completed result is thrown as NotConverged<IsvdResult>.
/// With one sketch the result is bit-identical to rsvd(A, cfg).
template <typename Scalar>
IsvdResult<Scalar> isvd(const LinearOperator<Scalar>& A, const SketchConfig& cfg) {
  cfg.validate(A.rows(), A.cols());
  const auto n = static_cast<std::size_t>(cfg.n_sketches);

  std::vector<std::optional<OrthoBasis<Scalar>>> bases(n);
  parallel_for(n, [&](std::size_t i) { bases[i] = sketch_basis(A, cfg, i); });

  std::vector<StiefelPoint<Scalar>> members;
  std::vector<Vector<Scalar>> sigmas;
  members.reserve(n);
  sigmas.reserve(n);
  IsvdResult<Scalar> result;
  for (auto& b : bases) {
    result.per_sketch_traces.push_back(static_cast<double>(b->sigma.sum()));
    members.push_back(std::move(b->Q));
    sigmas.push_back(std::move(b->sigma));
  }
  bases.clear();

  const ProjectorEnsemble<Scalar> ensemble(members);
  members.clear();
  const auto q_ini = select_initial<Scalar>(ensemble, sigmas);

  bool converged = true;
  try {
    auto kn = kn_integrate(ensemble, q_ini, cfg);
    result.qbar = std::move(kn.qbar);
    result.trace = std::move(kn.trace);
  } catch (const NotConverged<KnResult<Scalar>>& e) {
    result.qbar = e.partial().qbar;
    result.trace = e.partial().trace;
    converged = false;
  }

  result.approx = truncate(project_svd(A, result.qbar), cfg.k);
  if (!converged)
    throw NotConverged<IsvdResult<Scalar>>("isvd: integration reached its iteration cap", std::move(result));
  return result;
}

/// isvd that reports a capped integration through trace.converged instead
/// of throwing.
template <typename Scalar>
IsvdResult<Scalar> isvd_flagged(const LinearOperator<Scalar>& A, const SketchConfig& cfg) {
  try {
    return isvd(A, cfg);
  } catch (const NotConverged<IsvdResult<Scalar>>& e) {
    return e.partial();
  }
}

}  // namespace sketchsvd
