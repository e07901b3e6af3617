#include <sketchsvd/selftest.hpp>

#include <sketchsvd/hadamard.hpp>
#include <sketchsvd/isvd.hpp>
#include <sketchsvd/stats.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace sketchsvd {

namespace {

using Mat = Matrix<double>;
using Vec = Vector<double>;
using Point = StiefelPoint<double>;

Mat randn(Index rows, Index cols, std::uint64_t seed) { return gaussian_matrix(rows, cols, RngStream{seed, 0}); }

Point random_point(Index m, Index l, std::uint64_t seed) { return orthonormalize(randn(m, l, seed)); }

/// Modified Gram-Schmidt, two passes.
Mat gram_schmidt(const Mat& y) {
  Mat q = y;
  for (int pass = 0; pass < 2; ++pass)
    for (Index j = 0; j < q.cols(); ++j) {
      for (Index i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
      q.col(j).normalize();
    }
  return q;
}

std::vector<Point> random_members(Index m, Index l, Index n, std::uint64_t seed) {
  std::vector<Point> out;
  for (Index i = 0; i < n; ++i) out.push_back(random_point(m, l, seed * 1000 + static_cast<std::uint64_t>(i)));
  return out;
}

Mat dense_pbar(const std::vector<Point>& members) {
  Mat p = Mat::Zero(members.front().rows(), members.front().rows());
  for (const auto& q : members) p += q.matrix() * q.matrix().transpose();
  return p / static_cast<double>(members.size());
}

/// Sylvester recursion H_{d+1} = [[H, H], [H, -H]] / sqrt(2).
Mat dense_hadamard(int d) {
  Mat h = Mat::Ones(1, 1);
  for (int i = 0; i < d; ++i) {
    Mat next(2 * h.rows(), 2 * h.cols());
    next << h, h, h, -h;
    h = next / std::sqrt(2.0);
  }
  return h;
}

double rel(double err, double scale) { return err / std::max(scale, 1e-300); }

CheckOutcome orthonormalize_vs_gram_schmidt() {
  const Mat y = randn(20, 5, 11);
  const Mat q = orthonormalize(y).matrix();
  const Mat g = gram_schmidt(y);
  const double proj = (q * q.transpose() - g * g.transpose()).norm();
  const double span = rel((q * (q.transpose() * y) - y).norm(), y.norm());
  const double orth = (q.transpose() * q - Mat::Identity(5, 5)).norm();
  return {std::max({proj, span, orth}), 1e-10};
}

CheckOutcome thin_svd_reconstruction() {
  const Mat b = randn(5, 9, 12);
  const auto s = thin_svd(b);
  return {rel((s.reconstruct() - b).norm(), b.norm()), 1e-10};
}

CheckOutcome sym_eig_reconstruction() {
  const Mat r = randn(8, 8, 13);
  const Mat m = r + r.transpose();
  const auto e = sym_eig(m);
  for (Index i = 1; i < e.values.size(); ++i)
    if (e.values(i) > e.values(i - 1)) return {std::numeric_limits<double>::infinity(), 1e-10};
  return {rel((e.vectors * e.values.asDiagonal() * e.vectors.transpose() - m).norm(), m.norm()), 1e-10};
}

CheckOutcome psd_sqrt_reconstruction() {
  const Mat r = randn(6, 6, 14);
  const Mat m = r * r.transpose();
  const Mat t = psd_sqrt(m);
  return {std::max(rel((t * t - m).norm(), m.norm()), (t - t.transpose()).norm()), 1e-10};
}

CheckOutcome shifted_pinv_penrose() {
  const Mat r = randn(6, 6, 15);
  const Mat m = r + r.transpose();
  const double lambda = 0.37;
  const Mat p = shifted_pinv(m, lambda);
  const Mat s = lambda * Mat::Identity(6, 6) - m;
  return {rel((s * p * s - s).norm(), s.norm()), 1e-8};
}

CheckOutcome gaussian_moments() {
  const Mat g = gaussian_matrix(1000, 100, RngStream{16, 3});
  const double mean = g.mean();
  const double var = (g.array() - mean).square().sum() / static_cast<double>(g.size() - 1);
  return {std::max(std::abs(mean) / 0.02, std::abs(var - 1.0) / 0.03), 1.0};
}

CheckOutcome stream_independence() {
  const Mat a = gaussian_matrix(1000, 100, RngStream{17, 0});
  const Mat b = gaussian_matrix(1000, 100, RngStream{17, 1});
  const auto x = a.reshaped().array() - a.mean();
  const auto y = b.reshaped().array() - b.mean();
  const double rho = (x * y).sum() / std::sqrt(x.square().sum() * y.square().sum());
  return {std::abs(rho), 0.02};
}

CheckOutcome power_sketch_dense() {
  const Mat a = randn(8, 12, 18);
  const Mat omega = randn(12, 3, 19);
  const Mat y = power_sketch(dense_operator(a), omega, 2);
  const Mat aat = a * a.transpose();
  const Mat expect = aat * aat * a * omega;
  return {rel((y - expect).norm(), expect.norm()), 1e-9};
}

CheckOutcome sketch_principal_angles() {
  const auto tm = test_matrix(make_test_matrix_spec(3, 6));
  SketchConfig cfg;
  cfg.k = 5;
  cfg.p = 0;
  cfg.seed = 20;
  double worst = 1.0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const auto basis = sketch_basis(tm.op(), cfg, i);
    const Mat u5 = tm.left_singular_vectors(5);
    const auto cosines = thin_svd(Mat(u5.transpose() * basis.Q.matrix())).S;
    worst = std::min(worst, cosines.minCoeff());
  }
  return {-worst, -1e-6};
}

CheckOutcome apply_pbar_axis_partition() {
  const Index m = 12, l = 3;
  std::vector<Point> members;
  // Axes permuted by a fixed stride before partitioning.
  for (Index i = 0; i < m / l; ++i) {
    Mat q = Mat::Zero(m, l);
    for (Index c = 0; c < l; ++c) q((5 * (i * l + c)) % m, c) = 1.0;
    members.push_back(Point(q));
  }
  const ProjectorEnsemble<double> e(members);
  const Mat x = randn(m, l, 21);
  return {(apply_pbar(e, x) - dense_pbar(members) * x).norm(), 1e-12};
}

CheckOutcome apply_pbar_self_adjoint() {
  const auto members = random_members(30, 4, 7, 22);
  const ProjectorEnsemble<double> e(members);
  const Mat x = randn(30, 4, 23);
  const Mat y = randn(30, 4, 24);
  const double lhs = apply_pbar(e, x).cwiseProduct(y).sum();
  const double rhs = x.cwiseProduct(apply_pbar(e, y)).sum();
  return {rel(std::abs(lhs - rhs), x.norm() * y.norm()), 1e-10};
}

CheckOutcome objective_dense() {
  const auto members = random_members(15, 3, 6, 25);
  const ProjectorEnsemble<double> e(members);
  const Point q = random_point(15, 3, 26);
  const double expect = 0.5 * (q.matrix().transpose() * dense_pbar(members) * q.matrix()).trace();
  return {std::abs(objective(e, q) - expect), 1e-12};
}

CheckOutcome gradient_finite_difference() {
  double worst = 0.0;
  for (std::uint64_t inst = 0; inst < 10; ++inst) {
    const Index m = 6 + static_cast<Index>(inst), l = 1 + static_cast<Index>(inst % 4);
    const auto members = random_members(m, l, 5, 100 + inst);
    const ProjectorEnsemble<double> e(members);
    const Point q = random_point(m, l, 200 + inst);
    const Mat grad = projected_gradient(e, q).X;
    for (std::uint64_t dir = 0; dir < 10; ++dir) {
      Mat v = randn(m, l, 300 + 10 * inst + dir);
      v -= q.matrix() * (q.matrix().transpose() * v);
      v /= v.norm();
      const double eps = 1e-6;
      const double fp = objective(e, retract(q, TangentVector<double>{eps * v}));
      const double fm = objective(e, retract(q, TangentVector<double>{-eps * v}));
      const double fd = (fp - fm) / (2 * eps);
      const double exact = grad.cwiseProduct(v).sum();
      worst = std::max(worst, std::abs(fd - exact) / std::max(std::abs(exact), 1e-8));
    }
  }
  return {worst, 1e-4};
}

CheckOutcome lift_hand_case() {
  const Point qc(Mat(Mat::Identity(3, 1)));
  Mat w(3, 1);
  w << 1, 1, 0;
  const auto x = lift(qc, Point(Mat(w / std::sqrt(2.0))));
  Vec expect(3);
  expect << 0, 0.5, 0;
  return {(x.X - expect).norm(), 1e-15};
}

CheckOutcome average_lift_summation() {
  const auto members = random_members(25, 4, 9, 27);
  const ProjectorEnsemble<double> e(members);
  const Point qc = random_point(25, 4, 28);
  Mat sum = Mat::Zero(25, 4);
  for (const auto& w : members) sum += lift(qc, w).X;
  sum /= static_cast<double>(members.size());
  return {(average_lift(e, qc).X - sum).norm(), 1e-12};
}

CheckOutcome lift_bound() {
  double worst = -1.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto members = random_members(20, 5, 4, 400 + s);
    const ProjectorEnsemble<double> e(members);
    const Point qc = random_point(20, 5, 500 + s);
    for (const auto& w : members) worst = std::max(worst, sym_eig(Mat(lift(qc, w).X.transpose() * lift(qc, w).X)).values(0));
    const Mat xbar = average_lift(e, qc).X;
    worst = std::max(worst, sym_eig(Mat(xbar.transpose() * xbar)).values(0));
  }
  return {worst - 0.25, 1e-12};
}

CheckOutcome matrix_c_scalar() {
  Mat x = Mat::Zero(3, 1);
  x(1, 0) = 0.5;
  return {std::abs(matrix_c(TangentVector<double>{x})(0, 0) - std::sqrt(0.5)), 1e-15};
}

CheckOutcome matrix_c_quartic() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto members = random_members(18, 4, 3, 600 + s);
    const ProjectorEnsemble<double> e(members);
    const Point qc = random_point(18, 4, 700 + s);
    const auto x = average_lift(e, qc);
    for (double tau : {1.0, 0.5}) {
      const Mat c = matrix_c(x, tau);
      const Mat xtx = x.X.transpose() * x.X;
      const Mat c2 = c * c;
      worst = std::max(worst, (c2 * c2 - c2 + tau * tau * xtx).norm());
      // Nested square roots as an independent route.
      const Mat id = Mat::Identity(4, 4);
      const Mat nested = psd_sqrt(Mat(0.5 * id + psd_sqrt(Mat(0.25 * id - tau * tau * xtx))));
      worst = std::max(worst, (nested - c).norm());
    }
  }
  return {worst, 1e-9};
}

CheckOutcome retract_hand_case() {
  const Point qc(Mat(Mat::Identity(3, 1)));
  Mat x = Mat::Zero(3, 1);
  x(1, 0) = 0.5;
  const auto qp = retract(qc, TangentVector<double>{x});
  Vec expect(3);
  expect << 1, 1, 0;
  expect /= std::sqrt(2.0);
  return {std::max((qp.matrix() - expect).norm(), (lift(qc, qp).X - x).norm()), 1e-12};
}

CheckOutcome retract_round_trip() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto members = random_members(22, 3, 5, 800 + s);
    const ProjectorEnsemble<double> e(members);
    const Point qc = random_point(22, 3, 900 + s);
    const auto x = average_lift(e, qc);
    for (double tau : {1.0, 0.5}) {
      const auto qp = retract(qc, x, tau);
      worst = std::max(worst, (lift(qc, qp).X - tau * x.X).norm());
      worst = std::max(worst, qp.orthonormality_defect());
    }
  }
  return {worst, 1e-9};
}

CheckOutcome kn_dense_oracle() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Index m = 20 + 5 * static_cast<Index>(s), l = 3;
    Vec sv = Vec::LinSpaced(m, 1.0, 0.0).array().pow(3.0);
    const Mat a = random_point(m, m, 1000 + s).matrix() * sv.asDiagonal() * random_point(m, m, 1100 + s).matrix();
    SketchConfig cfg;
    cfg.k = l;
    cfg.p = 0;
    cfg.seed = 1200 + s;
    cfg.tol = 1e-16;
    cfg.max_iter = 20000;
    const auto op = dense_operator(a);
    std::vector<Point> members;
    std::vector<Vec> sigmas;
    for (std::uint64_t i = 0; i < 6; ++i) {
      auto b = sketch_basis(op, cfg, i);
      members.push_back(b.Q);
      sigmas.push_back(b.sigma);
    }
    const ProjectorEnsemble<double> e(members);
    const auto kn = kn_integrate(e, select_initial<double>(e, sigmas), cfg);
    const auto eig = sym_eig(dense_pbar(members));
    const Mat lead = eig.vectors.leftCols(l);
    worst = std::max(worst, (kn.qbar.matrix() * kn.qbar.matrix().transpose() - lead * lead.transpose()).norm());
  }
  return {worst, 1e-6};
}

CheckOutcome truncate_monotone() {
  const Mat a = randn(30, 40, 29);
  SketchConfig cfg;
  cfg.k = 12;
  cfg.p = 0;
  cfg.seed = 30;
  const auto op = dense_operator(a);
  const auto full = project_svd(op, sketch_basis(op, cfg, 0).Q);
  const double res_l = (a - full.reconstruct()).norm();
  const double res_k = (a - truncate(full, 5).reconstruct()).norm();
  return {res_l - res_k, 0.0};
}

CheckOutcome rank_k_error_dense() {
  const auto make = [](std::uint64_t seed) {
    Vec s = randn(4, 1, seed + 2).cwiseAbs();
    std::sort(s.data(), s.data() + s.size(), std::greater<>());
    return SvdApprox<double>{random_point(20, 4, seed).matrix(), s, random_point(30, 4, seed + 1).matrix()};
  };
  const auto a = make(31);
  const auto b = make(41);
  const Mat diff = a.reconstruct() - b.reconstruct();
  Eigen::JacobiSVD<Mat> svd(diff);
  const double fro = std::abs(rank_k_error(a, b, ErrorNorm::frobenius) - diff.norm());
  const double spec = rel(std::abs(rank_k_error(a, b, ErrorNorm::spectral) - svd.singularValues()(0)),
                          svd.singularValues()(0));
  return {std::max(fro / 1e-10, spec / 1e-8), 1.0};
}

CheckOutcome delta_hand_case() {
  LambdaEstimate<double> t{Mat::Identity(2, 2), Vec(2)};
  t.lambda_hat << 2, 1;
  Mat expect = Mat::Zero(2, 4);
  expect(1, 1) = 1.0;
  return {(delta_matrix(t, 0) - expect).norm(), 1e-15};
}

CheckOutcome hadamard_orthogonal() {
  double worst = 0.0;
  for (int d = 0; d <= 10; ++d) {
    const Mat h = to_dense(hadamard_operator(d));
    worst = std::max(worst, (h.transpose() * h - Mat::Identity(h.rows(), h.cols())).norm());
  }
  const Mat h1 = to_dense(hadamard_operator(1));
  Mat e1(2, 2);
  e1 << 1, 1, 1, -1;
  worst = std::max(worst, (h1 - e1 / std::sqrt(2.0)).norm());
  return {worst, 1e-12};
}

CheckOutcome build_sigma_values() {
  const Vec s = build_sigma(9);
  double worst = 0.0;
  const auto check = [&](Index j, double expect) { worst = std::max(worst, std::abs(s(j - 1) / expect - 1.0)); };
  check(1, 1.0);
  check(2, 0.37678);
  check(3, 0.25119);
  check(9, 0.0039811);
  check(10, 0.0015);
  check(11, 0.001);
  for (Index j = 1; j < 11; ++j)
    if (!(s(j) < s(j - 1))) return {std::numeric_limits<double>::infinity(), 5e-5};
  if (s(s.size() - 1) != 0.0 || s.minCoeff() < 0.0) return {std::numeric_limits<double>::infinity(), 5e-5};
  return {worst, 5e-5};
}

CheckOutcome test_matrix_dense() {
  const auto spec = make_test_matrix_spec(3, 6);
  const auto tm = test_matrix(spec);
  const Mat sigma_block = [&] {
    Mat s = Mat::Zero(8, 16);
    s.leftCols(8) = spec.sigma.asDiagonal();
    return s;
  }();
  const Mat a = dense_hadamard(3) * sigma_block * dense_hadamard(4).transpose();
  const Mat x = randn(16, 10, 32);
  const Mat y = randn(8, 10, 33);
  return {std::max((tm.op().apply(x) - a * x).norm(), (tm.op().apply_transpose(y) - a.transpose() * y).norm()),
          1e-12};
}

CheckOutcome operator_norm() {
  const auto tm = test_matrix(make_test_matrix_spec(6));
  Mat v = randn(tm.spec().cols(), 1, 34);
  double est = 0.0;
  for (int it = 0; it < 200; ++it) {
    v = tm.op().apply_transpose(tm.op().apply(v));
    est = std::sqrt(v.norm());
    v /= v.norm();
  }
  return {std::abs(est - 1.0), 1e-6};
}

CheckOutcome singular_triples() {
  const auto tm = test_matrix(make_test_matrix_spec(9));
  const auto t = tm.truth(5);
  return {(tm.op().apply(t.V) - t.U * t.S.asDiagonal()).colwise().norm().maxCoeff(), 1e-10};
}

CheckOutcome operator_adjoint() {
  const auto tm = test_matrix(make_test_matrix_spec(5));
  const Mat x = randn(64, 3, 35);
  const Mat y = randn(32, 3, 36);
  const double lhs = tm.op().apply(x).cwiseProduct(y).sum();
  const double rhs = x.cwiseProduct(tm.op().apply_transpose(y)).sum();
  const Mat z = randn(64, 3, 37);
  const double lin = (tm.op().apply(Mat(2.0 * x - 3.0 * z)) - 2.0 * tm.op().apply(x) + 3.0 * tm.op().apply(z)).norm();
  return {std::max(rel(std::abs(lhs - rhs), x.norm() * y.norm()), rel(lin, x.norm() + z.norm())), 1e-10};
}

}  // namespace

std::vector<SelfCheck> selftest_checks() {
  return {
      {"dense.orthonormalize_vs_gram_schmidt", orthonormalize_vs_gram_schmidt},
      {"dense.thin_svd_reconstruction", thin_svd_reconstruction},
      {"dense.sym_eig_reconstruction", sym_eig_reconstruction},
      {"dense.psd_sqrt_reconstruction", psd_sqrt_reconstruction},
      {"dense.shifted_pinv_penrose", shifted_pinv_penrose},
      {"dense.operator_adjoint_and_linearity", operator_adjoint},
      {"sketch.gaussian_moments", gaussian_moments},
      {"sketch.stream_independence", stream_independence},
      {"sketch.power_sketch_dense_product", power_sketch_dense},
      {"sketch.principal_angles_below_right_angle", sketch_principal_angles},
      {"stiefel.apply_pbar_axis_partition", apply_pbar_axis_partition},
      {"stiefel.apply_pbar_self_adjoint", apply_pbar_self_adjoint},
      {"stiefel.objective_dense", objective_dense},
      {"stiefel.gradient_finite_difference", gradient_finite_difference},
      {"stiefel.lift_hand_case", lift_hand_case},
      {"stiefel.average_lift_summation", average_lift_summation},
      {"stiefel.lift_bound", lift_bound},
      {"stiefel.matrix_c_scalar", matrix_c_scalar},
      {"stiefel.matrix_c_quartic_and_nested_roots", matrix_c_quartic},
      {"stiefel.retract_hand_case", retract_hand_case},
      {"stiefel.retract_round_trip", retract_round_trip},
      {"stiefel.kn_dense_eigenprojector", kn_dense_oracle},
      {"isvd.truncate_monotone", truncate_monotone},
      {"stats.rank_k_error_dense", rank_k_error_dense},
      {"stats.delta_hand_case", delta_hand_case},
      {"bench.hadamard_orthogonal", hadamard_orthogonal},
      {"bench.build_sigma_values", build_sigma_values},
      {"bench.test_matrix_dense", test_matrix_dense},
      {"bench.operator_norm", operator_norm},
      {"bench.singular_triples", singular_triples},
  };
}

}  // namespace sketchsvd
