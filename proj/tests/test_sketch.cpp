#include <doctest.h>

#include <sketchsvd/hadamard.hpp>
#include <sketchsvd/sketch.hpp>
#include <sketchsvd/stats.hpp>

using namespace sketchsvd;
using Mat = Matrix<double>;
using Vec = Vector<double>;

namespace {
Mat randn(Index r, Index c, std::uint64_t seed) { return gaussian_matrix(r, c, RngStream{seed, 0}); }

Mat diag3() {
  Vec d(3);
  d << 25, 5, 1;
  return d.asDiagonal();
}
}  // namespace

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using C = Philox4x32::Counter;
  CHECK(Philox4x32::generate({0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("gaussian_matrix") {
  SUBCASE("same stream gives identical matrices") {
    const Mat a = gaussian_matrix(37, 5, RngStream{42, 3});
    const Mat b = gaussian_matrix(37, 5, RngStream{42, 3});
    CHECK(a == b);
  }
  SUBCASE("streams and seeds differ") {
    const Mat a = gaussian_matrix(10, 2, RngStream{42, 3});
    CHECK(a != gaussian_matrix(10, 2, RngStream{42, 4}));
    CHECK(a != gaussian_matrix(10, 2, RngStream{43, 3}));
  }
  SUBCASE("entries depend only on their position") {
    const Mat small = gaussian_matrix(7, 3, RngStream{5, 0});
    const Mat big = gaussian_matrix(21, 1, RngStream{5, 0});
    CHECK(small.reshaped() == big.reshaped());
  }
  SUBCASE("child streams are distinct") {
    const RngStream root{9, 1};
    CHECK(root.split(0).seed != root.split(1).seed);
    CHECK(root.split(0).seed != RngStream{9, 2}.split(0).seed);
  }
}

TEST_CASE("power_sketch") {
  const auto op = dense_operator(diag3());
  SUBCASE("q = 0 is A Omega") {
    const Mat omega = randn(3, 2, 1);
    CHECK(power_sketch(op, omega, 0) == diag3() * omega);
  }
  SUBCASE("diagonal single column") {
    const Mat y = power_sketch(op, Mat(Mat::Identity(3, 1)), 1);
    CHECK(y(0, 0) == doctest::Approx(15625.0));
    CHECK(y(1, 0) == 0.0);
    CHECK(y(2, 0) == 0.0);
  }
  SUBCASE("dense composition on random probes") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const Index m = 2 + static_cast<Index>(s % 15), n = m + static_cast<Index>(s % 3);
      const Mat a = randn(m, n, 10 + s);
      const Mat omega = randn(n, 2, 50 + s);
      const int q = static_cast<int>(s % 3);
      Mat expect = a * omega;
      for (int i = 0; i < q; ++i) expect = a * (a.transpose() * expect);
      CHECK((power_sketch(dense_operator(a), omega, q) - expect).norm() <= 1e-9 * expect.norm());
    }
  }
  SUBCASE("stabilized variant spans the same subspace") {
    const Mat a = randn(12, 16, 77);
    const Mat omega = randn(16, 3, 78);
    const Mat lit = orthonormalize(power_sketch(dense_operator(a), omega, 2)).matrix();
    const Mat stab = orthonormalize(power_sketch(dense_operator(a), omega, 2, true)).matrix();
    CHECK((lit * lit.transpose() - stab * stab.transpose()).norm() < 1e-8);
  }
  SUBCASE("wrong Omega shape") { CHECK_THROWS_AS(power_sketch(op, Mat(Mat::Zero(4, 1)), 0), std::invalid_argument); }
}

TEST_CASE("SketchConfig validation") {
  SketchConfig cfg;
  CHECK_NOTHROW(cfg.validate(512, 1024));
  CHECK_THROWS_AS(cfg.validate(20, 30), std::invalid_argument);
  cfg.k = 0;
  CHECK_THROWS_AS(cfg.validate(512, 1024), std::invalid_argument);
  cfg = {};
  cfg.tau = 1.5;
  CHECK_THROWS_AS(cfg.validate(512, 1024), std::invalid_argument);
  cfg = {};
  cfg.tol = 0;
  CHECK_THROWS_AS(cfg.validate(512, 1024), std::invalid_argument);
  cfg = {};
  cfg.q = -1;
  CHECK_THROWS_AS(cfg.validate(512, 1024), std::invalid_argument);
  cfg = {};
  cfg.n_sketches = 0;
  CHECK_THROWS_AS(cfg.validate(512, 1024), std::invalid_argument);
}

TEST_CASE("sketch_basis") {
  SketchConfig cfg;
  cfg.k = 3;
  cfg.p = 0;
  cfg.seed = 4;
  const auto b = sketch_basis(dense_operator(diag3()), cfg, 0);
  CHECK((b.Q.matrix() * b.Q.matrix().transpose() - Mat::Identity(3, 3)).norm() < 1e-12);
  CHECK(b.sigma.size() == 3);

  const auto tm = test_matrix(make_test_matrix_spec(6));
  cfg.k = 10;
  cfg.p = 12;
  for (std::uint64_t i = 0; i < 5; ++i) CHECK(sketch_basis(tm.op(), cfg, i).Q.orthonormality_defect() < 1e-10);
}

TEST_CASE("rsvd") {
  SUBCASE("exact when the sketch covers the rank") {
    SketchConfig cfg;
    cfg.k = 3;
    cfg.p = 0;
    cfg.seed = 11;
    const auto r = rsvd(dense_operator(diag3()), cfg);
    CHECK(std::abs(r.S(0) - 25) < 1e-10);
    CHECK(std::abs(r.S(1) - 5) < 1e-10);
    CHECK(std::abs(r.S(2) - 1) < 1e-10);
    CHECK((similarity(r.U, Mat(Mat::Identity(3, 3))) - Vec::Ones(3)).norm() < 1e-10);
  }
  SUBCASE("bit-for-bit reproducible") {
    const auto tm = test_matrix(make_test_matrix_spec(7));
    SketchConfig cfg;
    cfg.seed = 99;
    cfg.q = 1;
    const auto a = rsvd(tm.op(), cfg);
    const auto b = rsvd(tm.op(), cfg);
    CHECK(a.U == b.U);
    CHECK(a.S == b.S);
    CHECK(a.V == b.V);
  }
  SUBCASE("never beats the best rank-k residual") {
    const auto tm = test_matrix(make_test_matrix_spec(6));
    const Mat a = to_dense(tm.op());
    const Vec sigma = tm.sigma();
    const double best = std::sqrt(sigma.tail(sigma.size() - 10).squaredNorm());
    for (std::uint64_t s = 0; s < 10; ++s) {
      SketchConfig cfg;
      cfg.seed = s;
      const auto r = rsvd(tm.op(), cfg);
      CHECK((a - r.reconstruct()).norm() >= best * (1 - 1e-12));
      CHECK((r.U.transpose() * r.U - Mat::Identity(10, 10)).norm() < 1e-10);
      CHECK((r.V.transpose() * r.V - Mat::Identity(10, 10)).norm() < 1e-10);
      for (Index j = 1; j < r.rank(); ++j) CHECK(r.S(j) <= r.S(j - 1));
    }
  }
}
