#include <doctest.h>

#include <sketchsvd/dense.hpp>
#include <sketchsvd/linear_operator.hpp>
#include <sketchsvd/rng.hpp>

using namespace sketchsvd;
using Mat = Matrix<double>;
using Vec = Vector<double>;

namespace {
Mat randn(Index r, Index c, std::uint64_t seed) { return gaussian_matrix(r, c, RngStream{seed, 0}); }
}  // namespace

TEST_CASE("orthonormalize keeps the span") {
  SUBCASE("already orthonormal input gives the same projector") {
    const Mat y = orthonormalize(randn(10, 3, 1)).matrix();
    const Mat q = orthonormalize(y).matrix();
    CHECK((q * q.transpose() - y * y.transpose()).norm() < 1e-12);
  }
  SUBCASE("axis-aligned input") {
    Mat y(3, 2);
    y << 2, 0, 0, 3, 0, 0;
    const Mat q = orthonormalize(y).matrix();
    CHECK((q.transpose() * q - Mat::Identity(2, 2)).norm() < 1e-14);
    CHECK(q.row(2).norm() < 1e-14);
  }
  SUBCASE("singular values come with the basis") {
    Mat y(3, 2);
    y << 2, 0, 0, 3, 0, 0;
    const auto b = orthonormal_basis(y);
    CHECK(b.sigma(0) == doctest::Approx(3.0));
    CHECK(b.sigma(1) == doctest::Approx(2.0));
  }
  SUBCASE("rank deficiency is reported") {
    Mat y = randn(8, 3, 2);
    y.col(2) = y.col(0) - 2 * y.col(1);
    CHECK_THROWS_AS(orthonormalize(y), RankDeficient);
    CHECK_THROWS_AS(orthonormalize(Mat::Zero(4, 2)), RankDeficient);
  }
  SUBCASE("wide input is rejected") { CHECK_THROWS_AS(orthonormalize(randn(2, 3, 3)), std::invalid_argument); }
  SUBCASE("span and orthonormality invariants") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const Mat y = randn(15 + static_cast<Index>(s), 1 + static_cast<Index>(s % 7), 100 + s);
      const Mat q = orthonormalize(y).matrix();
      CHECK((q.transpose() * q - Mat::Identity(q.cols(), q.cols())).norm() < 1e-10);
      CHECK((q * (q.transpose() * y) - y).norm() < 1e-9 * y.norm());
    }
  }
}

TEST_CASE("thin_svd") {
  SUBCASE("diagonal block") {
    Mat b = Mat::Zero(2, 4);
    b(0, 0) = 3;
    b(1, 1) = 1;
    const auto s = thin_svd(b);
    CHECK(s.S(0) == doctest::Approx(3.0));
    CHECK(s.S(1) == doctest::Approx(1.0));
    CHECK((s.U.cwiseAbs() - Mat::Identity(2, 2)).norm() < 1e-14);
  }
  SUBCASE("zero block") {
    const auto s = thin_svd(Mat::Zero(2, 4));
    CHECK(s.S.norm() == 0.0);
  }
  SUBCASE("tall block is rejected") { CHECK_THROWS_AS(thin_svd(randn(4, 2, 4)), std::invalid_argument); }
  SUBCASE("singular values match the eigenvalues of B B^T") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const Mat b = randn(6, 12, 200 + s);
      const auto svd = thin_svd(b);
      const auto eig = sym_eig(Mat(b * b.transpose()));
      for (Index i = 0; i < 6; ++i) CHECK(std::abs(svd.S(i) - std::sqrt(eig.values(i))) < 1e-8 * svd.S(i));
      CHECK((svd.U.transpose() * svd.U - Mat::Identity(6, 6)).norm() < 1e-10);
      CHECK((svd.V.transpose() * svd.V - Mat::Identity(6, 6)).norm() < 1e-10);
    }
  }
}

TEST_CASE("sym_eig") {
  SUBCASE("identity") {
    const auto e = sym_eig(Mat::Identity(3, 3));
    CHECK((e.values - Vec::Ones(3)).norm() < 1e-15);
  }
  SUBCASE("diagonal sorted descending") {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = 1;
    m(1, 1) = 4;
    const auto e = sym_eig(m);
    CHECK(e.values(0) == doctest::Approx(4.0));
    CHECK(e.values(1) == doctest::Approx(1.0));
    CHECK(std::abs(e.vectors(1, 0)) == doctest::Approx(1.0));
  }
  SUBCASE("asymmetric input is rejected") {
    Mat m = Mat::Identity(3, 3);
    m(0, 1) = 0.5;
    CHECK_THROWS_AS(sym_eig(m), std::invalid_argument);
  }
  SUBCASE("orthonormal vectors") {
    const Mat r = randn(9, 9, 5);
    const auto e = sym_eig(Mat(r + r.transpose()));
    CHECK((e.vectors.transpose() * e.vectors - Mat::Identity(9, 9)).norm() < 1e-10);
  }
}

TEST_CASE("psd_sqrt") {
  CHECK((psd_sqrt(Mat::Identity(3, 3)) - Mat::Identity(3, 3)).norm() < 1e-15);
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = 4;
  m(1, 1) = 9;
  const Mat t = psd_sqrt(m);
  CHECK(t(0, 0) == doctest::Approx(2.0));
  CHECK(t(1, 1) == doctest::Approx(3.0));
  CHECK(std::abs(t(0, 1)) < 1e-15);

  SUBCASE("commutes with its argument") {
    const Mat r = randn(7, 7, 6);
    const Mat a = r * r.transpose();
    const Mat s = psd_sqrt(a);
    CHECK((s * a - a * s).norm() <= 1e-9 * a.norm());
  }
  SUBCASE("rounding dust below zero is clamped") {
    Mat d = Mat::Zero(2, 2);
    d(0, 0) = 1;
    d(1, 1) = -1e-13;
    CHECK(psd_sqrt(d)(1, 1) == 0.0);
  }
  SUBCASE("indefinite input throws") {
    Mat d = Mat::Zero(2, 2);
    d(0, 0) = 1;
    d(1, 1) = -1e-3;
    CHECK_THROWS_AS(psd_sqrt(d), NotPositiveSemiDefinite);
  }
}

TEST_CASE("shifted_pinv") {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = 2;
  m(1, 1) = 1;
  const Mat p = shifted_pinv(m, 2.0);
  CHECK(std::abs(p(0, 0)) < 1e-15);
  CHECK(p(1, 1) == doctest::Approx(1.0));
  CHECK((shifted_pinv(Mat::Zero(3, 3), 1.0) - Mat::Identity(3, 3)).norm() < 1e-15);
}

TEST_CASE("linear operators") {
  const Mat a = randn(5, 7, 7);
  const auto op = dense_operator(a);
  CHECK(op.rows() == 5);
  CHECK(op.cols() == 7);
  CHECK((to_dense(op) - a).norm() == 0.0);
  CHECK_THROWS_AS(op.apply(Mat::Zero(5, 1)), std::invalid_argument);
  CHECK_THROWS_AS(op.apply_transpose(Mat::Zero(7, 1)), std::invalid_argument);
  const Mat x = randn(7, 2, 8);
  const Mat y = randn(5, 2, 9);
  CHECK(std::abs(op.apply(x).cwiseProduct(y).sum() - x.cwiseProduct(op.apply_transpose(y)).sum()) <
        1e-10 * x.norm() * y.norm());
}

TEST_CASE("stiefel point validation") {
  CHECK_THROWS_AS(StiefelPoint<double>(Mat::Ones(3, 2)), std::invalid_argument);
  CHECK_THROWS_AS(StiefelPoint<double>(Mat::Identity(2, 3)), std::invalid_argument);
  CHECK_NOTHROW(StiefelPoint<double>(Mat::Identity(3, 2)));
}
