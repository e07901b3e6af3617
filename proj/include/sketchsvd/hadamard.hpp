#pragma once

// Test matrices A = H_d Sigma H_{d+1}^T of size 2^d x 2^{d+1}, applied with
// two fast Walsh-Hadamard transforms and a diagonal scale. H_d is the
// Sylvester-Hadamard matrix scaled by 2^{-d/2}, so it is symmetric and
// orthogonal and its columns are the exact singular vectors.

#include <sketchsvd/linear_operator.hpp>

#include <cmath>

namespace sketchsvd {

inline constexpr int kMaxHadamardOrder = 26;

/// In-place unnormalized Walsh-Hadamard transform of a length-n vector
/// (n a power of two), Sylvester ordering.
template <typename Scalar>
void fwht_inplace(Scalar* x, Index n) {
  for (Index h = 1; h < n; h <<= 1) {
    for (Index i = 0; i < n; i += 2 * h) {
      for (Index j = i; j < i + h; ++j) {
        const Scalar a = x[j];
        const Scalar b = x[j + h];
        x[j] = a + b;
        x[j + h] = a - b;
      }
    }
  }
}

/// Applies H_d to every column of x.
template <typename Scalar>
void hadamard_columns(Matrix<Scalar>& x, bool normalized = true) {
  const Index n = x.rows();
  if (n < 1 || (n & (n - 1)) != 0)
    throw std::invalid_argument("hadamard: row count must be a power of two");
  for (Index c = 0; c < x.cols(); ++c) fwht_inplace(x.col(c).data(), n);
  if (normalized) x *= Scalar(1) / std::sqrt(static_cast<Scalar>(n));
}

inline void check_hadamard_order(int d) {
  if (d < 0) throw std::invalid_argument("hadamard: order must be non-negative");
  if (d > kMaxHadamardOrder) throw DimensionTooLarge("hadamard: order exceeds 26");
}

/// H_d as a 2^d x 2^d operator.
template <typename Scalar = double>
LinearOperator<Scalar> hadamard_operator(int d, bool normalized = true) {
  check_hadamard_order(d);
  const Index n = Index{1} << d;
  auto transform = [normalized](const Matrix<Scalar>& x) {
    Matrix<Scalar> y = x;
    hadamard_columns(y, normalized);
    return y;
  };
  return LinearOperator<Scalar>(n, n, transform, transform);
}

/// Spectrum of the test family for rank k (k even, default 10).
///
/// Odd j < k: sigma_j = b^{floor(j/2) / (k/2)} with b = 0.001, so the odd
/// values run geometrically from 1 down to the floor value; even j <= k:
/// 1.5 * sigma_{j+1}; sigma_{k+1} = 0.001; beyond that a linear ramp
/// reaching 0 at j = m.
inline Vector<double> build_sigma(int d, int k = 10) {
  check_hadamard_order(d);
  if (k < 2 || k % 2 != 0) throw std::invalid_argument("build_sigma: k must be even and >= 2");
  const Index m = Index{1} << d;
  if (m < k + 2) throw std::invalid_argument("build_sigma: need 2^d >= k + 2");

  constexpr double floor_value = 0.001;
  const double half = k / 2.0;
  Vector<double> sigma(m);
  for (Index j = 1; j <= k; j += 2) sigma(j - 1) = std::pow(floor_value, static_cast<double>(j / 2) / half);
  sigma(k) = floor_value;
  for (Index j = 2; j <= k; j += 2) sigma(j - 1) = 1.5 * sigma(j);
  for (Index j = k + 2; j <= m; ++j)
    sigma(j - 1) = floor_value * static_cast<double>(m - j) / static_cast<double>(m - k - 1);
  return sigma;
}

struct TestMatrixSpec {
  int d = 9;
  Vector<double> sigma;

  Index rows() const noexcept { return Index{1} << d; }
  Index cols() const noexcept { return Index{1} << (d + 1); }
};

inline TestMatrixSpec make_test_matrix_spec(int d, int k = 10) { return {d, build_sigma(d, k)}; }

/// Operator plus ground truth for a spec.
template <typename Scalar = double>
class TestMatrix {
 public:
  explicit TestMatrix(TestMatrixSpec spec)
      : spec_(std::move(spec)), op_(make_operator(spec_)) {}

  const TestMatrixSpec& spec() const noexcept { return spec_; }
  const LinearOperator<Scalar>& op() const noexcept { return op_; }
  Vector<Scalar> sigma() const { return spec_.sigma.template cast<Scalar>(); }

  /// First `count` columns of H_d.
  Matrix<Scalar> left_singular_vectors(Index count) const { return hadamard_head(spec_.rows(), count); }

  /// First `count` columns of H_{d+1}.
  Matrix<Scalar> right_singular_vectors(Index count) const { return hadamard_head(spec_.cols(), count); }

  /// Exact rank-k truncated SVD.
  SvdApprox<Scalar> truth(Index k) const {
    return {left_singular_vectors(k), sigma().head(k), right_singular_vectors(k)};
  }

 private:
  static Matrix<Scalar> hadamard_head(Index n, Index count) {
    Matrix<Scalar> e = Matrix<Scalar>::Identity(n, count);
    hadamard_columns(e);
    return e;
  }

  static LinearOperator<Scalar> make_operator(const TestMatrixSpec& spec) {
    check_hadamard_order(spec.d + 1);
    if (spec.sigma.size() != spec.rows())
      throw std::invalid_argument("test_matrix: sigma must have 2^d entries");
    const Index m = spec.rows();
    const Index n = spec.cols();
    const Vector<Scalar> s = spec.sigma.template cast<Scalar>();
    auto forward = [m, s](const Matrix<Scalar>& x) {
      Matrix<Scalar> wide = x;
      hadamard_columns(wide);
      Matrix<Scalar> y = s.asDiagonal() * wide.topRows(m);
      hadamard_columns(y);
      return y;
    };
    auto backward = [m, n, s](const Matrix<Scalar>& y) {
      Matrix<Scalar> narrow = y;
      hadamard_columns(narrow);
      Matrix<Scalar> x = Matrix<Scalar>::Zero(n, y.cols());
      x.topRows(m) = s.asDiagonal() * narrow;
      hadamard_columns(x);
      return x;
    };
    return LinearOperator<Scalar>(m, n, forward, backward);
  }

  TestMatrixSpec spec_;
  LinearOperator<Scalar> op_;
};

template <typename Scalar = double>
TestMatrix<Scalar> test_matrix(const TestMatrixSpec& spec) {
  return TestMatrix<Scalar>(spec);
}

}  // namespace sketchsvd
