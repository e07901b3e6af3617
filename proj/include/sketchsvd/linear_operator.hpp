#pragma once

#include <sketchsvd/types.hpp>

#include <functional>
#include <memory>

namespace sketchsvd {

/// A rows x cols matrix known only through products with thin dense blocks.
template <typename Scalar>
class LinearOperator {
 public:
  using Block = Matrix<Scalar>;
  using Map = std::function<Block(const Block&)>;

  LinearOperator(Index rows, Index cols, Map apply, Map apply_transpose)
      : rows_(rows), cols_(cols), apply_(std::move(apply)), apply_transpose_(std::move(apply_transpose)) {
    if (rows_ < 1 || cols_ < 1)
      throw std::invalid_argument("LinearOperator: dimensions must be positive");
  }

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }

  /// A * X for a cols x t block.
  Block apply(const Block& x) const {
    if (x.rows() != cols_)
      throw std::invalid_argument("LinearOperator::apply: dimension mismatch");
    return apply_(x);
  }

  /// A^T * Y for a rows x t block.
  Block apply_transpose(const Block& y) const {
    if (y.rows() != rows_)
      throw std::invalid_argument("LinearOperator::apply_transpose: dimension mismatch");
    return apply_transpose_(y);
  }

 private:
  Index rows_;
  Index cols_;
  Map apply_;
  Map apply_transpose_;
};

/// Wraps an explicit matrix. The operator owns a shared immutable copy.
template <typename Derived>
LinearOperator<typename Derived::Scalar> dense_operator(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  auto shared = std::make_shared<const Matrix<Scalar>>(a);
  return LinearOperator<Scalar>(
      shared->rows(), shared->cols(),
      [shared](const Matrix<Scalar>& x) -> Matrix<Scalar> { return *shared * x; },
      [shared](const Matrix<Scalar>& y) -> Matrix<Scalar> { return shared->transpose() * y; });
}

/// Materializes the operator column by column. Test and small-scale use only.
template <typename Scalar>
Matrix<Scalar> to_dense(const LinearOperator<Scalar>& op) {
  return op.apply(Matrix<Scalar>::Identity(op.cols(), op.cols()));
}

}  // namespace sketchsvd
