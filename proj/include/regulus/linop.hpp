#pragma once

#include <memory>
#include <vector>

#include "regulus/types.hpp"

namespace regulus {

/// Matrix-free linear map with transpose action.
///
/// Concrete operators are immutable after construction and safe to share
/// across threads. apply/apply_transpose are shape-checked; subclasses
/// implement do_apply / do_apply_transpose.
class LinOp {
 public:
  virtual ~LinOp() = default;

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }

  Vector apply(const Vector& x) const;
  Vector apply_transpose(const Vector& y) const;

  /// Materializes the operator by probing canonical basis vectors.
  /// Refuses shapes with more than kDenseCap total entries.
  virtual Matrix to_dense() const;

  static constexpr Index kDenseCap = Index(1) << 24;

 protected:
  LinOp(Index rows, Index cols);
  virtual Vector do_apply(const Vector& x) const = 0;
  virtual Vector do_apply_transpose(const Vector& y) const = 0;

 private:
  Index rows_, cols_;
};

using LinOpPtr = std::shared_ptr<const LinOp>;

/// Block-diagonal composition of sub-operators, applied blockwise.
class BlockDiagOp : public LinOp {
 public:
  explicit BlockDiagOp(std::vector<LinOpPtr> blocks);
  const std::vector<LinOpPtr>& blocks() const { return blocks_; }

 protected:
  Vector do_apply(const Vector& x) const override;
  Vector do_apply_transpose(const Vector& y) const override;

 private:
  static Index sum_rows(const std::vector<LinOpPtr>& blocks);
  static Index sum_cols(const std::vector<LinOpPtr>& blocks);
  std::vector<LinOpPtr> blocks_;
};

// Combinator factories. Shapes are validated at construction.
LinOpPtr dense_op(Matrix a);
LinOpPtr identity_op(Index n);
LinOpPtr zero_op(Index rows, Index cols);
LinOpPtr diagonal_op(Vector d);
LinOpPtr scaled_op(double scale, LinOpPtr op);
LinOpPtr kron_op(LinOpPtr left, LinOpPtr right);
LinOpPtr block_diag_op(std::vector<LinOpPtr> blocks);
LinOpPtr compose_op(LinOpPtr outer, LinOpPtr inner);  // x -> outer(inner(x))
LinOpPtr vstack_op(std::vector<LinOpPtr> parts);

/// (B kron C) x without forming the Kronecker product,
/// via reshape-multiply-reshape.
Vector kron_apply(const Matrix& b, const LinOp& c, const Vector& x);

/// Concatenation of per-block applications in block order.
Vector block_diag_apply(const BlockDiagOp& op, const Vector& x);

/// Power-iteration estimate of the largest singular value.
/// Returns a lower bound, nondecreasing in iters; 0 for the zero operator.
double operator_norm_estimate(const LinOp& op, int iters);

}  // namespace regulus
