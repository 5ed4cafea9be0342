#include "regulus/linop.hpp"

#include <cmath>
#include <numeric>

namespace regulus {

LinOp::LinOp(Index rows, Index cols) : rows_(rows), cols_(cols) {
  check_shape(rows >= 0 && cols >= 0, "operator shape must be nonnegative");
}

Vector LinOp::apply(const Vector& x) const {
  check_shape(x.size() == cols_, "apply: expected length " +
                                     std::to_string(cols_) + ", got " +
                                     std::to_string(x.size()));
  return do_apply(x);
}

Vector LinOp::apply_transpose(const Vector& y) const {
  check_shape(y.size() == rows_, "apply_transpose: expected length " +
                                     std::to_string(rows_) + ", got " +
                                     std::to_string(y.size()));
  return do_apply_transpose(y);
}

Matrix LinOp::to_dense() const {
  check_shape(rows_ * cols_ <= kDenseCap,
              "to_dense: operator too large to materialize");
  Matrix out(rows_, cols_);
  Vector e = Vector::Zero(cols_);
  for (Index j = 0; j < cols_; ++j) {
    e[j] = 1.0;
    out.col(j) = do_apply(e);
    e[j] = 0.0;
  }
  return out;
}

namespace {

class DenseOp final : public LinOp {
 public:
  explicit DenseOp(Matrix a) : LinOp(a.rows(), a.cols()), a_(std::move(a)) {
    require_finite(a_, "dense operator");
  }
  Matrix to_dense() const override { return a_; }

 protected:
  Vector do_apply(const Vector& x) const override { return a_ * x; }
  Vector do_apply_transpose(const Vector& y) const override {
    return a_.transpose() * y;
  }

 private:
  Matrix a_;
};

class IdentityOp final : public LinOp {
 public:
  explicit IdentityOp(Index n) : LinOp(n, n) {}

 protected:
  Vector do_apply(const Vector& x) const override { return x; }
  Vector do_apply_transpose(const Vector& y) const override { return y; }
};

class ZeroOp final : public LinOp {
 public:
  ZeroOp(Index rows, Index cols) : LinOp(rows, cols) {}

 protected:
  Vector do_apply(const Vector&) const override {
    return Vector::Zero(rows());
  }
  Vector do_apply_transpose(const Vector&) const override {
    return Vector::Zero(cols());
  }
};

class DiagOp final : public LinOp {
 public:
  explicit DiagOp(Vector d) : LinOp(d.size(), d.size()), d_(std::move(d)) {
    require_finite(d_, "diagonal");
  }

 protected:
  Vector do_apply(const Vector& x) const override {
    return d_.cwiseProduct(x);
  }
  Vector do_apply_transpose(const Vector& y) const override {
    return d_.cwiseProduct(y);
  }

 private:
  Vector d_;
};

class ScaledOp final : public LinOp {
 public:
  ScaledOp(double s, LinOpPtr op)
      : LinOp(op->rows(), op->cols()), s_(s), op_(std::move(op)) {}

 protected:
  Vector do_apply(const Vector& x) const override {
    return s_ * op_->apply(x);
  }
  Vector do_apply_transpose(const Vector& y) const override {
    return s_ * op_->apply_transpose(y);
  }

 private:
  double s_;
  LinOpPtr op_;
};

// (L kron R) x = vec(R X L^T) with X = reshape(x, cols(R) x cols(L)).
class KronOp final : public LinOp {
 public:
  KronOp(LinOpPtr left, LinOpPtr right)
      : LinOp(left->rows() * right->rows(), left->cols() * right->cols()),
        left_(std::move(left)),
        right_(std::move(right)) {}

 protected:
  Vector do_apply(const Vector& x) const override {
    const Index cl = left_->cols(), cr = right_->cols();
    const Index rl = left_->rows(), rr = right_->rows();
    Eigen::Map<const Matrix> xm(x.data(), cr, cl);
    Matrix mid(rr, cl);
    for (Index j = 0; j < cl; ++j) mid.col(j) = right_->apply(xm.col(j));
    Matrix out(rr, rl);
    for (Index i = 0; i < rr; ++i) {
      Vector row = mid.row(i).transpose();
      out.row(i) = left_->apply(row).transpose();
    }
    return Eigen::Map<const Vector>(out.data(), rr * rl);
  }

  Vector do_apply_transpose(const Vector& y) const override {
    const Index rl = left_->rows(), rr = right_->rows();
    const Index cl = left_->cols(), cr = right_->cols();
    Eigen::Map<const Matrix> ym(y.data(), rr, rl);
    Matrix mid(cr, rl);
    for (Index j = 0; j < rl; ++j)
      mid.col(j) = right_->apply_transpose(ym.col(j));
    Matrix out(cr, cl);
    for (Index i = 0; i < cr; ++i) {
      Vector row = mid.row(i).transpose();
      out.row(i) = left_->apply_transpose(row).transpose();
    }
    return Eigen::Map<const Vector>(out.data(), cr * cl);
  }

 private:
  LinOpPtr left_, right_;
};

class ComposeOp final : public LinOp {
 public:
  ComposeOp(LinOpPtr outer, LinOpPtr inner)
      : LinOp(outer->rows(), inner->cols()),
        outer_(std::move(outer)),
        inner_(std::move(inner)) {
    check_shape(outer_->cols() == inner_->rows(),
                "compose: inner rows must match outer cols");
  }

 protected:
  Vector do_apply(const Vector& x) const override {
    return outer_->apply(inner_->apply(x));
  }
  Vector do_apply_transpose(const Vector& y) const override {
    return inner_->apply_transpose(outer_->apply_transpose(y));
  }

 private:
  LinOpPtr outer_, inner_;
};

class VStackOp final : public LinOp {
 public:
  explicit VStackOp(std::vector<LinOpPtr> parts)
      : LinOp(sum_rows(parts), parts.empty() ? 0 : parts.front()->cols()),
        parts_(std::move(parts)) {
    for (const auto& p : parts_)
      check_shape(p->cols() == cols(), "vstack: all parts must share cols");
  }

 protected:
  Vector do_apply(const Vector& x) const override {
    Vector out(rows());
    Index at = 0;
    for (const auto& p : parts_) {
      out.segment(at, p->rows()) = p->apply(x);
      at += p->rows();
    }
    return out;
  }
  Vector do_apply_transpose(const Vector& y) const override {
    Vector out = Vector::Zero(cols());
    Index at = 0;
    for (const auto& p : parts_) {
      out += p->apply_transpose(y.segment(at, p->rows()));
      at += p->rows();
    }
    return out;
  }

 private:
  static Index sum_rows(const std::vector<LinOpPtr>& parts) {
    Index r = 0;
    for (const auto& p : parts) r += p->rows();
    return r;
  }
  std::vector<LinOpPtr> parts_;
};

}  // namespace

BlockDiagOp::BlockDiagOp(std::vector<LinOpPtr> blocks)
    : LinOp(sum_rows(blocks), sum_cols(blocks)), blocks_(std::move(blocks)) {
  check_shape(!blocks_.empty(), "block_diag: at least one block required");
}

Index BlockDiagOp::sum_rows(const std::vector<LinOpPtr>& blocks) {
  Index r = 0;
  for (const auto& b : blocks) r += b->rows();
  return r;
}

Index BlockDiagOp::sum_cols(const std::vector<LinOpPtr>& blocks) {
  Index c = 0;
  for (const auto& b : blocks) c += b->cols();
  return c;
}

Vector BlockDiagOp::do_apply(const Vector& x) const {
  Vector out(rows());
  Index rat = 0, cat = 0;
  for (const auto& b : blocks_) {
    out.segment(rat, b->rows()) = b->apply(x.segment(cat, b->cols()));
    rat += b->rows();
    cat += b->cols();
  }
  return out;
}

Vector BlockDiagOp::do_apply_transpose(const Vector& y) const {
  Vector out(cols());
  Index rat = 0, cat = 0;
  for (const auto& b : blocks_) {
    out.segment(cat, b->cols()) = b->apply_transpose(y.segment(rat, b->rows()));
    rat += b->rows();
    cat += b->cols();
  }
  return out;
}

LinOpPtr dense_op(Matrix a) { return std::make_shared<DenseOp>(std::move(a)); }

LinOpPtr identity_op(Index n) { return std::make_shared<IdentityOp>(n); }

LinOpPtr zero_op(Index rows, Index cols) {
  return std::make_shared<ZeroOp>(rows, cols);
}

LinOpPtr diagonal_op(Vector d) { return std::make_shared<DiagOp>(std::move(d)); }

LinOpPtr scaled_op(double scale, LinOpPtr op) {
  return std::make_shared<ScaledOp>(scale, std::move(op));
}

LinOpPtr kron_op(LinOpPtr left, LinOpPtr right) {
  return std::make_shared<KronOp>(std::move(left), std::move(right));
}

LinOpPtr block_diag_op(std::vector<LinOpPtr> blocks) {
  return std::make_shared<BlockDiagOp>(std::move(blocks));
}

LinOpPtr compose_op(LinOpPtr outer, LinOpPtr inner) {
  return std::make_shared<ComposeOp>(std::move(outer), std::move(inner));
}

LinOpPtr vstack_op(std::vector<LinOpPtr> parts) {
  return std::make_shared<VStackOp>(std::move(parts));
}

Vector kron_apply(const Matrix& b, const LinOp& c, const Vector& x) {
  check_shape(x.size() == b.cols() * c.cols(),
              "kron_apply: x length must equal cols(B)*cols(C)");
  Eigen::Map<const Matrix> xm(x.data(), c.cols(), b.cols());
  Matrix mid(c.rows(), b.cols());
  for (Index j = 0; j < b.cols(); ++j) mid.col(j) = c.apply(xm.col(j));
  Matrix out = mid * b.transpose();
  return Eigen::Map<const Vector>(out.data(), out.size());
}

Vector block_diag_apply(const BlockDiagOp& op, const Vector& x) {
  return op.apply(x);
}

double operator_norm_estimate(const LinOp& op, int iters) {
  check_param(iters >= 1, "operator_norm_estimate: iters must be >= 1");
  if (op.rows() == 0 || op.cols() == 0) return 0.0;
  // Deterministic pseudo-random start so the estimate is reproducible and
  // generically not orthogonal to the top singular vector.
  Vector v(op.cols());
  std::uint64_t s = 0x9E3779B97F4A7C15ull;
  for (Index i = 0; i < v.size(); ++i) {
    s += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z = z ^ (z >> 31);
    v[i] = static_cast<double>(z >> 11) * 0x1.0p-53 - 0.5;
  }
  double nv = v.norm();
  if (nv == 0.0) return 0.0;
  v /= nv;
  double est = 0.0;
  for (int k = 0; k < iters; ++k) {
    Vector av = op.apply(v);
    est = av.norm();  // = sqrt(v^T A^T A v), a lower bound on sigma_1
    if (est == 0.0) return 0.0;
    Vector w = op.apply_transpose(av);
    double nw = w.norm();
    if (nw == 0.0) break;
    v = w / nw;
  }
  return est;
}

}  // namespace regulus
