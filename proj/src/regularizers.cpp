#include "regulus/regularizers.hpp"

#include <array>
#include <cmath>

namespace regulus {

namespace {

class Diff1D final : public LinOp {
 public:
  Diff1D(Index n, bool square)
      : LinOp(square ? n : n - 1, n), square_(square) {
    check_param(n >= 2, "first derivative operator needs n >= 2");
  }

 protected:
  Vector do_apply(const Vector& x) const override {
    Vector y = Vector::Zero(rows());
    for (Index i = 0; i + 1 < cols(); ++i) y[i] = x[i] - x[i + 1];
    return y;
  }
  Vector do_apply_transpose(const Vector& y) const override {
    Vector x = Vector::Zero(cols());
    for (Index i = 0; i + 1 < cols(); ++i) {
      x[i] += y[i];
      x[i + 1] -= y[i];
    }
    return x;
  }

 private:
  bool square_;
};

// Three-tap filter bank of the linear B-spline framelet. Boundary samples
// are extended reflexively (x[-1] = x[0], x[n] = x[n-1]), which keeps the
// stacked analysis operator a Parseval frame.
constexpr std::array<std::array<double, 3>, 3> kMasks = {{
    {0.25, 0.5, 0.25},
    {M_SQRT2 / 4.0, 0.0, -M_SQRT2 / 4.0},
    {-0.25, 0.5, -0.25},
}};

void filter_apply(int mask, const Vector& x, Vector* y) {
  const auto& m = kMasks[static_cast<size_t>(mask)];
  const Index n = x.size();
  y->resize(n);
  for (Index i = 0; i < n; ++i) {
    double left = x[i > 0 ? i - 1 : 0];
    double right = x[i + 1 < n ? i + 1 : n - 1];
    (*y)[i] = m[0] * left + m[1] * x[i] + m[2] * right;
  }
}

void filter_apply_transpose(int mask, const Vector& y, Vector* x) {
  const auto& m = kMasks[static_cast<size_t>(mask)];
  const Index n = y.size();
  x->setZero(n);
  for (Index i = 0; i < n; ++i) {
    Index left = i > 0 ? i - 1 : 0;
    Index right = i + 1 < n ? i + 1 : n - 1;
    (*x)[left] += m[0] * y[i];
    (*x)[i] += m[1] * y[i];
    (*x)[right] += m[2] * y[i];
  }
}

class Framelet1D final : public LinOp {
 public:
  Framelet1D(Index n, int levels)
      : LinOp(levels == 1 ? 3 * n : 5 * n, n), levels_(levels) {
    check_param(levels == 1 || levels == 2,
                "framelet: only levels 1 and 2 are provided");
    check_param(n >= 4, "framelet: n must be >= 4");
  }

 protected:
  // level-1 channels W1 x, W2 x, then the full bank on the low-pass W0 x
  Vector do_apply(const Vector& x) const override {
    const Index n = cols();
    Vector out(rows());
    Vector tmp;
    if (levels_ == 1) {
      for (int c = 0; c < 3; ++c) {
        filter_apply(c, x, &tmp);
        out.segment(c * n, n) = tmp;
      }
      return out;
    }
    filter_apply(1, x, &tmp);
    out.segment(0, n) = tmp;
    filter_apply(2, x, &tmp);
    out.segment(n, n) = tmp;
    Vector low;
    filter_apply(0, x, &low);
    for (int c = 0; c < 3; ++c) {
      filter_apply(c, low, &tmp);
      out.segment((2 + c) * n, n) = tmp;
    }
    return out;
  }

  Vector do_apply_transpose(const Vector& y) const override {
    const Index n = cols();
    Vector x = Vector::Zero(n);
    Vector tmp;
    if (levels_ == 1) {
      for (int c = 0; c < 3; ++c) {
        filter_apply_transpose(c, y.segment(c * n, n), &tmp);
        x += tmp;
      }
      return x;
    }
    filter_apply_transpose(1, y.segment(0, n), &tmp);
    x += tmp;
    filter_apply_transpose(2, y.segment(n, n), &tmp);
    x += tmp;
    Vector low = Vector::Zero(n);
    for (int c = 0; c < 3; ++c) {
      filter_apply_transpose(c, y.segment((2 + c) * n, n), &tmp);
      low += tmp;
    }
    filter_apply_transpose(0, low, &tmp);
    x += tmp;
    return x;
  }

 private:
  int levels_;
};

// Separable 2D bank: channel (a, b) maps X to W_b X W_a^T on the
// column-stacked image, enumerated (0,0), (0,1), ..., (2,2).
class Framelet2D final : public LinOp {
 public:
  Framelet2D(Index nx, Index ny, int levels)
      : LinOp((levels == 1 ? 9 : 17) * nx * ny, nx * ny),
        nx_(nx),
        ny_(ny),
        levels_(levels) {
    check_param(levels == 1 || levels == 2,
                "framelet: only levels 1 and 2 are provided");
    check_param(nx >= 4 && ny >= 4, "framelet: nx, ny must be >= 4");
  }

 protected:
  Vector do_apply(const Vector& x) const override {
    const Index n = nx_ * ny_;
    Vector out(rows());
    Matrix im = Eigen::Map<const Matrix>(x.data(), nx_, ny_);
    if (levels_ == 1) {
      Index at = 0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          Matrix c = channel(im, a, b);
          out.segment(at, n) = Eigen::Map<const Vector>(c.data(), n);
          at += n;
        }
      return out;
    }
    Index at = 0;
    Matrix low;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        Matrix c = channel(im, a, b);
        if (a == 0 && b == 0) {
          low = c;  // expanded below instead of stored
          continue;
        }
        out.segment(at, n) = Eigen::Map<const Vector>(c.data(), n);
        at += n;
      }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        Matrix c = channel(low, a, b);
        out.segment(at, n) = Eigen::Map<const Vector>(c.data(), n);
        at += n;
      }
    return out;
  }

  Vector do_apply_transpose(const Vector& y) const override {
    const Index n = nx_ * ny_;
    Matrix acc = Matrix::Zero(nx_, ny_);
    if (levels_ == 1) {
      Index at = 0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          Matrix c = Eigen::Map<const Matrix>(y.segment(at, n).data(), nx_,
                                              ny_);
          acc += channel_transpose(c, a, b);
          at += n;
        }
      return Eigen::Map<const Vector>(acc.data(), n);
    }
    Index at = 0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        if (a == 0 && b == 0) continue;
        Matrix c =
            Eigen::Map<const Matrix>(y.segment(at, n).data(), nx_, ny_);
        acc += channel_transpose(c, a, b);
        at += n;
      }
    Matrix low_acc = Matrix::Zero(nx_, ny_);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        Matrix c =
            Eigen::Map<const Matrix>(y.segment(at, n).data(), nx_, ny_);
        low_acc += channel_transpose(c, a, b);
        at += n;
      }
    acc += channel_transpose(low_acc, 0, 0);
    return Eigen::Map<const Vector>(acc.data(), n);
  }

 private:
  Matrix channel(const Matrix& im, int a, int b) const {
    // filter b along columns (dimension nx), filter a along rows (ny)
    Matrix mid(nx_, ny_);
    Vector tmp;
    for (Index j = 0; j < ny_; ++j) {
      filter_apply(b, im.col(j), &tmp);
      mid.col(j) = tmp;
    }
    Matrix out(nx_, ny_);
    for (Index i = 0; i < nx_; ++i) {
      Vector row = mid.row(i).transpose();
      filter_apply(a, row, &tmp);
      out.row(i) = tmp.transpose();
    }
    return out;
  }

  Matrix channel_transpose(const Matrix& c, int a, int b) const {
    Matrix mid(nx_, ny_);
    Vector tmp;
    for (Index i = 0; i < nx_; ++i) {
      Vector row = c.row(i).transpose();
      filter_apply_transpose(a, row, &tmp);
      mid.row(i) = tmp.transpose();
    }
    Matrix out(nx_, ny_);
    for (Index j = 0; j < ny_; ++j) {
      filter_apply_transpose(b, mid.col(j), &tmp);
      out.col(j) = tmp;
    }
    return out;
  }

  Index nx_, ny_;
  int levels_;
};

}  // namespace

LinOpPtr gen_first_derivative_operator(Index n) {
  return std::make_shared<Diff1D>(n, /*square=*/false);
}

LinOpPtr square_first_derivative_operator(Index n) {
  return std::make_shared<Diff1D>(n, /*square=*/true);
}

LinOpPtr gen_first_derivative_operator_2d(Index nx, Index ny) {
  check_param(nx >= 2 && ny >= 2, "2d derivative operator needs nx, ny >= 2");
  LinOpPtr vertical = kron_op(identity_op(ny), gen_first_derivative_operator(nx));
  LinOpPtr horizontal =
      kron_op(gen_first_derivative_operator(ny), identity_op(nx));
  return vstack_op({vertical, horizontal});
}

LinOpPtr gen_spacetime_derivative_operator(Index nx, Index ny, Index nt) {
  check_param(nt >= 1, "spacetime operator needs nt >= 1");
  LinOpPtr spatial = gen_first_derivative_operator_2d(nx, ny);
  if (nt == 1) return spatial;
  LinOpPtr space_block = kron_op(identity_op(nt), spatial);
  LinOpPtr time_block =
      kron_op(gen_first_derivative_operator(nt), identity_op(nx * ny));
  return vstack_op({space_block, time_block});
}

LinOpPtr create_framelet_operator_1d(Index n, int levels) {
  return std::make_shared<Framelet1D>(n, levels);
}

LinOpPtr create_framelet_operator(Index nx, Index ny, int levels) {
  return std::make_shared<Framelet2D>(nx, ny, levels);
}

}  // namespace regulus
