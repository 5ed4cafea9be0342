#pragma once

#include <doctest.h>

#include <Eigen/Dense>

#include "regulus/linop.hpp"
#include "regulus/rng.hpp"
#include "regulus/types.hpp"

namespace regulus::testing {

inline Matrix randm(Index rows, Index cols, std::uint64_t seed) {
  CounterRng rng(seed);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.next_normal();
  return m;
}

inline Vector randv(Index n, std::uint64_t seed) {
  CounterRng rng(seed);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.next_normal();
  return v;
}

/// Explicit Kronecker product, the oracle for all matrix-free Kron forms.
inline Matrix dense_kron(const Matrix& a, const Matrix& b) {
  Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

/// Adjoint consistency: |<Au, v> - <u, A^T v>| small relative to scales.
inline void check_adjoint(const LinOp& op, std::uint64_t seed = 7,
                          int trials = 3) {
  double norm_est = operator_norm_estimate(op, 30);
  for (int t = 0; t < trials; ++t) {
    Vector u = randv(op.cols(), seed + 2 * t);
    Vector v = randv(op.rows(), seed + 2 * t + 1);
    double lhs = op.apply(u).dot(v);
    double rhs = u.dot(op.apply_transpose(v));
    double scale = std::max(1e-30, u.norm() * v.norm() * norm_est);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * scale);
  }
}

/// Linearity on random inputs.
inline void check_linear(const LinOp& op, std::uint64_t seed = 11) {
  Vector u = randv(op.cols(), seed), v = randv(op.cols(), seed + 1);
  double alpha = 0.7, beta = -1.3;
  Vector lhs = op.apply(alpha * u + beta * v);
  Vector au = op.apply(u), av = op.apply(v);
  double bound =
      1e-12 * (std::abs(alpha) * au.norm() + std::abs(beta) * av.norm());
  CHECK((lhs - alpha * au - beta * av).norm() <= std::max(bound, 1e-300));
}

/// Dense Golub-Kahan bidiagonalization oracle with starting vector b;
/// mirrors the recurrence in exact arithmetic but through dense products.
struct BidiagOracle {
  Matrix U, V, B;
  BidiagOracle(const Matrix& a, const Vector& b, int steps) {
    Index m = a.rows(), n = a.cols();
    U = Matrix(m, steps + 1);
    V = Matrix(n, steps + 1);
    B = Matrix::Zero(steps + 1, steps + 1);
    U.col(0) = b / b.norm();
    Vector w = a.transpose() * U.col(0);
    B(0, 0) = w.norm();
    V.col(0) = w / B(0, 0);
    for (int j = 0; j < steps; ++j) {
      Vector wu = a * V.col(j) - B(j, j) * U.col(j);
      B(j + 1, j) = wu.norm();
      U.col(j + 1) = wu / B(j + 1, j);
      Vector wv = a.transpose() * U.col(j + 1) - B(j + 1, j) * V.col(j);
      B(j + 1, j + 1) = wv.norm();
      V.col(j + 1) = wv / B(j + 1, j + 1);
    }
  }
};

}  // namespace regulus::testing
