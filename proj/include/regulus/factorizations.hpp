#pragma once

#include "regulus/linop.hpp"
#include "regulus/types.hpp"

namespace regulus {

/// Thin SVD, singular values descending.
struct Svd {
  Matrix U;      // m x r
  Vector sigma;  // r = min(m, n), descending
  Matrix V;      // n x r
};

Svd svd(const Matrix& a);

/// Generalized SVD of (A, Psi) with m >= n >= k, rank(Psi) = k and
/// null(A), null(Psi) intersecting trivially:
///   A = U * diag(sigma) * Y^T,  Psi = V * [diag(lambda) 0] * Y^T,
/// sigma ascending in [0,1] (n values), lambda descending in [0,1]
/// (k values), sigma_i^2 + lambda_i^2 = 1 for i < k.
/// The generalized singular values are sigma_i / lambda_i.
struct Gsvd {
  Matrix U;       // m x n, orthonormal columns
  Matrix V;       // k x k, orthogonal
  Matrix Y;       // n x n, nonsingular
  Matrix Y_dual;  // Y^{-T}; its columns expand filtered solutions
  Vector sigma;   // n, ascending
  Vector lambda;  // k, descending
};

Gsvd gsvd(const Matrix& a, const Matrix& psi);

/// Skinny QR: M (rows >= cols) = Q R with Q orthonormal columns and R
/// upper triangular. Rank deficiency is permitted; R may carry near-zero
/// diagonal entries.
struct QrPair {
  Matrix Q;  // rows x cols
  Matrix R;  // cols x cols, upper triangular
};

QrPair qr_skinny(const Matrix& m);

/// Updates Q, R in place so that [old Q*R, m_new] = Q' R'.
void qr_append_column(QrPair& qr, const Vector& m_new);

enum class StepResult { advanced, breakdown };

/// Partial Arnoldi decomposition A V_d = V_{d+1} H_d built with one pass
/// of modified Gram-Schmidt.
struct ArnoldiState {
  Matrix V;  // n x (d+1), orthonormal columns
  Matrix H;  // (d+1) x d, upper Hessenberg
  int d = 0;
  bool broken = false;
  double norm_est = 0;  // power-iteration estimate of ||A||

  static ArnoldiState init(const LinOp& a, const Vector& b);
};

/// Advances the decomposition by one step. On happy breakdown the new
/// subdiagonal entry is zero, the basis is padded with an orthonormal
/// filler column and the state is marked broken.
StepResult arnoldi_step(const LinOp& a, ArnoldiState& state);

/// Partial Golub-Kahan bidiagonalization, no reorthogonalization:
///   A V_d = U_{d+1} B_d,   A^T U_{d+1} = V_{d+1} Bbar_{d+1}^T,
/// with u_1 = b/||b||, v_1 = A^T b/||A^T b|| and Bbar lower bidiagonal.
struct GolubKahanState {
  Matrix U;     // m x (d+1)
  Matrix V;     // n x (d+1)
  Matrix Bbar;  // (d+1) x (d+1), lower bidiagonal
  int d = 0;
  bool broken = false;
  double norm_est = 0;

  static GolubKahanState init(const LinOp& a, const Vector& b);

  /// B_d, the leading (d+1) x d block used by the projected problems.
  Matrix projected() const { return Bbar.topLeftCorner(d + 1, d); }
};

StepResult golub_kahan_step(const LinOp& a, GolubKahanState& state);

}  // namespace regulus
