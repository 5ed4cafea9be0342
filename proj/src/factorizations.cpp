#include "regulus/factorizations.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace regulus {

namespace {
constexpr double kBreakdownRel = 1e-14;
}

Svd svd(const Matrix& a) {
  require_finite(a, "svd input");
  check_shape(a.rows() >= 1 && a.cols() >= 1, "svd: empty matrix");
  Eigen::JacobiSVD<Matrix> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return Svd{dec.matrixU(), dec.singularValues(), dec.matrixV()};
}

Gsvd gsvd(const Matrix& a, const Matrix& psi) {
  require_finite(a, "gsvd A");
  require_finite(psi, "gsvd Psi");
  const Index m = a.rows(), n = a.cols(), k = psi.rows();
  check_shape(psi.cols() == n, "gsvd: A and Psi must share columns");
  if (!(m >= n && n >= k))
    throw PreconditionError("gsvd: requires m >= n >= k, got m=" +
                            std::to_string(m) + " n=" + std::to_string(n) +
                            " k=" + std::to_string(k));

  // Stack [A; Psi] and take its skinny QR. R is nonsingular exactly when
  // the null spaces intersect trivially.
  Matrix stacked(m + k, n);
  stacked.topRows(m) = a;
  stacked.bottomRows(k) = psi;
  {
    Eigen::JacobiSVD<Matrix> chk(stacked);
    const Vector& s = chk.singularValues();
    if (s[s.size() - 1] <= 1e-12 * s[0])
      throw PreconditionError(
          "gsvd: null spaces of A and Psi intersect (smallest singular value "
          "of [A;Psi] is " +
          std::to_string(s[s.size() - 1]) + ")");
  }
  Eigen::HouseholderQR<Matrix> qr(stacked);
  Matrix q = qr.householderQ() * Matrix::Identity(m + k, n);
  Matrix r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();

  Matrix q1 = q.topRows(m);     // m x n
  Matrix q2 = q.bottomRows(k);  // k x n

  // CS-style split: SVD of the Psi block gives V, Z and the lambda values
  // (descending); the sigma values are the column norms of Q1 Z.
  Eigen::JacobiSVD<Matrix> vz(q2, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix v = vz.matrixU();  // k x k
  Matrix z = vz.matrixV();  // n x n
  Vector lambda = vz.singularValues().cwiseMin(1.0);  // k values

  Matrix q1z = q1 * z;  // m x n, orthogonal columns with norms sigma_i
  Vector sigma(n);
  Matrix u(m, n);
  {
    // rank(Psi) must be k for the factorization layout to make sense
    if (k > 0 && lambda[k - 1] <= 1e-12)
      throw PreconditionError("gsvd: Psi is rank deficient");
    for (Index i = 0; i < n; ++i) {
      double c = q1z.col(i).norm();
      sigma[i] = std::min(c, 1.0);
      if (c > 1e-14) {
        u.col(i) = q1z.col(i) / c;
      } else {
        // Degenerate direction (generalized singular value 0): pad with a
        // vector orthogonal to the columns built so far.
        Vector cand = Vector::Zero(m);
        for (Index t = 0; t < m; ++t) {
          cand.setZero();
          cand[t] = 1.0;
          for (Index j = 0; j < i; ++j) cand -= u.col(j).dot(cand) * u.col(j);
          if (cand.norm() > 0.5) break;
        }
        u.col(i) = cand / cand.norm();
      }
    }
  }

  Matrix y = r.transpose() * z;  // Y^T = Z^T R
  // Y^{-T} = R^{-1} Z via a triangular solve.
  Matrix y_dual =
      r.triangularView<Eigen::Upper>().solve(Matrix::Identity(n, n)) * z;

  return Gsvd{std::move(u), std::move(v),      std::move(y),
              std::move(y_dual), std::move(sigma), std::move(lambda)};
}

QrPair qr_skinny(const Matrix& m) {
  check_shape(m.rows() >= m.cols(), "qr_skinny: requires rows >= cols");
  Eigen::HouseholderQR<Matrix> qr(m);
  QrPair out;
  out.Q = qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
  out.R = qr.matrixQR().topRows(m.cols()).triangularView<Eigen::Upper>();
  return out;
}

void qr_append_column(QrPair& qr, const Vector& m_new) {
  check_shape(m_new.size() == qr.Q.rows() || qr.Q.size() == 0,
              "qr_append_column: column length must match Q rows");
  const Index d = qr.Q.size() == 0 ? 0 : qr.Q.cols();
  Vector w = m_new;
  Vector coeffs = Vector::Zero(d);
  // Two passes of modified Gram-Schmidt keep Q orthonormal under repeated
  // updates.
  for (int pass = 0; pass < 2; ++pass) {
    for (Index j = 0; j < d; ++j) {
      double c = qr.Q.col(j).dot(w);
      coeffs[j] += c;
      w -= c * qr.Q.col(j);
    }
  }
  double nrm = w.norm();
  Matrix q_next(m_new.size(), d + 1);
  Matrix r_next = Matrix::Zero(d + 1, d + 1);
  if (d > 0) {
    q_next.leftCols(d) = qr.Q;
    r_next.topLeftCorner(d, d) = qr.R;
    r_next.col(d).head(d) = coeffs;
  }
  if (nrm > 0) {
    q_next.col(d) = w / nrm;
  } else {
    // Dependent column: keep a valid orthonormal basis by padding.
    Vector cand = Vector::Zero(m_new.size());
    for (Index t = 0; t < m_new.size(); ++t) {
      cand.setZero();
      cand[t] = 1.0;
      for (Index j = 0; j < d; ++j)
        cand -= q_next.col(j).dot(cand) * q_next.col(j);
      if (cand.norm() > 0.5) break;
    }
    q_next.col(d) = cand / cand.norm();
  }
  r_next(d, d) = nrm;
  qr.Q = std::move(q_next);
  qr.R = std::move(r_next);
}

ArnoldiState ArnoldiState::init(const LinOp& a, const Vector& b) {
  check_shape(a.rows() == a.cols(), "arnoldi: operator must be square");
  check_shape(b.size() == a.cols(), "arnoldi: b length mismatch");
  double nb = b.norm();
  check_param(nb > 0, "arnoldi: b must be nonzero");
  ArnoldiState s;
  s.V = b / nb;
  s.H = Matrix(1, 0);
  s.d = 0;
  s.norm_est = operator_norm_estimate(a, 20);
  return s;
}

namespace {

// Returns a unit vector orthogonal to the columns of basis.
Vector orthogonal_filler(const Matrix& basis) {
  Vector cand = Vector::Zero(basis.rows());
  for (Index t = 0; t < basis.rows(); ++t) {
    cand.setZero();
    cand[t] = 1.0;
    for (int pass = 0; pass < 2; ++pass)
      for (Index j = 0; j < basis.cols(); ++j)
        cand -= basis.col(j).dot(cand) * basis.col(j);
    if (cand.norm() > 0.5) break;
  }
  return cand / cand.norm();
}

}  // namespace

StepResult arnoldi_step(const LinOp& a, ArnoldiState& state) {
  check_param(!state.broken, "arnoldi_step: state already broke down");
  const Index n = state.V.rows();
  const int d = state.d;
  Vector w = a.apply(state.V.col(d));
  Vector h = Vector::Zero(d + 2);
  // one pass of modified Gram-Schmidt
  for (int j = 0; j <= d; ++j) {
    h[j] = state.V.col(j).dot(w);
    w -= h[j] * state.V.col(j);
  }
  double nrm = w.norm();
  const double tol = kBreakdownRel * std::max(state.norm_est, 1e-300);

  Matrix h_next = Matrix::Zero(d + 2, d + 1);
  h_next.topLeftCorner(d + 1, d) = state.H;
  Matrix v_next(n, d + 2);
  v_next.leftCols(d + 1) = state.V;

  if (nrm <= tol) {
    h[d + 1] = 0.0;
    h_next.col(d) = h;
    v_next.col(d + 1) = orthogonal_filler(state.V);
    state.V = std::move(v_next);
    state.H = std::move(h_next);
    state.d = d + 1;
    state.broken = true;
    return StepResult::breakdown;
  }
  h[d + 1] = nrm;
  h_next.col(d) = h;
  v_next.col(d + 1) = w / nrm;
  state.V = std::move(v_next);
  state.H = std::move(h_next);
  state.d = d + 1;
  return StepResult::advanced;
}

GolubKahanState GolubKahanState::init(const LinOp& a, const Vector& b) {
  check_shape(b.size() == a.rows(), "golub_kahan: b length mismatch");
  double nb = b.norm();
  check_param(nb > 0, "golub_kahan: b must be nonzero");
  GolubKahanState s;
  s.U = b / nb;
  Vector w = a.apply_transpose(s.U.col(0));
  double alpha = w.norm();
  check_param(alpha > 0, "golub_kahan: A^T b must be nonzero");
  s.V = w / alpha;
  s.Bbar = Matrix::Constant(1, 1, alpha);
  s.d = 0;
  s.norm_est = operator_norm_estimate(a, 20);
  return s;
}

StepResult golub_kahan_step(const LinOp& a, GolubKahanState& state) {
  check_param(!state.broken, "golub_kahan_step: state already broke down");
  const int j = state.d;  // extending from dimension j to j+1
  const double tol = kBreakdownRel * std::max(state.norm_est, 1e-300);
  const double alpha_j = state.Bbar(j, j);

  Matrix u_next(state.U.rows(), j + 2);
  u_next.leftCols(j + 1) = state.U;
  Matrix v_next(state.V.rows(), j + 2);
  v_next.leftCols(j + 1) = state.V;
  Matrix b_next = Matrix::Zero(j + 2, j + 2);
  b_next.topLeftCorner(j + 1, j + 1) = state.Bbar;

  Vector w = a.apply(state.V.col(j)) - alpha_j * state.U.col(j);
  double beta = w.norm();
  if (beta <= tol) {
    u_next.col(j + 1) = orthogonal_filler(state.U);
    v_next.col(j + 1) = orthogonal_filler(state.V);
    state.U = std::move(u_next);
    state.V = std::move(v_next);
    state.Bbar = std::move(b_next);
    state.d = j + 1;
    state.broken = true;
    return StepResult::breakdown;
  }
  u_next.col(j + 1) = w / beta;
  b_next(j + 1, j) = beta;

  Vector w2 = a.apply_transpose(u_next.col(j + 1)) - beta * state.V.col(j);
  double alpha = w2.norm();
  if (alpha <= tol) {
    v_next.col(j + 1) = orthogonal_filler(state.V);
    state.U = std::move(u_next);
    state.V = std::move(v_next);
    state.Bbar = std::move(b_next);
    state.d = j + 1;
    state.broken = true;
    return StepResult::breakdown;
  }
  v_next.col(j + 1) = w2 / alpha;
  b_next(j + 1, j + 1) = alpha;

  state.U = std::move(u_next);
  state.V = std::move(v_next);
  state.Bbar = std::move(b_next);
  state.d = j + 1;
  return StepResult::advanced;
}

}  // namespace regulus
