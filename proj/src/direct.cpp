#include "regulus/direct.hpp"

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <limits>

namespace regulus {

namespace {

constexpr double kRankTolRel = 1e-14;

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

IterRecord make_record(int it, double res, std::optional<double> param,
                       const std::optional<Vector>& x_true, const Vector& x,
                       std::chrono::steady_clock::time_point t0) {
  IterRecord r;
  r.iteration = it;
  r.residual_norm = res;
  r.regparam = param;
  if (x_true && x_true->norm() > 0)
    r.relative_error = (x - *x_true).norm() / x_true->norm();
  r.wall_ms = elapsed_ms(t0);
  return r;
}

}  // namespace

Vector filter_factors(const FilterSpec& spec, const Vector& svals) {
  for (Index i = 0; i < svals.size(); ++i)
    check_param(svals[i] >= 0, "filter_factors: negative singular value");
  Vector phi = Vector::Zero(svals.size());
  switch (spec.kind) {
    case FilterSpec::Kind::tsvd: {
      check_param(spec.h >= 0 && spec.h <= svals.size(),
                  "filter_factors: truncation index out of range");
      for (Index i = 0; i + 1 < svals.size(); ++i)
        check_param(svals[i] >= svals[i + 1],
                    "filter_factors: tsvd expects descending values");
      phi.head(spec.h).setOnes();
      break;
    }
    case FilterSpec::Kind::tikhonov: {
      check_param(spec.alpha > 0, "filter_factors: alpha must be > 0");
      for (Index i = 0; i < svals.size(); ++i) {
        double s2 = svals[i] * svals[i];
        phi[i] = s2 / (s2 + spec.alpha);
      }
      break;
    }
  }
  return phi;
}

SolveResult tsvd_solve(const Matrix& a, const Vector& b,
                       const RegSelector& selector) {
  require_finite(a, "tsvd A");
  require_finite(b, "tsvd b");
  check_shape(a.rows() >= a.cols(), "tsvd_solve: requires m >= n");
  check_shape(b.size() == a.rows(), "tsvd_solve: b length mismatch");
  const auto t0 = std::chrono::steady_clock::now();
  const Index m = a.rows(), n = a.cols();

  Svd dec = svd(a);
  Vector c = dec.U.transpose() * b;
  const double total = b.squaredNorm();

  // residual(h)^2 = ||b||^2 - sum_{i<=h} c_i^2, nonincreasing in h
  std::vector<double> residuals(static_cast<size_t>(n));
  double acc = 0.0;
  for (Index h = 1; h <= n; ++h) {
    acc += c[h - 1] * c[h - 1];
    residuals[static_cast<size_t>(h - 1)] = std::sqrt(std::max(0.0, total - acc));
  }

  int h = 0;
  switch (selector.kind) {
    case RegSelector::Kind::fixed:
      h = static_cast<int>(selector.fixed_value);
      check_param(h >= 1 && h <= n, "tsvd_solve: fixed h out of 1..n");
      break;
    case RegSelector::Kind::dp: {
      DpConfig dp{selector.delta, selector.eta};
      auto pick = dp_discrete(residuals, dp);
      if (!pick)
        throw DpInfeasibleError(
            DpInfeasibleError::Side::lower,
            "tsvd_solve: no truncation index satisfies the discrepancy "
            "principle (residual floor " +
                std::to_string(residuals.back()) + ")");
      h = *pick;
      break;
    }
    case RegSelector::Kind::gcv:
      h = gcv_discrete_tsvd(dec, b, m);
      break;
  }

  if (dec.sigma[h - 1] <= kRankTolRel * dec.sigma[0])
    throw RankDeficiencyError(
        "tsvd_solve: sigma_h is numerically zero at h=" + std::to_string(h));

  Vector x = Vector::Zero(n);
  for (int i = 0; i < h; ++i)
    x += (c[i] / dec.sigma[i]) * dec.V.col(i);

  SolveResult out;
  out.x = std::move(x);
  out.chosen_param = static_cast<double>(h);
  out.history.push_back(make_record(h, residuals[static_cast<size_t>(h - 1)],
                                    static_cast<double>(h), std::nullopt,
                                    out.x, t0));
  out.stop_reason = StopReason::converged;
  return out;
}

namespace {

// Shared spectral view of a (possibly general-form) Tikhonov problem:
// values are the (generalized) singular values in descending order, coeffs
// the matching data components, fixed the alpha-independent solution part
// (null-space term), const2 the residual floor.
struct TikhonovSpectral {
  Vector values;   // descending
  Vector coeffs;   // data components u_i^T b, matching order
  Matrix dirs;     // solution directions (v_i or y_i), matching order
  Vector fixed;    // unfiltered null-space component of the solution
  double const2;   // residual floor (data outside the filtered range)
  Index m;         // ambient rows
  double extra_trace;  // always-passed influence components (n - k)

  Vector solve(double alpha) const {
    Vector x = fixed;
    for (Index i = 0; i < values.size(); ++i) {
      double s2 = values[i] * values[i];
      double phi = s2 / (s2 + alpha);
      if (values[i] > 0) x += phi * (coeffs[i] / values[i]) * dirs.col(i);
    }
    return x;
  }

  SpectralForm form() const {
    return SpectralForm{values, coeffs, const2};
  }
};

TikhonovSpectral spectral_standard(const Matrix& a, const Vector& b) {
  Svd dec = svd(a);
  TikhonovSpectral ts;
  ts.values = dec.sigma;
  ts.coeffs = dec.U.transpose() * b;
  ts.dirs = dec.V;
  ts.fixed = Vector::Zero(a.cols());
  ts.const2 = std::max(0.0, b.squaredNorm() - ts.coeffs.squaredNorm());
  ts.m = a.rows();
  ts.extra_trace = 0.0;
  return ts;
}

TikhonovSpectral spectral_general(const Matrix& a, const Matrix& psi,
                                  const Vector& b) {
  Gsvd dec = gsvd(a, psi);
  const Index n = a.cols(), k = psi.rows();
  Vector c = dec.U.transpose() * b;  // n components
  TikhonovSpectral ts;
  ts.values = Vector(k);
  ts.coeffs = Vector(k);
  ts.dirs = Matrix(n, k);
  // generalized values descending: gsvd orders sigma ascending, so walk the
  // first k indices backwards
  for (Index i = 0; i < k; ++i) {
    Index src = k - 1 - i;
    double lam = dec.lambda[src];
    ts.values[i] = (lam > 0) ? dec.sigma[src] / lam : 0.0;
    // rescale so x-contribution phi*(u^T b/sigma)*y matches the abstract
    // phi*(c/value)*dir form: dir = y_src / lambda_src
    ts.coeffs[i] = c[src];
    ts.dirs.col(i) = dec.Y_dual.col(src) / ((lam > 0) ? lam : 1.0);
  }
  ts.fixed = Vector::Zero(n);
  for (Index i = k; i < n; ++i) ts.fixed += c[i] * dec.Y_dual.col(i);
  ts.const2 = std::max(0.0, b.squaredNorm() - c.squaredNorm());
  ts.m = a.rows();
  ts.extra_trace = static_cast<double>(n - k);
  return ts;
}

}  // namespace

SolveResult tikhonov_solve(const Matrix& a, const Vector& b,
                           const std::optional<Matrix>& psi,
                           const RegSelector& selector) {
  require_finite(a, "tikhonov A");
  require_finite(b, "tikhonov b");
  check_shape(b.size() == a.rows(), "tikhonov_solve: b length mismatch");
  const auto t0 = std::chrono::steady_clock::now();

  TikhonovSpectral ts =
      psi ? spectral_general(a, *psi, b) : spectral_standard(a, b);

  double alpha = 0;
  switch (selector.kind) {
    case RegSelector::Kind::fixed:
      alpha = selector.fixed_value;
      check_param(alpha > 0, "tikhonov_solve: fixed alpha must be > 0");
      break;
    case RegSelector::Kind::dp: {
      check_param(selector.delta > 0,
                  "tikhonov_solve: dp selector requires delta");
      alpha = dp_newton_tikhonov(ts.form(), DpConfig{selector.delta,
                                                     selector.eta});
      break;
    }
    case RegSelector::Kind::gcv:
      alpha = gcv_min_spectral(ts.form(), static_cast<double>(ts.m),
                               ts.extra_trace);
      break;
  }

  SolveResult out;
  out.x = ts.solve(alpha);
  out.chosen_param = alpha;
  double res = (a * out.x - b).norm();
  out.history.push_back(make_record(1, res, alpha, std::nullopt, out.x, t0));
  out.stop_reason = StopReason::converged;
  return out;
}

SolveResult tgsvd_solve(const Matrix& a, const Vector& b, const Matrix& psi,
                        const RegSelector& selector) {
  require_finite(a, "tgsvd A");
  require_finite(b, "tgsvd b");
  const auto t0 = std::chrono::steady_clock::now();
  Gsvd dec = gsvd(a, psi);
  const Index n = a.cols(), k = psi.rows(), m = a.rows();
  Vector c = dec.U.transpose() * b;

  // Null-space term, identical for every h.
  Vector fixed = Vector::Zero(n);
  for (Index i = k; i < n; ++i) fixed += c[i] * dec.Y_dual.col(i);

  // residual(h)^2 = sum_{i <= k-h} c_i^2 + floor
  const double floor2 = std::max(0.0, b.squaredNorm() - c.squaredNorm());
  std::vector<double> residuals(static_cast<size_t>(k));
  for (Index h = 1; h <= k; ++h) {
    double s = floor2;
    for (Index i = 0; i < k - h; ++i) s += c[i] * c[i];
    residuals[static_cast<size_t>(h - 1)] = std::sqrt(s);
  }

  int h = 0;
  switch (selector.kind) {
    case RegSelector::Kind::fixed:
      h = static_cast<int>(selector.fixed_value);
      check_param(h >= 0 && h <= k, "tgsvd_solve: fixed h out of 0..k");
      break;
    case RegSelector::Kind::dp: {
      DpConfig dp{selector.delta, selector.eta};
      auto pick = dp_discrete(residuals, dp);
      if (!pick)
        throw DpInfeasibleError(
            DpInfeasibleError::Side::lower,
            "tgsvd_solve: discrepancy principle unsatisfiable");
      h = *pick;
      break;
    }
    case RegSelector::Kind::gcv: {
      // denominator (m - (n-k) - h)^2: the n-k null-space components always
      // pass through the influence matrix
      double best_g = std::numeric_limits<double>::infinity();
      int best_h = 1;
      for (Index hh = 1; hh <= k; ++hh) {
        double den = static_cast<double>(m) - static_cast<double>(n - k) -
                     static_cast<double>(hh);
        if (den <= 0) break;
        double num = residuals[static_cast<size_t>(hh - 1)];
        double g = num * num / (den * den);
        if (g < best_g) {
          best_g = g;
          best_h = static_cast<int>(hh);
        }
      }
      h = best_h;
      break;
    }
  }

  Vector x = fixed;
  for (int i = 0; i < h; ++i) {
    Index idx = k - 1 - i;
    if (dec.sigma[idx] <= kRankTolRel * dec.sigma[n - 1])
      throw RankDeficiencyError(
          "tgsvd_solve: generalized value numerically zero at index " +
          std::to_string(idx));
    x += (c[idx] / dec.sigma[idx]) * dec.Y_dual.col(idx);
  }

  SolveResult out;
  out.x = std::move(x);
  out.chosen_param = static_cast<double>(h);
  double res = h >= 1 ? residuals[static_cast<size_t>(h - 1)]
                      : std::sqrt(floor2 + c.head(k).squaredNorm());
  out.history.push_back(
      make_record(std::max(h, 1), res, static_cast<double>(h), std::nullopt,
                  out.x, t0));
  out.stop_reason = StopReason::converged;
  return out;
}

namespace {

Matrix pinv(const Matrix& m, double rel_tol = 1e-12) {
  Eigen::JacobiSVD<Matrix> dec(m,
                               Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = dec.singularValues();
  double tol = rel_tol * (s.size() ? s[0] : 0.0);
  Vector inv = Vector::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i)
    if (s[i] > tol) inv[i] = 1.0 / s[i];
  return dec.matrixV() * inv.asDiagonal() * dec.matrixU().transpose();
}

}  // namespace

Vector StdFormTransform::null_component(const Vector& b) const {
  if (null_basis.cols() == 0) return Vector::Zero(null_basis.rows());
  return null_basis * (aw_pinv * b);
}

Vector StdFormTransform::transformed_rhs(const Vector& b) const {
  if (null_basis.cols() == 0) return b;
  return b - aw * (aw_pinv * b);
}

Vector StdFormTransform::map_back(const Vector& z, const Vector& b) const {
  return psi_a_pinv * z + null_component(b);
}

StdFormTransform std_form_transform(const Matrix& a, const Matrix& psi) {
  require_finite(a, "std_form A");
  require_finite(psi, "std_form Psi");
  const Index n = a.cols(), k = psi.rows();
  check_shape(psi.cols() == n, "std_form_transform: shape mismatch");

  StdFormTransform tf;

  // Null-space basis of Psi from its full SVD.
  Eigen::JacobiSVD<Matrix> pdec(psi, Eigen::ComputeFullV);
  const Vector& s = pdec.singularValues();
  double tol = (s.size() ? s[0] : 0.0) * 1e-12;
  Index rank = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s[i] > tol) ++rank;
  check_param(rank == std::min(k, n),
              "std_form_transform: Psi must have full row rank");
  tf.null_basis = pdec.matrixV().rightCols(n - rank);

  Matrix psi_pinv = pinv(psi);

  if (tf.null_basis.cols() == 0) {
    tf.psi_a_pinv = psi_pinv;
    tf.aw = Matrix::Zero(a.rows(), 0);
    tf.aw_pinv = Matrix::Zero(0, a.rows());
    tf.null_basis = Matrix::Zero(n, 0);
  } else {
    tf.aw = a * tf.null_basis;  // m x (n-k)
    Eigen::JacobiSVD<Matrix> awdec(tf.aw);
    const Vector& sa = awdec.singularValues();
    if (sa.size() == 0 || sa[sa.size() - 1] <= 1e-12 * a.norm())
      throw PreconditionError(
          "std_form_transform: A restricted to null(Psi) is rank deficient; "
          "the general-form problem is not uniquely solvable");
    tf.aw_pinv = pinv(tf.aw);
    // Psi_A^+ = (I - W (A W)^+ A) Psi^+
    tf.psi_a_pinv =
        psi_pinv - tf.null_basis * (tf.aw_pinv * (a * psi_pinv));
  }
  tf.a_std = a * tf.psi_a_pinv;
  return tf;
}

}  // namespace regulus
