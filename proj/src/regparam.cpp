#include "regulus/regparam.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace regulus {

double SpectralForm::residual(double alpha) const {
  double s = const2;
  for (Index i = 0; i < gamma.size(); ++i) {
    double g2 = gamma[i] * gamma[i];
    double w = alpha / (g2 + alpha);
    if (alpha == 0.0) w = (g2 == 0.0) ? 1.0 : 0.0;
    s += coeffs[i] * coeffs[i] * w * w;
  }
  return std::sqrt(std::max(0.0, s));
}

double SpectralForm::residual_at_zero() const {
  double s = const2;
  for (Index i = 0; i < gamma.size(); ++i)
    if (gamma[i] == 0.0) s += coeffs[i] * coeffs[i];
  return std::sqrt(std::max(0.0, s));
}

double SpectralForm::residual_at_inf() const {
  return std::sqrt(std::max(0.0, const2 + coeffs.squaredNorm()));
}

Vector SpectralForm::solve_coeffs(double alpha) const {
  Vector t(gamma.size());
  for (Index i = 0; i < gamma.size(); ++i) {
    double g2 = gamma[i] * gamma[i];
    if (alpha == 0.0)
      t[i] = (gamma[i] == 0.0) ? 0.0 : coeffs[i] / gamma[i];
    else
      t[i] = gamma[i] * coeffs[i] / (g2 + alpha);
  }
  return t;
}

SpectralForm ProjectedProblem::spectral(bool include_complement) const {
  Eigen::JacobiSVD<Matrix> dec(E, Eigen::ComputeThinU);
  SpectralForm sf;
  sf.gamma = dec.singularValues();
  sf.coeffs = dec.matrixU().transpose() * f;
  sf.const2 = std::max(0.0, f.squaredNorm() - sf.coeffs.squaredNorm());
  if (include_complement) sf.const2 += complement_norm2;
  return sf;
}

std::optional<int> dp_discrete(const std::vector<double>& residuals,
                               const DpConfig& dp) {
  check_param(!residuals.empty(), "dp_discrete: empty residual history");
  check_param(dp.eta > 1.0, "dp_discrete: eta must be > 1");
  double prev = residuals.front();
  for (size_t i = 1; i < residuals.size(); ++i) {
    check_param(residuals[i] <= prev + 1e-12,
                "dp_discrete: residuals must be nonincreasing");
    prev = residuals[i];
  }
  const double bound = dp.eta * dp.delta;
  for (size_t i = 0; i < residuals.size(); ++i)
    if (residuals[i] <= bound) return static_cast<int>(i) + 1;
  return std::nullopt;
}

namespace {

// residual^2 and its derivative with respect to ahat = 1/alpha.
// With w_i = 1/(1 + gamma_i^2 ahat): D^2 = sum c_i^2 w_i^2 + const2,
// d(D^2)/dahat = -2 sum c_i^2 gamma_i^2 w_i^3.
void discrepancy_ahat(const SpectralForm& sf, double ahat, double eta_delta,
                      double* g, double* dg) {
  double d2 = sf.const2, dd2 = 0.0;
  for (Index i = 0; i < sf.gamma.size(); ++i) {
    double g2 = sf.gamma[i] * sf.gamma[i];
    double w = 1.0 / (1.0 + g2 * ahat);
    double cw = sf.coeffs[i] * w;
    d2 += cw * cw;
    dd2 += -2.0 * cw * cw * g2 * w;
  }
  double d = std::sqrt(std::max(d2, 1e-300));
  *g = d - eta_delta;
  *dg = dd2 / (2.0 * d);
}

}  // namespace

double dp_newton_tikhonov(const SpectralForm& sf, const DpConfig& dp) {
  check_param(dp.eta > 1.0, "dp_newton: eta must be > 1");
  const double target = dp.eta * dp.delta;
  const double lo = sf.residual_at_zero();   // alpha -> 0 floor
  const double hi = sf.residual_at_inf();    // alpha -> inf ceiling
  if (target >= hi)
    throw DpInfeasibleError(DpInfeasibleError::Side::upper,
                            "dp_newton: eta*delta >= ||f|| (discrepancy is "
                            "bounded above by " +
                                std::to_string(hi) + ")");
  if (target < lo * (1.0 - 1e-12))
    throw DpInfeasibleError(DpInfeasibleError::Side::lower,
                            "dp_newton: residual floor " + std::to_string(lo) +
                                " exceeds eta*delta");

  // D is decreasing and convex in ahat = 1/alpha, so Newton started left of
  // the root converges monotonically. Bisection is kept as a safety net.
  double ahat = 1e-12;
  double g, dg;
  discrepancy_ahat(sf, ahat, target, &g, &dg);
  while (g <= 0 && ahat > 1e-290) {
    // root lies left of the default start; shrink until D > target
    ahat *= 1e-2;
    discrepancy_ahat(sf, ahat, target, &g, &dg);
  }
  if (g <= 0) return 1.0 / ahat;

  // bracket: grow ahat until D < target
  double ahat_hi = ahat;
  double ghi = g;
  while (ghi > 0 && ahat_hi < 1e300) {
    ahat_hi *= 10.0;
    double tmp;
    discrepancy_ahat(sf, ahat_hi, target, &ghi, &tmp);
  }
  if (ghi > 0)
    throw DpInfeasibleError(DpInfeasibleError::Side::lower,
                            "dp_newton: no crossing found");

  double ahat_lo = ahat;
  for (int it = 0; it < 200; ++it) {
    discrepancy_ahat(sf, ahat, target, &g, &dg);
    if (std::abs(g) <= 1e-10 * std::max(target, 1e-300)) break;
    if (g > 0)
      ahat_lo = ahat;
    else
      ahat_hi = ahat;
    double step = (dg != 0.0) ? ahat - g / dg : ahat;
    if (step <= ahat_lo || step >= ahat_hi || !std::isfinite(step))
      step = 0.5 * (ahat_lo + ahat_hi);  // bisection fallback
    ahat = step;
  }
  return 1.0 / ahat;
}

double dp_newton_tikhonov(const ProjectedProblem& pp, const DpConfig& dp) {
  const bool with_complement = pp.flavor == ProblemFlavor::gks;
  return dp_newton_tikhonov(pp.spectral(with_complement), dp);
}

int gcv_discrete_tsvd(const Svd& dec, const Vector& b, Index m) {
  const Index n = dec.sigma.size();
  check_param(n >= 1, "gcv_discrete_tsvd: empty decomposition");
  Vector c = dec.U.transpose() * b;
  const double total = b.squaredNorm();
  double acc = 0.0;
  int best_h = 1;
  double best_g = std::numeric_limits<double>::infinity();
  const Index h_max = std::max<Index>(1, std::min(n, m - 1));
  for (Index h = 1; h <= h_max; ++h) {
    acc += c[h - 1] * c[h - 1];
    double num = std::max(0.0, total - acc);  // ||A x_h - b||^2
    double den = static_cast<double>(m - h);
    double g = num / (den * den);
    if (g < best_g) {
      best_g = g;
      best_h = static_cast<int>(h);
    }
  }
  return best_h;
}

namespace {

double gcv_value(const SpectralForm& sf, double zeta, double extra_trace,
                 double alpha) {
  double num = sf.residual(alpha);
  num *= num;
  double tr = 0.0;
  for (Index i = 0; i < sf.gamma.size(); ++i) {
    double g2 = sf.gamma[i] * sf.gamma[i];
    tr += (alpha == 0.0 && g2 == 0.0) ? 0.0 : g2 / (g2 + alpha);
  }
  double den = zeta - tr - extra_trace;
  if (den * den < 1e-300) return std::numeric_limits<double>::infinity();
  return num / (den * den);
}

}  // namespace

double gcv_min_spectral(const SpectralForm& sf, double zeta,
                        double extra_trace, bool* degenerate) {
  if (degenerate) *degenerate = false;
  double gmax = sf.gamma.size() ? sf.gamma.maxCoeff() : 0.0;
  if (gmax <= 0.0) {
    if (degenerate) *degenerate = true;
    return 1e-12;
  }
  const double scale = gmax * gmax;
  const double lo = 1e-12 * scale, hi = 1e2 * scale;
  constexpr int kGrid = 60;
  int best = 0;
  double best_g = std::numeric_limits<double>::infinity();
  auto grid_alpha = [&](int j) {
    return lo * std::pow(hi / lo, double(j) / (kGrid - 1));
  };
  for (int j = 0; j < kGrid; ++j) {
    double g = gcv_value(sf, zeta, extra_trace, grid_alpha(j));
    if (g < best_g) {
      best_g = g;
      best = j;
    }
  }
  // golden-section refinement on the bracketing cells
  double a = grid_alpha(std::max(0, best - 1));
  double b = grid_alpha(std::min(kGrid - 1, best + 1));
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
  double f1 = gcv_value(sf, zeta, extra_trace, x1);
  double f2 = gcv_value(sf, zeta, extra_trace, x2);
  while ((b - a) > 1e-3 * a) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = gcv_value(sf, zeta, extra_trace, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = gcv_value(sf, zeta, extra_trace, x2);
    }
  }
  return 0.5 * (a + b);
}

double gcv_continuous(const ProjectedProblem& pp, GcvMode mode,
                      bool* degenerate) {
  const bool full = mode == GcvMode::full;
  const bool with_complement = full && pp.flavor == ProblemFlavor::gks;
  SpectralForm sf = pp.spectral(with_complement);
  double zeta;
  if (full) {
    zeta = static_cast<double>(pp.ambient_rows);
  } else {
    zeta = (pp.flavor == ProblemFlavor::gks) ? pp.dim : pp.dim + 1;
  }
  return gcv_min_spectral(sf, zeta, 0.0, degenerate);
}

}  // namespace regulus
