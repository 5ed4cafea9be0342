#pragma once

#include <optional>
#include <vector>

#include "regulus/factorizations.hpp"
#include "regulus/types.hpp"

namespace regulus {

struct DpConfig {
  double delta = 0;  // noise-norm estimate
  double eta = 1.01; // safety factor, > 1
};

/// Spectral reduction of a Tikhonov-regularized least-squares problem:
/// with t(alpha) minimizing ||E t - f||^2 + alpha ||t||^2,
///   residual(alpha)^2 = sum_i coeffs_i^2 (alpha/(gamma_i^2+alpha))^2 + const2,
/// where gamma are the singular values of E, coeffs the components of f
/// along its left singular vectors, and const2 the alpha-independent floor
/// (data outside range(E), plus any orthogonal-complement term).
struct SpectralForm {
  Vector gamma;
  Vector coeffs;
  double const2 = 0;

  double residual(double alpha) const;
  double residual_at_zero() const;   // alpha -> 0 limit
  double residual_at_inf() const;    // alpha -> inf limit (x = 0)
  Vector solve_coeffs(double alpha) const;  // filtered coefficients along V
};

enum class ProblemFlavor { hybrid_gmres, hybrid_lsqr, gks };

/// A projected problem min ||E t - f||^2 + alpha ||t||^2 as produced by the
/// Krylov and generalized-Krylov solvers. E is H_d or B_d ((d+1) x d) for
/// the hybrid methods and R_A (d x d) for GKS.
struct ProjectedProblem {
  Matrix E;
  Vector f;
  Index ambient_rows = 0;      // m of the full problem
  int dim = 0;                 // d
  ProblemFlavor flavor = ProblemFlavor::hybrid_lsqr;
  double complement_norm2 = 0; // ||(I - Q_A Q_A^T) b||^2, GKS only

  /// Spectral form of the projected residual; include_complement adds the
  /// GKS orthogonal-complement term to the constant floor.
  SpectralForm spectral(bool include_complement) const;
};

/// Smallest 1-based index whose residual is <= eta*delta; nullopt when the
/// bound is never met. Residuals must be nonincreasing (1e-12 slack).
std::optional<int> dp_discrete(const std::vector<double>& residuals,
                               const DpConfig& dp);

/// Newton iteration (in 1/alpha) for the alpha with residual(alpha) =
/// eta*delta, accurate to 1e-8 relative. Throws DpInfeasibleError when the
/// root is not bracketed.
double dp_newton_tikhonov(const SpectralForm& sf, const DpConfig& dp);

/// Convenience: discrepancy of the projected problem measured against the
/// full-dimensional problem (adds the GKS complement term for that flavor).
double dp_newton_tikhonov(const ProjectedProblem& pp, const DpConfig& dp);

/// Brute-force GCV for truncated SVD; returns the minimizing truncation
/// index h in 1..n-1. G(h) = ||A x_h - b||^2 / (m - h)^2.
int gcv_discrete_tsvd(const Svd& dec, const Vector& b, Index m);

enum class GcvMode { full, projected };

/// GCV curve minimizer for a spectral form:
///   G(alpha) = residual(alpha)^2 / (zeta - sum_i gamma_i^2/(gamma_i^2+alpha)
///              - extra_trace)^2
/// minimized over a 60-point log grid on [1e-12, 1e2]*gamma_max^2 refined by
/// golden section to 1e-3 relative. A degenerate all-zero spectrum returns
/// the lower grid endpoint and sets *degenerate.
double gcv_min_spectral(const SpectralForm& sf, double zeta,
                        double extra_trace = 0.0, bool* degenerate = nullptr);

/// GCV for a projected problem. zeta is m in full mode; in projected mode it
/// is d+1 for the hybrid Krylov flavors and d for GKS. The GKS complement
/// term enters the numerator only in full mode.
double gcv_continuous(const ProjectedProblem& pp, GcvMode mode,
                      bool* degenerate = nullptr);

}  // namespace regulus
