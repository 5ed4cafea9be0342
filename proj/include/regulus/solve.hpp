#pragma once

#include <optional>
#include <vector>

#include "regulus/types.hpp"

namespace regulus {

enum class StopReason { dp_satisfied, max_iters, breakdown, converged };

struct IterRecord {
  int iteration = 0;  // 1-based
  double residual_norm = 0;
  std::optional<double> regparam;
  std::optional<double> relative_error;
  std::optional<double> objective;  // smoothed lp-lq value, MMGKS only
  bool dp_fallback = false;  // DP was infeasible here; parameter carried over
  double wall_ms = 0;        // elapsed since solve start
};

struct SolveResult {
  Vector x;
  std::vector<IterRecord> history;
  StopReason stop_reason = StopReason::max_iters;
  std::optional<double> chosen_param;  // truncation index or final alpha
};

/// Parameter-choice policy: a fixed value, the discrepancy principle,
/// or generalized cross validation.
struct RegSelector {
  enum class Kind { fixed, dp, gcv };
  enum class GcvVariant { solver_default, full, projected };

  Kind kind = Kind::gcv;
  double fixed_value = 0.0;
  double delta = 0.0;  // noise-norm estimate (dp)
  double eta = 1.01;   // safety factor, > 1
  GcvVariant variant = GcvVariant::solver_default;

  static RegSelector fixed(double value) {
    RegSelector s;
    s.kind = Kind::fixed;
    s.fixed_value = value;
    return s;
  }
  static RegSelector dp(double delta, double eta = 1.01) {
    check_param(eta > 1.0, "dp selector: eta must be > 1");
    check_param(delta >= 0.0, "dp selector: delta must be >= 0");
    RegSelector s;
    s.kind = Kind::dp;
    s.delta = delta;
    s.eta = eta;
    return s;
  }
  static RegSelector gcv(GcvVariant v = GcvVariant::solver_default) {
    RegSelector s;
    s.kind = Kind::gcv;
    s.variant = v;
    return s;
  }
};

struct IterConfig {
  int max_iters = 0;  // 0 selects the default min(100, min(m, n))
  RegSelector selector = RegSelector::gcv();
  std::optional<Vector> x_true;  // enables the relative-error history

  int resolve_max_iters(Index m, Index n) const {
    const int cap = static_cast<int>(std::min(m, n));
    if (max_iters > 0) return std::min(max_iters, cap);
    return std::min(100, cap);
  }
};

}  // namespace regulus
