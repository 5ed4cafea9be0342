#include "regulus/krylov.hpp"

#include <Eigen/Dense>
#include <chrono>
#include <cmath>

#include "regulus/factorizations.hpp"
#include "regulus/regparam.hpp"

namespace regulus {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// SVD view of the current projected problem min ||E t - beta e1||, solved
// for arbitrary damping alpha. E is (d+1) x d.
struct SmallLS {
  Eigen::JacobiSVD<Matrix> dec;
  Vector fhat;
  double rho0sq;  // ||f||^2 - ||fhat||^2

  SmallLS(const Matrix& e, const Vector& f)
      : dec(e, Eigen::ComputeThinU | Eigen::ComputeThinV) {
    fhat = dec.matrixU().transpose() * f;
    rho0sq = std::max(0.0, f.squaredNorm() - fhat.squaredNorm());
  }

  Vector solve(double alpha) const {
    const Vector& g = dec.singularValues();
    Vector t = Vector::Zero(g.size());
    for (Index i = 0; i < g.size(); ++i) {
      if (alpha == 0.0) {
        if (g[i] > 1e-14 * g[0]) t[i] = fhat[i] / g[i];
      } else {
        t[i] = g[i] * fhat[i] / (g[i] * g[i] + alpha);
      }
    }
    return dec.matrixV() * t;
  }

  double residual(double alpha) const {
    const Vector& g = dec.singularValues();
    double s = rho0sq;
    for (Index i = 0; i < g.size(); ++i) {
      double w;
      if (alpha == 0.0)
        w = (g[i] > 1e-14 * g[0]) ? 0.0 : 1.0;
      else
        w = alpha / (g[i] * g[i] + alpha);
      s += fhat[i] * fhat[i] * w * w;
    }
    return std::sqrt(std::max(0.0, s));
  }
};

enum class Mode { plain, hybrid, regularize_last };

struct Basis {
  // Columns spanning the approximation subspace; projected matrix
  // E ((d+1) x d) and rhs beta * e1.
  virtual ~Basis() = default;
  virtual StepResult step() = 0;
  virtual Matrix projected() const = 0;
  virtual Vector solution(const Vector& t) const = 0;  // x = V_d t
  virtual int dim() const = 0;
  virtual bool broken() const = 0;
};

struct ArnoldiBasis final : Basis {
  const LinOp& a;
  ArnoldiState st;
  ArnoldiBasis(const LinOp& a_, const Vector& b) : a(a_) {
    st = ArnoldiState::init(a_, b);
  }
  StepResult step() override { return arnoldi_step(a, st); }
  Matrix projected() const override { return st.H; }
  Vector solution(const Vector& t) const override {
    return st.V.leftCols(st.d) * t;
  }
  int dim() const override { return st.d; }
  bool broken() const override { return st.broken; }
};

struct GkBasis final : Basis {
  const LinOp& a;
  GolubKahanState st;
  GkBasis(const LinOp& a_, const Vector& b) : a(a_) {
    st = GolubKahanState::init(a_, b);
  }
  StepResult step() override { return golub_kahan_step(a, st); }
  Matrix projected() const override { return st.projected(); }
  Vector solution(const Vector& t) const override {
    return st.V.leftCols(st.d) * t;
  }
  int dim() const override { return st.d; }
  bool broken() const override { return st.broken; }
};

double pick_alpha(const SmallLS& ls, const Matrix& e, const Vector& f,
                  Index m, int d, ProblemFlavor flavor,
                  const RegSelector& sel, double prev_alpha, bool have_prev,
                  bool* fell_back) {
  *fell_back = false;
  switch (sel.kind) {
    case RegSelector::Kind::fixed:
      return sel.fixed_value;
    case RegSelector::Kind::gcv: {
      ProjectedProblem pp{e, f, m, d, flavor, 0.0};
      GcvMode mode = sel.variant == RegSelector::GcvVariant::projected
                         ? GcvMode::projected
                         : GcvMode::full;  // full is the hybrid default
      return gcv_continuous(pp, mode);
    }
    case RegSelector::Kind::dp: {
      try {
        ProjectedProblem pp{e, f, m, d, flavor, 0.0};
        return dp_newton_tikhonov(pp, DpConfig{sel.delta, sel.eta});
      } catch (const DpInfeasibleError&) {
        // projected noise condition unsatisfiable at this dimension
        *fell_back = true;
        if (have_prev) return prev_alpha;
        ProjectedProblem pp{e, f, m, d, flavor, 0.0};
        return gcv_continuous(pp, GcvMode::full);
      }
    }
  }
  (void)ls;
  return 0.0;
}

SolveResult projection_solve(Basis& basis, const LinOp& a, const Vector& b,
                             const IterConfig& cfg, Mode mode,
                             ProblemFlavor flavor) {
  const auto t0 = Clock::now();
  const int d_max = cfg.resolve_max_iters(a.rows(), a.cols());
  const double beta = b.norm();
  const RegSelector& sel = cfg.selector;
  const bool dp_stopping =
      sel.kind == RegSelector::Kind::dp && mode != Mode::hybrid;

  SolveResult out;
  out.stop_reason = StopReason::max_iters;
  Vector t_last;
  double alpha_prev = 0.0;
  bool have_alpha = false;

  for (int d = 1; d <= d_max; ++d) {
    StepResult sr = basis.step();
    Matrix e = basis.projected();
    Vector f = Vector::Zero(e.rows());
    f[0] = beta;
    SmallLS ls(e, f);

    double alpha = 0.0;
    bool fell_back = false;
    if (mode == Mode::hybrid)
      alpha = pick_alpha(ls, e, f, a.rows(), d, flavor, sel, alpha_prev,
                         have_alpha, &fell_back);
    t_last = ls.solve(alpha);
    double res = ls.residual(alpha);

    IterRecord rec;
    rec.iteration = d;
    rec.residual_norm = res;
    if (mode == Mode::hybrid) {
      rec.regparam = alpha;
      rec.dp_fallback = fell_back;
      alpha_prev = alpha;
      have_alpha = true;
    }
    if (cfg.x_true && cfg.x_true->norm() > 0) {
      Vector x = basis.solution(t_last);
      rec.relative_error = (x - *cfg.x_true).norm() / cfg.x_true->norm();
    }
    rec.wall_ms = elapsed_ms(t0);
    out.history.push_back(rec);

    if (dp_stopping && res <= sel.eta * sel.delta) {
      out.stop_reason = StopReason::dp_satisfied;
      break;
    }
    if (sr == StepResult::breakdown) {
      out.stop_reason = StopReason::breakdown;
      break;
    }
  }

  if (mode == Mode::regularize_last) {
    // Tikhonov-regularize only the final projected problem.
    Matrix e = basis.projected();
    Vector f = Vector::Zero(e.rows());
    f[0] = beta;
    SmallLS ls(e, f);
    double alpha = 0.0;
    bool fell_back = false;
    alpha = pick_alpha(ls, e, f, a.rows(), basis.dim(), flavor, sel, 0.0,
                       false, &fell_back);
    t_last = ls.solve(alpha);
    out.chosen_param = alpha;
    if (!out.history.empty()) {
      out.history.back().regparam = alpha;
      out.history.back().residual_norm = ls.residual(alpha);
      out.history.back().dp_fallback = fell_back;
    }
  } else if (mode == Mode::hybrid) {
    out.chosen_param = alpha_prev;
  }

  out.x = basis.solution(t_last);
  return out;
}

void validate_plain_selector(const RegSelector& sel, const char* who) {
  if (sel.kind == RegSelector::Kind::gcv &&
      sel.variant != RegSelector::GcvVariant::solver_default)
    throw ParameterError(std::string(who) +
                         ": gcv selector is not applicable to an "
                         "unregularized projection method");
}

}  // namespace

SolveResult gmres(const LinOp& a, const Vector& b, const IterConfig& cfg) {
  check_shape(a.rows() == a.cols(), "gmres: operator must be square");
  require_finite(b, "gmres b");
  validate_plain_selector(cfg.selector, "gmres");
  ArnoldiBasis basis(a, b);
  IterConfig plain = cfg;
  if (plain.selector.kind == RegSelector::Kind::fixed)
    throw ParameterError("gmres: fixed-alpha selector is not applicable");
  return projection_solve(basis, a, b, plain, Mode::plain,
                          ProblemFlavor::hybrid_gmres);
}

SolveResult hybrid_gmres(const LinOp& a, const Vector& b,
                         const IterConfig& cfg) {
  check_shape(a.rows() == a.cols(), "hybrid_gmres: operator must be square");
  require_finite(b, "hybrid_gmres b");
  ArnoldiBasis basis(a, b);
  return projection_solve(basis, a, b, cfg, Mode::hybrid,
                          ProblemFlavor::hybrid_gmres);
}

SolveResult arnoldi_tikhonov(const LinOp& a, const Vector& b,
                             const IterConfig& cfg) {
  check_shape(a.rows() == a.cols(),
              "arnoldi_tikhonov: operator must be square");
  require_finite(b, "arnoldi_tikhonov b");
  ArnoldiBasis basis(a, b);
  return projection_solve(basis, a, b, cfg, Mode::regularize_last,
                          ProblemFlavor::hybrid_gmres);
}

SolveResult lsqr(const LinOp& a, const Vector& b, const IterConfig& cfg) {
  require_finite(b, "lsqr b");
  validate_plain_selector(cfg.selector, "lsqr");
  if (cfg.selector.kind == RegSelector::Kind::fixed)
    throw ParameterError("lsqr: fixed-alpha selector is not applicable");
  GkBasis basis(a, b);
  return projection_solve(basis, a, b, cfg, Mode::plain,
                          ProblemFlavor::hybrid_lsqr);
}

SolveResult hybrid_lsqr(const LinOp& a, const Vector& b,
                        const IterConfig& cfg) {
  require_finite(b, "hybrid_lsqr b");
  GkBasis basis(a, b);
  return projection_solve(basis, a, b, cfg, Mode::hybrid,
                          ProblemFlavor::hybrid_lsqr);
}

SolveResult gk_tikhonov(const LinOp& a, const Vector& b,
                        const IterConfig& cfg) {
  require_finite(b, "gk_tikhonov b");
  GkBasis basis(a, b);
  return projection_solve(basis, a, b, cfg, Mode::regularize_last,
                          ProblemFlavor::hybrid_lsqr);
}

SolveResult cgls(const LinOp& a, const Vector& b, const IterConfig& cfg) {
  require_finite(b, "cgls b");
  const auto t0 = Clock::now();
  const RegSelector& sel = cfg.selector;
  if (sel.kind == RegSelector::Kind::gcv &&
      sel.variant != RegSelector::GcvVariant::solver_default)
    throw ParameterError("cgls: gcv selector is not applicable");
  const double damp =
      sel.kind == RegSelector::Kind::fixed ? sel.fixed_value : 0.0;
  check_param(damp >= 0, "cgls: damping alpha must be >= 0");
  // The recurrence stores no basis, and rounding delays the exact-arithmetic
  // termination, so the subspace-dimension cap does not apply here.
  const int d_max =
      cfg.max_iters > 0
          ? cfg.max_iters
          : cfg.resolve_max_iters(a.rows(), a.cols());
  const bool dp_stopping = sel.kind == RegSelector::Kind::dp;

  Vector x = Vector::Zero(a.cols());
  Vector r = b;
  Vector s = a.apply_transpose(r);
  const double s0_norm = s.norm();
  check_param(s0_norm > 0, "cgls: A^T b must be nonzero");
  Vector p = s;
  double gamma = s.squaredNorm();

  SolveResult out;
  out.stop_reason = StopReason::max_iters;
  const double stag_tol = 1e-14 * s0_norm;

  for (int d = 1; d <= d_max; ++d) {
    Vector q = a.apply(p);
    double denom = q.squaredNorm() + damp * p.squaredNorm();
    if (denom <= 0) {
      out.stop_reason = StopReason::breakdown;
      break;
    }
    double step = gamma / denom;
    x += step * p;
    r -= step * q;
    s = a.apply_transpose(r) - damp * x;

    IterRecord rec;
    rec.iteration = d;
    rec.residual_norm = r.norm();
    if (damp > 0) rec.regparam = damp;
    if (cfg.x_true && cfg.x_true->norm() > 0)
      rec.relative_error = (x - *cfg.x_true).norm() / cfg.x_true->norm();
    rec.wall_ms = elapsed_ms(t0);
    out.history.push_back(rec);

    if (dp_stopping && rec.residual_norm <= sel.eta * sel.delta) {
      out.stop_reason = StopReason::dp_satisfied;
      break;
    }
    double gamma_next = s.squaredNorm();
    if (std::sqrt(gamma_next) <= stag_tol) {
      out.stop_reason = StopReason::breakdown;
      break;
    }
    p = s + (gamma_next / gamma) * p;
    gamma = gamma_next;
  }
  out.x = std::move(x);
  return out;
}

}  // namespace regulus
