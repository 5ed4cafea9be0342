#include "regulus/gks.hpp"

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <functional>

#include "regulus/factorizations.hpp"
#include "regulus/regparam.hpp"
#include "regulus/regularizers.hpp"

namespace regulus {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Initial approximation subspace: columns of the Golub-Kahan V after
// init_dim - 1 steps (init provides the first column).
Matrix initial_basis(const LinOp& a, const Vector& b, int init_dim) {
  check_param(init_dim >= 1, "gks: init_dim must be >= 1");
  GolubKahanState st = GolubKahanState::init(a, b);
  while (st.d + 1 < init_dim) {
    if (golub_kahan_step(a, st) == StepResult::breakdown) break;
  }
  Index take = std::min<Index>(init_dim, st.V.cols());
  return st.V.leftCols(take);
}

// t = argmin ||[R_A; sqrt(alpha) R_P] t - [f; 0]||, the projected normal
// equations in stacked least-squares form.
Vector solve_projected(const Matrix& r_a, const Matrix& r_p, const Vector& f,
                       double alpha) {
  const Index d = r_a.cols();
  Matrix stacked(r_a.rows() + r_p.rows(), d);
  stacked.topRows(r_a.rows()) = r_a;
  stacked.bottomRows(r_p.rows()) = std::sqrt(alpha) * r_p;
  Vector rhs = Vector::Zero(stacked.rows());
  rhs.head(f.size()) = f;
  return stacked.colPivHouseholderQr().solve(rhs);
}

// Standard-form transformation of the projected pair: R_A R_P^{-1}, whose
// singular values are the generalized singular values of (R_A, R_P). The
// discrepancy and influence-trace formulas for the general-form projected
// problem are exact in this matrix. Near-zero diagonal entries of R_P mark
// directions the regularizer leaves free; clamping keeps them as very large
// (essentially unfiltered) generalized values.
Matrix projected_standard_form(const Matrix& r_a, Matrix r_p) {
  const Index d = r_p.cols();
  double scale = r_p.diagonal().cwiseAbs().maxCoeff();
  for (Index i = 0; i < d; ++i) {
    double v = r_p(i, i);
    double floor = std::max(1e-14 * scale, 1e-300);
    if (std::abs(v) < floor) r_p(i, i) = v < 0 ? -floor : floor;
  }
  // E = R_A R_P^{-1}  <=>  E R_P = R_A, solved on the transposes
  Matrix et = r_p.transpose()
                  .triangularView<Eigen::Lower>()
                  .solve(r_a.transpose());
  return et.transpose();
}

struct WeightFn {
  double p = 2, q = 2, eps = 0;
  MmgksVariant variant = MmgksVariant::plain;
  ProblemDims dims;

  MmWeights operator()(const Vector& residual, const Vector& psix) const {
    MmWeights w = mm_weights(residual, psix, p, q, eps);
    if (variant != MmgksVariant::plain)
      w.reg = variant_reg_weights(variant, dims, psix, q, eps);
    return w;
  }
};

SolveResult gks_engine(const LinOp& a, const Vector& b, const LinOp& psi,
                       const IterConfig& cfg, int init_dim, bool reweight,
                       const WeightFn& wfn) {
  require_finite(b, "gks b");
  check_shape(b.size() == a.rows(), "gks: b length mismatch");
  check_shape(psi.cols() == a.cols(), "gks: Psi columns must match A");
  const auto t0 = Clock::now();
  const Index m = a.rows(), n = a.cols();
  const int max_iters = cfg.resolve_max_iters(m, n);
  const RegSelector& sel = cfg.selector;

  Matrix v = initial_basis(a, b, init_dim);
  Index d = v.cols();
  Matrix av(m, d), pv(psi.rows(), d);
  for (Index j = 0; j < d; ++j) {
    av.col(j) = a.apply(v.col(j));
    pv.col(j) = psi.apply(v.col(j));
  }
  QrPair qr_a, qr_p;
  if (!reweight) {
    qr_a = qr_skinny(av);
    qr_p = qr_skinny(pv);
  }

  const double atb_norm = a.apply_transpose(b).norm();
  const double conv_tol = 1e-12 * atb_norm;

  SolveResult out;
  out.stop_reason = StopReason::max_iters;
  Vector x = Vector::Zero(n);
  double alpha_prev = 0.0;
  bool dp_root_seen = false;

  for (int iter = 1; iter <= max_iters; ++iter) {
    Vector wb = b;
    if (reweight) {
      MmWeights w = wfn(a.apply(x) - b, psi.apply(x));
      Matrix wav = w.fid.asDiagonal() * av;
      Matrix wpv = w.reg.asDiagonal() * pv;
      wb = w.fid.cwiseProduct(b);
      qr_a = qr_skinny(wav);
      qr_p = qr_skinny(wpv);
    }
    Vector f = qr_a.Q.transpose() * wb;
    double complement2 = std::max(0.0, wb.squaredNorm() - f.squaredNorm());

    double alpha = 0.0;
    bool fell_back = false;
    if (sel.kind == RegSelector::Kind::fixed) {
      alpha = sel.fixed_value;
      check_param(alpha >= 0, "gks: fixed alpha must be >= 0");
    } else {
      ProjectedProblem pp{projected_standard_form(qr_a.R, qr_p.R), f, m,
                          static_cast<int>(d), ProblemFlavor::gks,
                          complement2};
      if (sel.kind == RegSelector::Kind::gcv) {
        GcvMode mode = sel.variant == RegSelector::GcvVariant::full
                           ? GcvMode::full
                           : GcvMode::projected;  // projected is the default
        alpha = gcv_continuous(pp, mode);
      } else {
        try {
          alpha = dp_newton_tikhonov(pp, DpConfig{sel.delta, sel.eta});
          dp_root_seen = true;
        } catch (const DpInfeasibleError&) {
          // The subspace cannot reach the discrepancy target yet. Carry the
          // last root once one exists; before that, expand unregularized so
          // the basis closes the data gap first.
          fell_back = true;
          alpha = dp_root_seen ? alpha_prev : 0.0;
        }
      }
    }
    alpha_prev = alpha;

    Vector t = solve_projected(qr_a.R, qr_p.R, f, alpha);
    x = v.leftCols(d) * t;
    Vector ax = av.leftCols(d) * t;
    Vector px = pv.leftCols(d) * t;

    IterRecord rec;
    rec.iteration = iter;
    rec.residual_norm = (ax - b).norm();
    rec.regparam = alpha;
    rec.dp_fallback = fell_back;
    if (cfg.x_true && cfg.x_true->norm() > 0)
      rec.relative_error = (x - *cfg.x_true).norm() / cfg.x_true->norm();
    if (reweight)
      rec.objective =
          lpq_objective(a, b, psi, x, wfn.p, wfn.q, wfn.eps, alpha);
    rec.wall_ms = elapsed_ms(t0);
    out.history.push_back(rec);

    // Expansion direction: weighted normal-equations residual.
    Vector rtil;
    if (reweight) {
      MmWeights w = wfn(ax - b, px);
      rtil = a.apply_transpose(w.fid.array().square().matrix().cwiseProduct(
                 ax - b)) +
             alpha * psi.apply_transpose(
                         w.reg.array().square().matrix().cwiseProduct(px));
    } else {
      rtil = a.apply_transpose(ax - b) + alpha * psi.apply_transpose(px);
    }
    double rtil_norm = rtil.norm();
    if (rtil_norm <= conv_tol) {
      out.stop_reason = StopReason::converged;
      break;
    }
    if (iter == max_iters || d >= std::min(m, n)) break;

    Vector vnew = rtil / rtil_norm;
    // two passes of modified Gram-Schmidt against the current basis
    for (int pass = 0; pass < 2; ++pass)
      for (Index j = 0; j < d; ++j)
        vnew -= v.col(j).dot(vnew) * v.col(j);
    double nrm = vnew.norm();
    if (nrm <= 1e-14) {
      out.stop_reason = StopReason::converged;
      break;
    }
    vnew /= nrm;

    v.conservativeResize(Eigen::NoChange, d + 1);
    v.col(d) = vnew;
    av.conservativeResize(Eigen::NoChange, d + 1);
    av.col(d) = a.apply(vnew);
    pv.conservativeResize(Eigen::NoChange, d + 1);
    pv.col(d) = psi.apply(vnew);
    if (!reweight) {
      qr_append_column(qr_a, av.col(d));
      qr_append_column(qr_p, pv.col(d));
    }
    ++d;
  }

  out.x = std::move(x);
  out.chosen_param = alpha_prev;
  return out;
}

}  // namespace

SolveResult gks(const LinOp& a, const Vector& b, const LinOp& psi,
                const IterConfig& cfg, int init_dim) {
  WeightFn unit;  // p = q = 2: unit weights
  return gks_engine(a, b, psi, cfg, init_dim, /*reweight=*/false, unit);
}

MmWeights mm_weights(const Vector& residual, const Vector& psix, double p,
                     double q, double eps) {
  check_param(p > 0 && p <= 2 && q > 0 && q <= 2,
              "mm_weights: p and q must lie in (0, 2]");
  if ((p <= 1 || q <= 1) && !(eps > 0))
    throw ParameterError("mm_weights: eps must be > 0 when p <= 1 or q <= 1");
  MmWeights w;
  w.p = p;
  w.q = q;
  w.eps = eps;
  const double ep = (p - 2.0) / 4.0, eq = (q - 2.0) / 4.0;
  w.fid = (residual.array().square() + eps * eps).pow(ep).matrix();
  w.reg = (psix.array().square() + eps * eps).pow(eq).matrix();
  if (p == 2.0) w.fid.setOnes();
  if (q == 2.0) w.reg.setOnes();
  require_finite(w.fid, "mm_weights fidelity");
  require_finite(w.reg, "mm_weights regularization");
  return w;
}

Vector variant_reg_weights(MmgksVariant variant, const ProblemDims& dims,
                           const Vector& psix, double q, double eps) {
  const double eq = (q - 2.0) / 4.0;
  const Index ns = dims.spatial(), nt = dims.nt;
  switch (variant) {
    case MmgksVariant::plain:
      return (psix.array().square() + eps * eps).pow(eq).matrix();
    case MmgksVariant::iso_tv: {
      // layout: [x-differences (ns*nt)] [y-differences (ns*nt)]
      //         [time differences ((nt-1)*ns)]
      const Index nblock = ns * nt;
      check_shape(psix.size() == 2 * nblock + (nt - 1) * ns,
                  "iso_tv weights: gradient length mismatch");
      Vector w(psix.size());
      for (Index l = 0; l < nblock; ++l) {
        double dx = psix[l], dy = psix[nblock + l];
        double shared = std::pow(dx * dx + dy * dy + eps * eps, eq);
        w[l] = shared;
        w[nblock + l] = shared;
      }
      for (Index l = 2 * nblock; l < psix.size(); ++l)
        w[l] = std::pow(psix[l] * psix[l] + eps * eps, eq);
      return w;
    }
    case MmgksVariant::group_sparsity: {
      // layout: nt repetitions of the spatial gradient; one weight per
      // gradient pixel, replicated across time
      const Index ks = (dims.nx - 1) * dims.ny + dims.nx * (dims.ny - 1);
      check_shape(psix.size() == nt * ks,
                  "group_sparsity weights: gradient length mismatch");
      Vector w(psix.size());
      for (Index l = 0; l < ks; ++l) {
        double g = 0;
        for (Index t = 0; t < nt; ++t) {
          double v = psix[t * ks + l];
          g += v * v;
        }
        double shared = std::pow(g + eps * eps, eq);
        for (Index t = 0; t < nt; ++t) w[t * ks + l] = shared;
      }
      return w;
    }
  }
  throw ParameterError("variant_reg_weights: unknown variant");
}

SolveResult mmgks(const LinOp& a, const Vector& b, const LinOp& psi,
                  double p, double q, double eps, const IterConfig& cfg,
                  int init_dim, MmgksVariant variant,
                  std::optional<ProblemDims> dims) {
  check_param(p > 0 && p <= 2 && q > 0 && q <= 2,
              "mmgks: p and q must lie in (0, 2]");
  if ((p <= 1 || q <= 1) && !(eps > 0))
    throw ParameterError("mmgks: eps must be > 0 when p <= 1 or q <= 1");
  if (variant != MmgksVariant::plain)
    check_param(dims.has_value(),
                "mmgks: iso_tv/group_sparsity need problem dimensions");
  WeightFn wfn;
  wfn.p = p;
  wfn.q = q;
  wfn.eps = eps;
  wfn.variant = variant;
  if (dims) {
    wfn.dims = *dims;
    check_shape(a.cols() == dims->total(),
                "mmgks: operator does not match problem dimensions");
  }
  return gks_engine(a, b, psi, cfg, init_dim, /*reweight=*/true, wfn);
}

LinOpPtr aniso_tv_operator(const ProblemDims& dims) {
  if (dims.nt == 1) {
    if (dims.ny == 1) return gen_first_derivative_operator(dims.nx);
    return gen_first_derivative_operator_2d(dims.nx, dims.ny);
  }
  return gen_spacetime_derivative_operator(dims.nx, dims.ny, dims.nt);
}

LinOpPtr iso_tv_operator(const ProblemDims& dims) {
  // Square derivative variants (zero row appended) so the x and y blocks
  // have ns rows each and pair up entrywise. A singleton dimension has no
  // differences and contributes a zero block.
  LinOpPtr dx_sq = dims.nx >= 2 ? square_first_derivative_operator(dims.nx)
                                : zero_op(1, 1);
  LinOpPtr dy_sq = dims.ny >= 2 ? square_first_derivative_operator(dims.ny)
                                : zero_op(1, 1);
  LinOpPtr ix = identity_op(dims.nx);
  LinOpPtr iy = identity_op(dims.ny);
  LinOpPtr xblock = kron_op(iy, dx_sq);
  LinOpPtr yblock = kron_op(dy_sq, ix);
  LinOpPtr it = identity_op(dims.nt);
  std::vector<LinOpPtr> parts{kron_op(it, xblock), kron_op(it, yblock)};
  if (dims.nt > 1) {
    LinOpPtr dt = gen_first_derivative_operator(dims.nt);
    parts.push_back(kron_op(dt, identity_op(dims.spatial())));
  }
  return vstack_op(std::move(parts));
}

LinOpPtr group_sparsity_operator(const ProblemDims& dims) {
  LinOpPtr grad = dims.ny == 1
                      ? gen_first_derivative_operator(dims.nx)
                      : gen_first_derivative_operator_2d(dims.nx, dims.ny);
  if (dims.nt == 1) return grad;
  return kron_op(identity_op(dims.nt), grad);
}

SolveResult driver_aniso_tv(const LinOp& a, const Vector& b,
                            const ProblemDims& dims, const IterConfig& cfg,
                            double eps, int init_dim) {
  check_shape(a.cols() == dims.total(),
              "aniso_tv: dims inconsistent with operator shape");
  LinOpPtr psi = aniso_tv_operator(dims);
  return mmgks(a, b, *psi, 2.0, 1.0, eps, cfg, init_dim);
}

SolveResult driver_iso_tv(const LinOp& a, const Vector& b,
                          const ProblemDims& dims, const IterConfig& cfg,
                          double eps, int init_dim) {
  check_shape(a.cols() == dims.total(),
              "iso_tv: dims inconsistent with operator shape");
  check_param(dims.nx == dims.ny || dims.ny == 1,
              "iso_tv: requires nx == ny (or a 1D problem with ny == 1)");
  LinOpPtr psi = iso_tv_operator(dims);
  return mmgks(a, b, *psi, 2.0, 1.0, eps, cfg, init_dim,
               MmgksVariant::iso_tv, dims);
}

SolveResult driver_group_sparsity(const LinOp& a, const Vector& b,
                                  const ProblemDims& dims,
                                  const IterConfig& cfg, double eps,
                                  int init_dim) {
  check_shape(a.cols() == dims.total(),
              "group_sparsity: dims inconsistent with operator shape");
  check_param(dims.ny > 1, "group_sparsity: requires a 2D spatial grid");
  LinOpPtr psi = group_sparsity_operator(dims);
  return mmgks(a, b, *psi, 2.0, 1.0, eps, cfg, init_dim,
               MmgksVariant::group_sparsity, dims);
}

double lpq_objective(const LinOp& a, const Vector& b, const LinOp& psi,
                     const Vector& x, double p, double q, double eps,
                     double alpha) {
  const double ep = p > 1.0 ? 0.0 : eps;
  const double eq = q > 1.0 ? 0.0 : eps;
  Vector r = a.apply(x) - b;
  Vector px = psi.apply(x);
  double fid = (r.array().square() + ep * ep).pow(p / 2.0).sum();
  double reg = (px.array().square() + eq * eq).pow(q / 2.0).sum();
  return fid + alpha * reg;
}

}  // namespace regulus
