#pragma once

#include <optional>

#include "regulus/linop.hpp"
#include "regulus/solve.hpp"

namespace regulus {

/// Generalized Krylov subspace method for ||Ax-b||^2 + alpha ||Psi x||^2.
/// The initial d0-dimensional subspace comes from Golub-Kahan
/// bidiagonalization on (A, b); each iteration solves the projected normal
/// equations through skinny QR factors of A V and Psi V, then expands the
/// basis with the normalized full normal-equations residual.
SolveResult gks(const LinOp& a, const Vector& b, const LinOp& psi,
                const IterConfig& cfg, int init_dim = 2);

/// Square-root IRLS weights turning the smoothed lp-lq terms into weighted
/// 2-norms: reg[j] = ((Psi x)_j^2 + eps^2)^((q-2)/4),
///          fid[j] = (r_j^2 + eps^2)^((p-2)/4).
struct MmWeights {
  Vector fid;  // one entry per row of A
  Vector reg;  // one entry per row of Psi
  double eps = 0;
  double p = 2, q = 2;
};

MmWeights mm_weights(const Vector& residual, const Vector& psix, double p,
                     double q, double eps);

enum class MmgksVariant { plain, iso_tv, group_sparsity };

struct ProblemDims {
  Index nx = 0, ny = 1, nt = 1;
  Index spatial() const { return nx * ny; }
  Index total() const { return nx * ny * nt; }
};

/// Majorization-minimization on generalized Krylov subspaces for the
/// smoothed lp-lq problem. One reweighting step per basis expansion; the
/// weighted QR factors are recomputed each step. The iso_tv and
/// group_sparsity variants share weights across gradient components per
/// the corresponding regularizer grouping and need the problem dimensions.
SolveResult mmgks(const LinOp& a, const Vector& b, const LinOp& psi,
                  double p, double q, double eps, const IterConfig& cfg,
                  int init_dim = 2,
                  MmgksVariant variant = MmgksVariant::plain,
                  std::optional<ProblemDims> dims = std::nullopt);

// Drivers wiring the space(-time) derivative operators into mmgks with
// p = 2, q = 1 and the matching weight grouping. nt = 1 gives the static
// problem.
SolveResult driver_aniso_tv(const LinOp& a, const Vector& b,
                            const ProblemDims& dims, const IterConfig& cfg,
                            double eps = 1e-3, int init_dim = 2);
SolveResult driver_iso_tv(const LinOp& a, const Vector& b,
                          const ProblemDims& dims, const IterConfig& cfg,
                          double eps = 1e-3, int init_dim = 2);
SolveResult driver_group_sparsity(const LinOp& a, const Vector& b,
                                  const ProblemDims& dims,
                                  const IterConfig& cfg, double eps = 1e-3,
                                  int init_dim = 2);

/// Regularization operators used by the drivers (exposed for tests).
LinOpPtr aniso_tv_operator(const ProblemDims& dims);
LinOpPtr iso_tv_operator(const ProblemDims& dims);
LinOpPtr group_sparsity_operator(const ProblemDims& dims);

/// Per-row regularization weights for a given variant and gradient vector.
Vector variant_reg_weights(MmgksVariant variant, const ProblemDims& dims,
                           const Vector& psix, double q, double eps);

/// Smoothed lp-lq objective: sum_j phi_p((Ax-b)_j) + alpha sum_j
/// phi_q((Psi x)_j) with phi_r(t) = (t^2 + eps_r^2)^(r/2), eps_r = eps for
/// r <= 1 and 0 for r > 1.
double lpq_objective(const LinOp& a, const Vector& b, const LinOp& psi,
                     const Vector& x, double p, double q, double eps,
                     double alpha);

}  // namespace regulus
