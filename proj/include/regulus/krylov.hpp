#pragma once

#include "regulus/linop.hpp"
#include "regulus/solve.hpp"

namespace regulus {

// Projection methods on standard Krylov subspaces. All solvers start from
// x = 0 and record one history entry per iteration.
//
// Plain solvers (gmres, lsqr, cgls) accept a dp selector as stopping rule;
// cgls additionally accepts fixed(alpha) for the damped least-squares mode.
// Hybrid solvers select an inner Tikhonov parameter each iteration
// (fixed / dp / gcv) and run to max_iters. The *_tikhonov variants run the
// plain iteration and regularize only the final projected problem.

SolveResult gmres(const LinOp& a, const Vector& b, const IterConfig& cfg);
SolveResult hybrid_gmres(const LinOp& a, const Vector& b,
                         const IterConfig& cfg);
SolveResult arnoldi_tikhonov(const LinOp& a, const Vector& b,
                             const IterConfig& cfg);

SolveResult lsqr(const LinOp& a, const Vector& b, const IterConfig& cfg);
SolveResult hybrid_lsqr(const LinOp& a, const Vector& b,
                        const IterConfig& cfg);
SolveResult gk_tikhonov(const LinOp& a, const Vector& b,
                        const IterConfig& cfg);

SolveResult cgls(const LinOp& a, const Vector& b, const IterConfig& cfg);

}  // namespace regulus
