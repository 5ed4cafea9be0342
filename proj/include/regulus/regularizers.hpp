#pragma once

#include "regulus/linop.hpp"

namespace regulus {

/// Finite-difference first derivative, (n-1) x n with stencil rows [1, -1];
/// annihilates constants.
LinOpPtr gen_first_derivative_operator(Index n);

/// Square variant with a zero row appended (n x n); used for isotropic TV
/// pairing where both gradient blocks must have one row per pixel.
LinOpPtr square_first_derivative_operator(Index n);

/// Discrete gradient of a column-stacked nx x ny image:
/// [(I_ny kron Dx); (Dy kron I_nx)], vertical differences first.
LinOpPtr gen_first_derivative_operator_2d(Index nx, Index ny);

/// Space-time derivative [(I_nt kron Psi_s); (Dt kron I_ns)];
/// nt = 1 yields the spatial block only.
LinOpPtr gen_spacetime_derivative_operator(Index nx, Index ny, Index nt);

/// Two-level linear B-spline framelet analysis operator (masks
/// [1,2,1]/4, sqrt(2)/4*[1,0,-1], [-1,2,-1]/4) with reflexive boundary
/// handling so that W^T W = I. The 1D variant stacks the level-1 high-pass
/// channels followed by the full bank applied to the level-1 low-pass.
LinOpPtr create_framelet_operator_1d(Index n, int levels = 2);

/// 2D analysis operator from the 9 separable channels; two-level form
/// expands the low-pass channel with the full bank again.
LinOpPtr create_framelet_operator(Index nx, Index ny, int levels = 2);

}  // namespace regulus
