#pragma once

#include <optional>

#include "regulus/factorizations.hpp"
#include "regulus/regparam.hpp"
#include "regulus/solve.hpp"
#include "regulus/types.hpp"

namespace regulus {

/// Spectral filter specification over an SVD or GSVD basis.
struct FilterSpec {
  enum class Kind { tsvd, tikhonov };
  enum class Basis { svd, gsvd };

  Kind kind = Kind::tikhonov;
  Basis basis = Basis::svd;
  int h = 0;          // tsvd truncation index
  double alpha = 0.0; // tikhonov parameter

  static FilterSpec tsvd(int h, Basis basis = Basis::svd) {
    FilterSpec s;
    s.kind = Kind::tsvd;
    s.h = h;
    s.basis = basis;
    return s;
  }
  static FilterSpec tikhonov(double alpha, Basis basis = Basis::svd) {
    FilterSpec s;
    s.kind = Kind::tikhonov;
    s.alpha = alpha;
    s.basis = basis;
    return s;
  }
};

/// Filter factors phi_i in [0,1] for the given (generalized) singular
/// values, supplied in descending order. tsvd: 1 for the h leading values,
/// 0 otherwise; tikhonov: s^2/(s^2 + alpha).
Vector filter_factors(const FilterSpec& spec, const Vector& svals);

/// Truncated-SVD solve; requires m >= n. The truncation index comes from
/// the selector (fixed h, discrepancy principle, or GCV).
SolveResult tsvd_solve(const Matrix& a, const Vector& b,
                       const RegSelector& selector);

/// Tikhonov solve in standard (psi absent) or general form, evaluated
/// through SVD/GSVD filter factors including the unregularized null-space
/// component.
SolveResult tikhonov_solve(const Matrix& a, const Vector& b,
                           const std::optional<Matrix>& psi,
                           const RegSelector& selector);

/// Truncated-GSVD solve; h counts retained (largest) generalized values.
SolveResult tgsvd_solve(const Matrix& a, const Vector& b, const Matrix& psi,
                        const RegSelector& selector);

/// Standard-form transformation built around the A-weighted generalized
/// pseudoinverse of Psi. Solving the transformed standard-form problem and
/// mapping back reproduces the general-form Tikhonov solution.
struct StdFormTransform {
  Matrix psi_a_pinv;  // n x k
  Matrix null_basis;  // n x (n-k), orthonormal basis W of null(Psi)
  Matrix aw;          // m x (n-k), A W
  Matrix aw_pinv;     // (n-k) x m, (A W)^+
  Matrix a_std;       // m x k, A * psi_a_pinv

  Vector null_component(const Vector& b) const;  // x0 = W (A W)^+ b
  Vector transformed_rhs(const Vector& b) const; // bbar = b - A x0
  Vector map_back(const Vector& z, const Vector& b) const;
};

StdFormTransform std_form_transform(const Matrix& a, const Matrix& psi);

}  // namespace regulus
