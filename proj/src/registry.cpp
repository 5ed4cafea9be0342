#include "regulus/registry.hpp"

#include <algorithm>
#include <sstream>

#include "regulus/direct.hpp"
#include "regulus/gks.hpp"
#include "regulus/krylov.hpp"
#include "regulus/regularizers.hpp"

namespace regulus {

const std::vector<SolverInfo>& solver_registry() {
  static const std::vector<SolverInfo> table = {
      {"tsvd", "TSVD", "Truncated SVD", "fixed h, dp, gcv"},
      {"tgsvd", "TGSVD", "Truncated GSVD", "fixed h, dp, gcv"},
      {"tikhonov", "Tikhonov", "Tikhonov regularization",
       "fixed alpha, dp, gcv"},
      {"cgls", "CGLS", "Conjugate Gradient Least Squares",
       "dp stop, fixed damping"},
      {"gmres", "GMRES", "Generalized Minimal Residual", "dp stop"},
      {"hybrid_lsqr", "Hybrid_LSQR", "Hybrid LSQR", "fixed alpha, dp, gcv"},
      {"hybrid_gmres", "Hybrid_GMRES", "Hybrid GMRES",
       "fixed alpha, dp, gcv"},
      {"gk_tikhonov", "GK_Tikhonov", "Golub-Kahan-Tikhonov",
       "fixed alpha, dp, gcv"},
      {"a_tikhonov", "A_Tikhonov", "Arnoldi-Tikhonov",
       "fixed alpha, dp, gcv"},
      {"gks", "GKS", "Generalized Krylov Subspace (GKS)",
       "fixed alpha, dp, gcv"},
      {"mmgks", "MMGKS", "Majorization minimization with GKS",
       "fixed alpha, dp, gcv"},
      {"anisotv", "AnisoTV", "Anisotropic Total Variation",
       "fixed alpha, dp, gcv"},
      {"isotv", "IsoTV", "Isotropic Total Variation", "fixed alpha, dp, gcv"},
      {"gs", "GS", "Group Sparsity", "fixed alpha, dp, gcv"},
  };
  return table;
}

std::string list_solvers_table() {
  std::ostringstream out;
  out << "Solver        Description                              Selectors\n";
  out << "------------  ---------------------------------------  "
         "----------------------\n";
  for (const auto& s : solver_registry()) {
    out << s.display;
    for (size_t i = s.display.size(); i < 14; ++i) out << ' ';
    out << s.description;
    for (size_t i = s.description.size(); i < 41; ++i) out << ' ';
    out << s.selectors << "\n";
  }
  return out.str();
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

LinOpPtr pick_psi(const TestProblem& prob, const std::string& psi_kind) {
  if (psi_kind == "identity") return identity_op(prob.A->cols());
  if (psi_kind == "derivative") {
    ProblemDims dims{prob.nx, prob.ny, prob.nt};
    return aniso_tv_operator(dims);
  }
  throw ParameterError("unknown psi choice '" + psi_kind + "'");
}

}  // namespace

SolveResult run_solver(const std::string& key, const TestProblem& prob,
                       const SolverParams& params) {
  const std::string k = lower(key);
  const LinOp& a = *prob.A;
  const Vector& b = prob.b;

  IterConfig cfg;
  cfg.max_iters = params.max_iters;
  cfg.selector = params.selector;
  cfg.x_true = prob.x_true;

  ProblemDims dims{prob.nx, prob.ny, prob.nt};

  if (k == "tsvd" || k == "tgsvd" || k == "tikhonov") {
    Matrix dense = a.to_dense();
    if (k == "tsvd") return tsvd_solve(dense, b, params.selector);
    if (k == "tikhonov") {
      std::optional<Matrix> psi;  // standard form unless asked otherwise
      if (!params.psi.empty() && params.psi != "identity")
        psi = pick_psi(prob, params.psi)->to_dense();
      return tikhonov_solve(dense, b, psi, params.selector);
    }
    std::string kind = params.psi.empty() ? "derivative" : params.psi;
    Matrix psi = pick_psi(prob, kind)->to_dense();
    return tgsvd_solve(dense, b, psi, params.selector);
  }
  if (k == "cgls") return cgls(a, b, cfg);
  if (k == "gmres") return gmres(a, b, cfg);
  if (k == "lsqr") return lsqr(a, b, cfg);
  if (k == "hybrid_lsqr") return hybrid_lsqr(a, b, cfg);
  if (k == "hybrid_gmres") return hybrid_gmres(a, b, cfg);
  if (k == "gk_tikhonov") return gk_tikhonov(a, b, cfg);
  if (k == "a_tikhonov") return arnoldi_tikhonov(a, b, cfg);
  const std::string psi_kind = params.psi.empty() ? "derivative" : params.psi;
  if (k == "gks") {
    LinOpPtr psi = pick_psi(prob, psi_kind);
    return gks(a, b, *psi, cfg, params.init_dim);
  }
  if (k == "mmgks") {
    LinOpPtr psi = pick_psi(prob, psi_kind);
    return mmgks(a, b, *psi, params.p, params.q, params.epsilon, cfg,
                 params.init_dim);
  }
  if (k == "anisotv")
    return driver_aniso_tv(a, b, dims, cfg, params.epsilon, params.init_dim);
  if (k == "isotv")
    return driver_iso_tv(a, b, dims, cfg, params.epsilon, params.init_dim);
  if (k == "gs")
    return driver_group_sparsity(a, b, dims, cfg, params.epsilon,
                                 params.init_dim);
  throw ParameterError("unknown solver '" + key + "'");
}

}  // namespace regulus
