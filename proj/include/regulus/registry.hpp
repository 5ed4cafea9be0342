#pragma once

#include <string>
#include <vector>

#include "regulus/solve.hpp"
#include "regulus/testproblems.hpp"

namespace regulus {

struct SolverInfo {
  std::string key;          // config/lookup name
  std::string display;      // catalog name
  std::string description;
  std::string selectors;    // supported parameter/stopping rules
};

/// The solver catalog: 14 entries spanning direct filtering, standard
/// Krylov, hybrid and generalized-Krylov methods.
const std::vector<SolverInfo>& solver_registry();

/// Formats the registry as a fixed-width text table.
std::string list_solvers_table();

/// Free-form per-solver knobs, normally parsed from an experiment config.
struct SolverParams {
  RegSelector selector = RegSelector::gcv();
  int max_iters = 0;       // 0 = solver default
  double p = 2.0;
  double q = 1.0;
  double epsilon = 1e-3;
  int init_dim = 2;
  // derivative | identity; empty picks the solver default (identity for
  // tikhonov, derivative for tgsvd/gks/mmgks)
  std::string psi;
};

/// Runs the named solver on a generated problem. Throws ParameterError for
/// unknown keys and whatever the solver itself throws on bad setups.
SolveResult run_solver(const std::string& key, const TestProblem& prob,
                       const SolverParams& params);

}  // namespace regulus
