// Experiment runner: builds a test problem from a JSON config, runs the
// configured solvers, and writes metrics CSVs, solution vectors/images and
// problem metadata.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <mutex>
#include <semaphore>
#include <thread>

#include "regulus/csv.hpp"
#include "regulus/registry.hpp"
#include "regulus/solve.hpp"
#include "regulus/testproblems.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace regulus;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverSpec {
  std::string name;
  std::string label;  // output file key; disambiguates repeated solvers
  SolverParams params;
  bool dp_delta_explicit = false;
};

struct Experiment {
  TestProblem problem;
  std::vector<SolverSpec> solvers;
  std::string out_dir = "out";
  bool emit_history = true;
};

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

NoiseOpts parse_noise(const json& j, std::uint64_t seed_override,
                      bool have_seed_override) {
  NoiseOpts n;
  std::string kind = get_or<std::string>(j, "kind", "gaussian");
  if (kind == "gaussian")
    n = NoiseOpts::gaussian(get_or<double>(j, "level", 0.01));
  else if (kind == "laplace")
    n = NoiseOpts::laplace(get_or<double>(j, "level", 0.01));
  else if (kind == "impulse")
    n = NoiseOpts::impulse(get_or<double>(j, "fraction", 0.05));
  else
    throw ConfigError("problem.noise.kind: unknown kind '" + kind + "'");
  n.seed = get_or<std::uint64_t>(j, "seed", 0);
  if (have_seed_override) n.seed = seed_override;
  return n;
}

TestProblem parse_problem(const json& j, std::uint64_t seed_override,
                          bool have_seed_override) {
  if (!j.contains("type"))
    throw ConfigError("problem.type: required field is missing");
  std::string type = j.at("type").get<std::string>();
  NoiseOpts noise = parse_noise(j.value("noise", json::object()),
                                seed_override, have_seed_override);
  bool crime = get_or<bool>(j, "commit_crime", false);

  if (type == "deblur1d") {
    return deblur1d(get_or<Index>(j, "n", 200),
                    get_or<std::string>(j, "signal", "curve2"),
                    get_or<double>(j, "spread", 30.0), noise, crime);
  }
  if (type == "deblur2d") {
    auto win = get_or<std::vector<int>>(j, "window", {9, 9});
    auto spr = get_or<std::vector<double>>(j, "spreads", {3.0, 3.0});
    if (win.size() != 2 || spr.size() != 2)
      throw ConfigError("problem.window/spreads: expected two entries");
    return deblur2d(get_or<Index>(j, "nx", 64), get_or<Index>(j, "ny", 64),
                    get_or<std::string>(j, "image", "satellite"),
                    {win[0], win[1]}, {spr[0], spr[1]}, noise, crime);
  }
  if (type == "tomo") {
    return tomo(get_or<Index>(j, "nx", 64), get_or<Index>(j, "ny", 64),
                get_or<int>(j, "views", 50),
                get_or<std::string>(j, "phantom", "shepp"), noise, crime);
  }
  if (type == "dynamic_tomo") {
    AngleSchedule sched;
    sched.start_deg = get_or<double>(j, "angle_start", 0.0);
    sched.spacing_deg = get_or<double>(j, "angle_spacing", -1.0);
    sched.shift_deg = get_or<double>(j, "angle_shift", 1.0);
    return dynamic_tomo(get_or<Index>(j, "nx", 32), get_or<Index>(j, "ny", 32),
                        get_or<Index>(j, "nt", 8),
                        get_or<int>(j, "views_per_t", 10),
                        get_or<std::string>(j, "motion", "translating-disk"),
                        sched, noise);
  }
  throw ConfigError("problem.type: unknown type '" + type + "'");
}

RegSelector parse_selector(const json& j, size_t solver_idx) {
  std::string where = "solvers[" + std::to_string(solver_idx) + "].selector";
  std::string kind = get_or<std::string>(j, "kind", "gcv");
  if (kind == "fixed") {
    if (!j.contains("value"))
      throw ConfigError(where + ".value: required for fixed selector");
    return RegSelector::fixed(j.at("value").get<double>());
  }
  if (kind == "dp") {
    RegSelector s = RegSelector::dp(get_or<double>(j, "delta", 0.0),
                                    get_or<double>(j, "eta", 1.01));
    return s;
  }
  if (kind == "gcv") {
    std::string variant = get_or<std::string>(j, "variant", "default");
    if (variant == "default")
      return RegSelector::gcv();
    if (variant == "full")
      return RegSelector::gcv(RegSelector::GcvVariant::full);
    if (variant == "projected")
      return RegSelector::gcv(RegSelector::GcvVariant::projected);
    throw ConfigError(where + ".variant: unknown variant '" + variant + "'");
  }
  throw ConfigError(where + ".kind: unknown kind '" + kind + "'");
}

Experiment parse_config(const std::string& path, std::uint64_t seed_override,
                        bool have_seed_override,
                        const std::string& out_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }

  Experiment exp;
  if (!root.contains("problem"))
    throw ConfigError("problem: required section is missing");
  exp.problem =
      parse_problem(root.at("problem"), seed_override, have_seed_override);

  if (!root.contains("solvers") || !root.at("solvers").is_array() ||
      root.at("solvers").empty())
    throw ConfigError("solvers: a non-empty array is required");

  const auto& registry = solver_registry();
  size_t idx = 0;
  for (const auto& js : root.at("solvers")) {
    SolverSpec spec;
    std::string where = "solvers[" + std::to_string(idx) + "]";
    if (!js.contains("name"))
      throw ConfigError(where + ".name: required field is missing");
    spec.name = js.at("name").get<std::string>();
    bool known = std::any_of(registry.begin(), registry.end(),
                             [&](const SolverInfo& s) {
                               return s.key == spec.name;
                             });
    if (!known)
      throw ConfigError(where + ".name: unknown solver '" + spec.name + "'");
    spec.params.selector =
        parse_selector(js.value("selector", json::object()), idx);
    spec.dp_delta_explicit =
        js.contains("selector") && js.at("selector").contains("delta");
    spec.params.max_iters = get_or<int>(js, "max_iters", 0);
    spec.params.p = get_or<double>(js, "p", 2.0);
    spec.params.q = get_or<double>(js, "q", 1.0);
    spec.params.epsilon = get_or<double>(js, "epsilon", 1e-3);
    spec.params.init_dim = get_or<int>(js, "init_dim", 2);
    spec.params.psi = get_or<std::string>(js, "psi", "");
    spec.label = spec.name;
    int duplicates = 0;
    for (const auto& prev : exp.solvers)
      if (prev.name == spec.name) ++duplicates;
    if (duplicates > 0)
      spec.label += "_" + std::to_string(duplicates + 1);
    exp.solvers.push_back(std::move(spec));
    ++idx;
  }

  const json out = root.value("output", json::object());
  exp.out_dir = get_or<std::string>(out, "directory", "out");
  exp.emit_history = get_or<bool>(out, "emit_history", true);
  if (!out_override.empty()) exp.out_dir = out_override;
  return exp;
}

// ---------------------------------------------------------------------------
// Outputs

void write_metrics_csv(const std::string& final_path,
                       const std::string& solver,
                       const std::vector<IterRecord>& history,
                       bool emit_history) {
  const std::string tmp = final_path + ".tmp";
  {
    std::ofstream out(tmp);
    out << "solver,iteration,residual_norm,regparam,relative_error,wall_ms\n";
    auto emit = [&](const IterRecord& r) {
      out << solver << ',' << r.iteration << ','
          << format_full(r.residual_norm) << ',';
      if (r.regparam) out << format_full(*r.regparam);
      out << ',';
      if (r.relative_error) out << format_full(*r.relative_error);
      out << ',' << format_full(r.wall_ms) << "\n";
    };
    if (emit_history) {
      for (const auto& r : history) emit(r);
    } else if (!history.empty()) {
      emit(history.back());
    }
  }
  fs::rename(tmp, final_path);
}

void write_pgm16(const std::string& path, const Matrix& img, double lo,
                 double hi) {
  std::ofstream out(path, std::ios::binary);
  out << "P5\n" << img.rows() << " " << img.cols() << "\n65535\n";
  double span = hi > lo ? hi - lo : 1.0;
  // row-major scanlines, most significant byte first
  for (Index j = 0; j < img.cols(); ++j)
    for (Index i = 0; i < img.rows(); ++i) {
      double t = (img(i, j) - lo) / span;
      auto v = static_cast<unsigned>(std::lround(std::clamp(t, 0.0, 1.0) *
                                                 65535.0));
      unsigned char bytes[2] = {static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v & 0xFF)};
      out.write(reinterpret_cast<const char*>(bytes), 2);
    }
}

struct SolverOutcome {
  bool ok = false;
  std::string error;
  json pgm_mapping;  // per written image: min/max of the linear map
};

SolverOutcome run_one(const Experiment& exp, const SolverSpec& spec,
                      bool quiet) {
  SolverOutcome outcome;
  const TestProblem& prob = exp.problem;
  SolverParams params = spec.params;
  if (params.selector.kind == RegSelector::Kind::dp &&
      !spec.dp_delta_explicit)
    params.selector.delta = prob.delta;

  const std::string base = exp.out_dir + "/metrics_" + spec.label + ".csv";
  try {
    SolveResult res = run_solver(spec.name, prob, params);
    // direct solvers do not track the truth internally; fill in the error
    // of the returned solution
    if (prob.x_true && prob.x_true->norm() > 0 && !res.history.empty() &&
        !res.history.back().relative_error)
      res.history.back().relative_error =
          (res.x - *prob.x_true).norm() / prob.x_true->norm();
    write_metrics_csv(base, spec.label, res.history, exp.emit_history);
    write_vector_csv(exp.out_dir + "/solution_" + spec.label + ".csv", res.x);
    if (prob.ny > 1) {
      double lo = res.x.minCoeff(), hi = res.x.maxCoeff();
      outcome.pgm_mapping = {{"min", lo}, {"max", hi}};
      if (prob.nt > 1) {
        for (Index t = 0; t < prob.nt; ++t) {
          Matrix frame = Eigen::Map<const Matrix>(
              res.x.segment(t * prob.nx * prob.ny, prob.nx * prob.ny).data(),
              prob.nx, prob.ny);
          write_pgm16(exp.out_dir + "/solution_" + spec.label + "_t" +
                          std::to_string(t) + ".pgm",
                      frame, lo, hi);
        }
      } else {
        Matrix img =
            Eigen::Map<const Matrix>(res.x.data(), prob.nx, prob.ny);
        write_pgm16(exp.out_dir + "/solution_" + spec.label + ".pgm", img, lo,
                    hi);
      }
    }
    if (!quiet) {
      std::printf("%-14s iters=%3zu residual=%.6g", spec.label.c_str(),
                  res.history.size(),
                  res.history.empty() ? 0.0
                                      : res.history.back().residual_norm);
      if (!res.history.empty() && res.history.back().relative_error)
        std::printf(" rel_err=%.4f", *res.history.back().relative_error);
      std::printf("\n");
    }
    outcome.ok = true;
  } catch (const std::exception& e) {
    outcome.error = e.what();
    // keep whatever was flushed, marked as partial
    if (fs::exists(base + ".tmp")) fs::rename(base + ".tmp", base + ".partial");
  }
  return outcome;
}

int worker_cap() {
  if (const char* env = std::getenv("REGULUS_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

int cmd_run(const std::string& config, std::uint64_t seed, bool have_seed,
            const std::string& out_override, bool quiet) {
  Experiment exp;
  try {
    exp = parse_config(config, seed, have_seed, out_override);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }
  fs::create_directories(exp.out_dir);

  // Independent solver runs; REGULUS_THREADS caps concurrency (0 = auto).
  const int cap = std::max(1, worker_cap());
  std::counting_semaphore<256> slots(std::min(cap, 256));
  std::vector<std::future<SolverOutcome>> futures;
  for (const auto& spec : exp.solvers) {
    futures.push_back(std::async(std::launch::async, [&exp, &spec, &slots,
                                                      quiet] {
      slots.acquire();
      SolverOutcome o = run_one(exp, spec, quiet);
      slots.release();
      return o;
    }));
  }

  json meta;
  bool any_failed = false;
  json mappings = json::object();
  for (size_t i = 0; i < futures.size(); ++i) {
    SolverOutcome o = futures[i].get();
    if (!o.ok) {
      any_failed = true;
      std::fprintf(stderr, "solver '%s' failed: %s\n",
                   exp.solvers[i].label.c_str(), o.error.c_str());
    } else if (!o.pgm_mapping.is_null()) {
      mappings[exp.solvers[i].label] = o.pgm_mapping;
    }
  }

  // problem metadata + image mappings
  {
    const TestProblem& prob = exp.problem;
    meta["type"] = prob.type;
    meta["dims"] = {{"nx", prob.nx}, {"ny", prob.ny}, {"nt", prob.nt}};
    if (prob.geometry) meta["angles"] = prob.geometry->angles;
    if (!prob.angles_per_frame.empty())
      meta["angles"] = prob.angles_per_frame;
    if (prob.psf)
      meta["psf"] = {{"window", {prob.psf->w1, prob.psf->w2}},
                     {"spreads", {prob.psf->beta1, prob.psf->beta2}}};
    meta["noise"] = {{"kind", prob.noise.kind_name()},
                     {"level", prob.noise.level},
                     {"seed", prob.noise.seed},
                     {"delta", prob.delta}};
    meta["commit_crime"] = prob.commit_crime;
    if (!mappings.empty()) meta["pgm_mapping"] = mappings;
    std::ofstream out(exp.out_dir + "/problem.json");
    out << meta.dump(2) << "\n";
  }
  return any_failed ? 1 : 0;
}

int cmd_export(const std::string& config, const std::string& dir,
               std::uint64_t seed, bool have_seed) {
  Experiment exp;
  try {
    exp = parse_config(config, seed, have_seed, "");
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }
  export_problem_bundle(exp.problem, dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"regulus - solvers and test problems for linear discrete "
               "ill-posed inverse problems"};
  app.require_subcommand(1);

  std::string config_path, out_dir, export_dir;
  std::uint64_t seed = 0;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "run the solvers in a config");
  run->add_option("config", config_path, "experiment config (JSON)")
      ->required();
  auto* seed_opt = run->add_option("--seed", seed, "override the noise seed");
  run->add_option("--out", out_dir, "override the output directory");
  run->add_flag("--quiet", quiet, "suppress per-solver progress lines");

  auto* ls = app.add_subcommand("list-solvers", "print the solver catalog");

  auto* ex = app.add_subcommand("export-problem",
                                "generate and export a problem bundle");
  ex->add_option("config", config_path, "experiment config (JSON)")
      ->required();
  ex->add_option("dir", export_dir, "output directory")->required();
  auto* seed_opt2 = ex->add_option("--seed", seed, "override the noise seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(config_path, seed, seed_opt->count() > 0, out_dir,
                     quiet);
    if (ls->parsed()) {
      std::printf("%s", list_solvers_table().c_str());
      return 0;
    }
    if (ex->parsed())
      return cmd_export(config_path, export_dir, seed,
                        seed_opt2->count() > 0);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
