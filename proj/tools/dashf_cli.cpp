// Command-line front end: scenario generation, single-algorithm solves,
// five-way comparisons and parameter sweeps, all emitting versioned
// JSON/CSV/SVG artifacts.
#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "dashf/driver.hpp"
#include "dashf/experiment.hpp"
#include "dashf/oracle.hpp"
#include "dashf/scenario.hpp"

namespace fs = std::filesystem;
using namespace dashf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNonconverged = 4;

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

int cmd_generate(const std::string& config_path, std::uint64_t seed, bool seed_set,
                 const std::string& out) {
  ScenarioConfig cfg;
  try {
    if (!config_path.empty()) cfg = config_from_json(slurp(config_path));
    if (seed_set) cfg.seed = seed;
    const Scenario scn = generate(cfg);
    save_scenario(scn, out);
  } catch (const SchemaError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  std::cout << "wrote " << out << "\n";
  return kExitOk;
}

int cmd_solve(const std::string& scenario_path, const std::string& algorithm, double epsilon,
              const std::string& out_dir) {
  Scenario scn;
  try {
    scn = load_scenario(scenario_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  driver::RunOptions opt;
  opt.epsilon = epsilon;
  driver::Solution sol;
  driver::RunTrace trace;
  try {
    std::tie(sol, trace) = driver::run_algorithm(algorithm, scn, opt);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitNonconverged;
  }
  const auto violations = check_feasibility(scn, sol.allocation);
  fs::create_directories(out_dir);
  const std::string hash = scenario_hash_hex(scn);
  experiment::write_solution_json(out_dir + "/solution_" + algorithm + ".json", hash, algorithm,
                                  sol);
  experiment::write_trace_csv(out_dir + "/trace_" + algorithm + ".csv", hash, trace);
  std::cout << "algorithm=" << algorithm << " scr=" << sol.scr_value
            << " iterations=" << sol.iterations << " converged=" << (sol.converged ? "yes" : "no")
            << "\n";
  if (!violations.empty()) {
    std::cerr << "infeasible solution:";
    for (const auto& v : violations) std::cerr << " " << v.describe() << ";";
    std::cerr << "\n";
    return kExitInfeasible;
  }
  if (!sol.converged) {
    std::cerr << "did not converge within the iteration budget\n";
    return kExitNonconverged;
  }
  return kExitOk;
}

int cmd_compare(const std::string& scenario_path, double epsilon, const std::string& out_dir) {
  Scenario scn;
  try {
    scn = load_scenario(scenario_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  driver::RunOptions opt;
  opt.epsilon = epsilon;
  const auto rows = experiment::run_compare(scn, opt);
  fs::create_directories(out_dir);
  const std::string hash = scenario_hash_hex(scn);
  experiment::write_comparison_csv(out_dir + "/comparison.csv", hash, rows);
  experiment::write_compare_svg(out_dir + "/comparison.svg", rows);
  bool any_failed = false;
  for (const auto& r : rows) {
    std::cout << r.algorithm << " scr=" << r.scr << " status=" << r.status << "\n";
    if (!r.ok) any_failed = true;
  }
  return any_failed ? kExitNonconverged : kExitOk;
}

int cmd_sweep(const std::string& spec_path, int jobs, const std::string& out_dir) {
  experiment::ExperimentSpec spec;
  try {
    spec = experiment::spec_from_json(slurp(spec_path));
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  const auto rows = experiment::run_sweep(spec, jobs);
  fs::create_directories(out_dir);
  // hash of the spec's base config stamps the outputs
  const Scenario base = generate(spec.base_config);
  experiment::write_sweep_csv(out_dir + "/sweep.csv", scenario_hash_hex(base), rows);
  experiment::write_sweep_svg(out_dir + "/sweep.svg", rows,
                              spec.axis == "weights" ? "delay weight" : "total bandwidth (Hz)");
  std::size_t ok = 0;
  for (const auto& r : rows)
    if (r.ok) ++ok;
  std::cout << "sweep rows: " << rows.size() << " ok: " << ok << "\n";
  return ok > 0 ? kExitOk : kExitNonconverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"service-cost ratio optimizer for collaborative adapter training at the edge"};
  app.require_subcommand(1);

  std::string config_path, scenario_path, spec_path, out, algorithm = "dashf";
  std::uint64_t seed = 0;
  double epsilon = 1e-3;
  int jobs = 1;

  auto* gen = app.add_subcommand("generate", "generate a scenario file");
  gen->add_option("--config", config_path, "scenario config JSON (defaults when omitted)");
  auto* seed_opt = gen->add_option("--seed", seed, "override the config seed");
  gen->add_option("--out", out, "output scenario path")->required();

  auto* solve = app.add_subcommand("solve", "run one algorithm on a scenario");
  solve->add_option("--scenario", scenario_path, "scenario JSON")->required();
  solve->add_option("--algorithm", algorithm, "dashf|rucaa|gucaa|aauco|gucro|oracle");
  solve->add_option("--epsilon", epsilon, "relative y-change stop (default 1e-3)");
  solve->add_option("--out", out, "output directory")->required();

  auto* compare = app.add_subcommand("compare", "run all five algorithms");
  compare->add_option("--scenario", scenario_path, "scenario JSON")->required();
  compare->add_option("--epsilon", epsilon, "relative y-change stop");
  compare->add_option("--out", out, "output directory")->required();

  auto* sweep = app.add_subcommand("sweep", "run an experiment spec");
  sweep->add_option("--spec", spec_path, "experiment spec JSON")->required();
  sweep->add_option("--jobs", jobs, "worker threads (default 1)");
  sweep->add_option("--out", out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(config_path, seed, seed_opt->count() > 0, out);
    if (solve->parsed()) return cmd_solve(scenario_path, algorithm, epsilon, out);
    if (compare->parsed()) return cmd_compare(scenario_path, epsilon, out);
    if (sweep->parsed()) return cmd_sweep(spec_path, jobs, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
