#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dashf/driver.hpp"
#include "dashf/scenario.hpp"

// Batch experiment harness behind the command-line tool: algorithm
// comparisons on one scenario and parameter sweeps over regenerated
// scenarios, with CSV as the canonical output and self-contained SVG charts
// as a convenience.
namespace dashf::experiment {

inline constexpr const char* kToolVersion = "0.1.0";

extern const std::vector<std::string> kAllAlgorithms;  // dashf and the baselines

struct CompareRow {
  std::string algorithm;
  bool ok = false;
  std::string status;  // "ok" or the failure reason
  double scr = 0.0;
  double delay_total = 0.0;
  double energy_total = 0.0;
  double service_total = 0.0;
};

std::vector<CompareRow> run_compare(const Scenario& scn, const driver::RunOptions& opt,
                                    const std::vector<std::string>& algorithms = kAllAlgorithms);

// Sweep axes: none (single point), per-server bandwidth, or cost-weight pairs.
struct SweepPoint {
  double bandwidth_hz = 0.0;           // bandwidth axis
  double weight_delay = 0.0, weight_energy = 0.0;  // weights axis
  std::string label;                   // stable identifier used in outputs
};

struct ExperimentSpec {
  ScenarioConfig base_config;
  std::vector<std::string> algorithms = kAllAlgorithms;
  std::string axis = "none";           // none | b_max | weights
  std::vector<SweepPoint> points;
  std::vector<std::uint64_t> seeds{1};
  double epsilon = 1e-3;
};

ExperimentSpec spec_from_json(const std::string& text);
std::string spec_to_json(const ExperimentSpec& spec);

struct SweepRow {
  std::string algorithm;
  std::string point_label;
  double point_value = 0.0;            // numeric axis position for charts
  std::string seed;                    // seed number, or "mean"
  bool ok = false;
  std::string status;
  double scr = 0.0;
  double delay_total = 0.0;
  double energy_total = 0.0;
  double service_total = 0.0;
};

// Runs every (point, seed, algorithm) combination in a worker pool and
// appends per-(algorithm, point) mean rows. Rows are ordered deterministically
// regardless of worker completion order.
std::vector<SweepRow> run_sweep(const ExperimentSpec& spec, int jobs = 1);

// CSV writers; every file carries a scenario-hash/tool-version header comment
// and is written atomically (temp file + rename).
void write_trace_csv(const std::string& path, const std::string& scenario_hash,
                     const driver::RunTrace& trace);
void write_comparison_csv(const std::string& path, const std::string& scenario_hash,
                          const std::vector<CompareRow>& rows);
void write_sweep_csv(const std::string& path, const std::string& config_hash,
                     const std::vector<SweepRow>& rows);
void write_solution_json(const std::string& path, const std::string& scenario_hash,
                         const std::string& algorithm, const driver::Solution& sol);

void write_compare_svg(const std::string& path, const std::vector<CompareRow>& rows);
void write_sweep_svg(const std::string& path, const std::vector<SweepRow>& rows,
                     const std::string& x_label);

std::string format_double(double v);   // shortest round-trip decimal
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace dashf::experiment
