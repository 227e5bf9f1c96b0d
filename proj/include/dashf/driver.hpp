#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dashf/model.hpp"
#include "dashf/sdp.hpp"

// Outer optimization drivers: the full alternating scheme (Dinkelbach loop
// around association and resource passes) and the comparison baselines.
namespace dashf::driver {

struct TraceRow {
  int iteration = 0;
  double y = 0.0;              // Dinkelbach ratio after the iteration
  double scr_value = 0.0;
  double obj_part1 = 0.0;      // Dinkelbach objective after the association pass
  double obj_part2 = 0.0;      // ... after the resource pass
  double delay_total = 0.0;
  double energy_total = 0.0;
  double service_total = 0.0;
  double wall_ms = 0.0;
};

struct RunTrace {
  std::vector<TraceRow> rows;
  // nondecreasing y within tolerance; guards stop a run before recording a
  // worse iterate
  bool y_monotone(double tol = 1e-8) const;
};

struct Solution {
  Allocation allocation;
  double scr_value = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct RunOptions {
  double epsilon = 1e-3;       // relative y-change stop
  int max_outer = 30;
  double sdp_tol = 1e-6;
  int sdp_max_iter = 50000;
  double part2_tol = 1e-6;
  int part2_max_outer = 20;
  std::uint64_t seed_offset = 0;  // stream offset for the randomized baseline
};

// Equal shares everywhere: cyclic association, caps for user-side variables,
// per-server caps split across all N users, split at one half.
Allocation initialize(const Scenario& scn);

// Equal split of each server's caps among its currently connected users;
// unconnected pairs keep cap/N standing offers.
Allocation equal_split_allocation(const Scenario& scn, const Eigen::MatrixXd& assoc, double split);

Eigen::MatrixXd greedy_association(const Scenario& scn);

// Full alternating scheme (association pass + resource pass per Dinkelbach
// iteration). Returns the best-seen allocation.
std::pair<Solution, RunTrace> run(const Scenario& scn, const RunOptions& opt = {});

// Baselines: random association + equal shares with split refit; greedy
// association + equal shares; equal shares with association optimization
// only; greedy association with resource optimization only.
std::pair<Solution, RunTrace> run_rucaa(const Scenario& scn, const RunOptions& opt = {});
std::pair<Solution, RunTrace> run_gucaa(const Scenario& scn, const RunOptions& opt = {});
std::pair<Solution, RunTrace> run_aauco(const Scenario& scn, const RunOptions& opt = {});
std::pair<Solution, RunTrace> run_gucro(const Scenario& scn, const RunOptions& opt = {});

// The full scheme with the association pass replaced by exhaustive search;
// desk-scale instances only.
std::pair<Solution, RunTrace> run_exact(const Scenario& scn, const RunOptions& opt = {});

// name in {dashf, rucaa, gucaa, aauco, gucro, oracle}
std::pair<Solution, RunTrace> run_algorithm(const std::string& name, const Scenario& scn,
                                            const RunOptions& opt = {});

}  // namespace dashf::driver
