#include "dashf/driver.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "dashf/association.hpp"
#include "dashf/oracle.hpp"
#include "dashf/resources.hpp"
#include "dashf/scenario.hpp"

namespace dashf::driver {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double realized_delay_bound(const Scenario& scn, const Allocation& a) {
  return evaluate(scn, a).delay_total;
}

TraceRow make_row(const Scenario& scn, const Allocation& a, int iter, double y, double obj1,
                  double obj2, double wall_ms) {
  const CostBreakdown c = evaluate(scn, a);
  TraceRow row;
  row.iteration = iter;
  row.y = y;
  row.scr_value = scr(c, scn.weight_delay, scn.weight_energy);
  row.obj_part1 = obj1;
  row.obj_part2 = obj2;
  row.delay_total = c.delay_total;
  row.energy_total = c.energy_total;
  row.service_total = c.service_total;
  row.wall_ms = wall_ms;
  return row;
}

// Scale a server's connected entries down when a fresh association overloads
// its caps with the carried-over per-pair values.
void repair_caps(const Scenario& scn, Allocation& a) {
  for (int m = 0; m < scn.n_servers(); ++m) {
    double b = 0.0, p = 0.0, f = 0.0;
    for (int n = 0; n < scn.n_users(); ++n) {
      if (a.assoc(n, m) == 0.0) continue;
      b += a.bandwidth(n, m);
      p += a.server_power(n, m);
      f += a.server_speed(n, m);
    }
    const ServerProfile& s = scn.servers[m];
    auto rescale = [&](Eigen::MatrixXd& mat, double sum, double cap) {
      if (sum <= cap) return;
      const double factor = cap / sum;
      for (int n = 0; n < scn.n_users(); ++n)
        if (a.assoc(n, m) != 0.0) mat(n, m) *= factor;
    };
    rescale(a.bandwidth, b, s.bandwidth_max);
    rescale(a.server_power, p, s.tx_power_max);
    rescale(a.server_speed, f, s.gpu_speed_max);
  }
}

// One association pass: SDR + rounding against the incumbent, both refit;
// whichever scores better on the Dinkelbach objective wins.
struct Part1Out {
  Allocation alloc;
  double objective = 0.0;   // Dinkelbach (maximization) value at y
  bool used_relaxation = false;
};

Allocation candidate_with(const Scenario& scn, const Allocation& base, const Eigen::MatrixXd& x,
                          double y) {
  Allocation cand = base;
  cand.assoc = x;
  repair_caps(scn, cand);
  const assoc::QcqpCoeffs coeffs = assoc::build_coeffs(scn, cand, y);
  const assoc::SplitRefit refit = assoc::refit_split(x, coeffs);
  cand.split = refit.split;
  cand.delay_bound = refit.delay_bound;
  return cand;
}

Part1Out part1_pass(const Scenario& scn, const Allocation& current, double y, const RunOptions& opt,
                    sdp::Solution* warm) {
  Part1Out out;
  Allocation incumbent = candidate_with(scn, current, current.assoc, y);
  double best_val = dinkelbach_objective(scn, incumbent, y);
  out.alloc = incumbent;

  try {
    const assoc::QcqpCoeffs coeffs = assoc::build_coeffs(scn, current, y);
    const assoc::HomogenizedSdr sdr = assoc::build_sdr(coeffs, scn, current);
    const assoc::RelaxationResult rel =
        assoc::solve_relaxation(sdr, opt.sdp_tol, opt.sdp_max_iter, warm);
    if (warm) *warm = rel.raw;
    if (!rel.infeasible && rel.s_matrix.size() > 0) {
      const Eigen::MatrixXd x = assoc::round_association(rel.s_matrix, scn.n_users(), scn.n_servers());
      Allocation cand = candidate_with(scn, current, x, y);
      const double val = dinkelbach_objective(scn, cand, y);
      out.used_relaxation = true;
      if (val > best_val) {
        best_val = val;
        out.alloc = cand;
      }
    }
  } catch (const std::exception&) {
    // fall back to the incumbent association
  }
  out.objective = best_val;
  return out;
}

struct Part2Out {
  Allocation alloc;
  double objective = 0.0;
};

Part2Out part2_pass(const Scenario& scn, const Allocation& start, double y, const RunOptions& opt) {
  const resources::ResourceVars vars0 = resources::from_allocation(scn, start);
  const resources::Part2Result res = resources::solve_part2(
      scn, start.assoc, start.split, y, vars0, opt.part2_tol, opt.part2_max_outer);
  Allocation cand = resources::to_allocation(scn, start.assoc, start.split, res.vars);
  cand.delay_bound = realized_delay_bound(scn, cand);
  Part2Out out;
  const double val = dinkelbach_objective(scn, cand, y);
  const double base = dinkelbach_objective(scn, start, y);
  if (val >= base) {
    out.alloc = cand;
    out.objective = val;
  } else {
    out.alloc = start;
    out.objective = base;
  }
  return out;
}

}  // namespace

bool RunTrace::y_monotone(double tol) const {
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].y < rows[i - 1].y * (1.0 - tol) - tol) return false;
  return true;
}

Allocation initialize(const Scenario& scn) {
  const int N = scn.n_users();
  const int M = scn.n_servers();
  Allocation a;
  a.assoc = Eigen::MatrixXd::Zero(N, M);
  for (int n = 0; n < N; ++n) a.assoc(n, n % M) = 1.0;
  a.split = Eigen::VectorXd::Constant(N, 0.5);
  a.bandwidth.resize(N, M);
  a.server_power.resize(N, M);
  a.server_speed.resize(N, M);
  a.user_power.resize(N);
  a.user_speed.resize(N);
  for (int n = 0; n < N; ++n) {
    a.user_power(n) = scn.users[n].tx_power_max;
    a.user_speed(n) = scn.users[n].gpu_speed_max;
    for (int m = 0; m < M; ++m) {
      a.bandwidth(n, m) = scn.servers[m].bandwidth_max / N;
      a.server_power(n, m) = scn.servers[m].tx_power_max / N;
      a.server_speed(n, m) = scn.servers[m].gpu_speed_max / N;
    }
  }
  a.delay_bound = realized_delay_bound(scn, a);
  return a;
}

Allocation equal_split_allocation(const Scenario& scn, const Eigen::MatrixXd& assoc, double split) {
  const int N = scn.n_users();
  const int M = scn.n_servers();
  Allocation a;
  a.assoc = assoc;
  a.split = Eigen::VectorXd::Constant(N, split);
  a.bandwidth.resize(N, M);
  a.server_power.resize(N, M);
  a.server_speed.resize(N, M);
  a.user_power.resize(N);
  a.user_speed.resize(N);
  Eigen::VectorXd count = assoc.colwise().sum();
  for (int n = 0; n < N; ++n) {
    a.user_power(n) = scn.users[n].tx_power_max;
    a.user_speed(n) = scn.users[n].gpu_speed_max;
    for (int m = 0; m < M; ++m) {
      const double share = assoc(n, m) != 0.0 ? std::max(count(m), 1.0) : static_cast<double>(N);
      a.bandwidth(n, m) = scn.servers[m].bandwidth_max / share;
      a.server_power(n, m) = scn.servers[m].tx_power_max / share;
      a.server_speed(n, m) = scn.servers[m].gpu_speed_max / share;
    }
  }
  a.delay_bound = realized_delay_bound(scn, a);
  return a;
}

Eigen::MatrixXd greedy_association(const Scenario& scn) {
  const int N = scn.n_users();
  const int M = scn.n_servers();
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(N, M);
  std::vector<int> load(M, 0);
  for (int n = 0; n < N; ++n) {
    int best = 0;
    for (int m = 1; m < M; ++m)
      if (load[m] < load[best]) best = m;
    x(n, best) = 1.0;
    ++load[best];
  }
  return x;
}

std::pair<Solution, RunTrace> run(const Scenario& scn, const RunOptions& opt) {
  const auto t0 = Clock::now();
  Allocation alloc = initialize(scn);
  double y = scr(scn, alloc);
  RunTrace trace;
  trace.rows.push_back(make_row(scn, alloc, 0, y, 0.0, 0.0, ms_since(t0)));

  Solution best;
  best.allocation = alloc;
  best.scr_value = y;
  sdp::Solution warm;
  bool converged = false;
  int iter = 0;
  for (iter = 1; iter <= opt.max_outer && !converged; ++iter) {
    const Part1Out p1 = part1_pass(scn, alloc, y, opt, &warm);
    const Part2Out p2 = part2_pass(scn, p1.alloc, y, opt);
    const double y_new = scr(scn, p2.alloc);
    alloc = p2.alloc;
    trace.rows.push_back(make_row(scn, alloc, iter, y_new, p1.objective, p2.objective, ms_since(t0)));
    if (y_new > best.scr_value) {
      best.allocation = alloc;
      best.scr_value = y_new;
    }
    converged = (y_new / y - 1.0) <= opt.epsilon;
    if (y_new < y * (1.0 - 1e-10)) break;  // guarded subproblems should never regress
    y = y_new;
  }
  best.converged = converged;
  best.iterations = static_cast<int>(trace.rows.size()) - 1;
  return {best, trace};
}

namespace {

// Dinkelbach loop over the split refit only, for baselines with frozen
// association and resources.
std::pair<Solution, RunTrace> refit_only_loop(const Scenario& scn, Allocation alloc,
                                              const RunOptions& opt) {
  const auto t0 = Clock::now();
  double y = scr(scn, alloc);
  RunTrace trace;
  trace.rows.push_back(make_row(scn, alloc, 0, y, 0.0, 0.0, ms_since(t0)));
  Solution best;
  best.allocation = alloc;
  best.scr_value = y;
  bool converged = false;
  for (int iter = 1; iter <= opt.max_outer && !converged; ++iter) {
    const assoc::QcqpCoeffs coeffs = assoc::build_coeffs(scn, alloc, y);
    const assoc::SplitRefit refit = assoc::refit_split(alloc.assoc, coeffs);
    Allocation cand = alloc;
    cand.split = refit.split;
    cand.delay_bound = refit.delay_bound;
    const double obj = dinkelbach_objective(scn, cand, y);
    const double y_new = scr(scn, cand);
    if (y_new < y) break;
    alloc = cand;
    trace.rows.push_back(make_row(scn, alloc, iter, y_new, obj, obj, ms_since(t0)));
    if (y_new > best.scr_value) {
      best.allocation = alloc;
      best.scr_value = y_new;
    }
    converged = (y_new / y - 1.0) <= opt.epsilon;
    y = y_new;
  }
  best.converged = converged;
  best.iterations = static_cast<int>(trace.rows.size()) - 1;
  return {best, trace};
}

}  // namespace

std::pair<Solution, RunTrace> run_rucaa(const Scenario& scn, const RunOptions& opt) {
  // the scenario hash seeds the baseline's own stream, offset by the caller
  Rng rng(scenario_hash(scn) ^ 0x52554341ULL ^ opt.seed_offset);
  const int N = scn.n_users();
  const int M = scn.n_servers();
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(N, M);
  for (int n = 0; n < N; ++n) x(n, rng.uniform_int(M)) = 1.0;
  return refit_only_loop(scn, equal_split_allocation(scn, x, 0.5), opt);
}

std::pair<Solution, RunTrace> run_gucaa(const Scenario& scn, const RunOptions& opt) {
  const auto t0 = Clock::now();
  (void)opt;
  Allocation alloc = equal_split_allocation(scn, greedy_association(scn), 0.5);
  const double y = scr(scn, alloc);
  RunTrace trace;
  trace.rows.push_back(make_row(scn, alloc, 0, y, 0.0, 0.0, ms_since(t0)));
  Solution sol;
  sol.allocation = alloc;
  sol.scr_value = y;
  sol.converged = true;
  sol.iterations = 0;
  return {sol, trace};
}

std::pair<Solution, RunTrace> run_aauco(const Scenario& scn, const RunOptions& opt) {
  const auto t0 = Clock::now();
  Allocation alloc = initialize(scn);
  double y = scr(scn, alloc);
  RunTrace trace;
  trace.rows.push_back(make_row(scn, alloc, 0, y, 0.0, 0.0, ms_since(t0)));
  Solution best;
  best.allocation = alloc;
  best.scr_value = y;
  sdp::Solution warm;
  bool converged = false;
  for (int iter = 1; iter <= opt.max_outer && !converged; ++iter) {
    const Part1Out p1 = part1_pass(scn, alloc, y, opt, &warm);
    // servers re-split their caps equally for the fresh association
    Allocation cand = equal_split_allocation(scn, p1.alloc.assoc, 0.5);
    cand.split = p1.alloc.split;
    cand.delay_bound = realized_delay_bound(scn, cand);
    const double y_new = scr(scn, cand);
    if (y_new < y) break;  // re-splitting is not an ascent step; stop at best
    alloc = cand;
    trace.rows.push_back(make_row(scn, alloc, iter, y_new, p1.objective, p1.objective, ms_since(t0)));
    if (y_new > best.scr_value) {
      best.allocation = alloc;
      best.scr_value = y_new;
    }
    converged = (y_new / y - 1.0) <= opt.epsilon;
    y = y_new;
  }
  best.converged = converged;
  best.iterations = static_cast<int>(trace.rows.size()) - 1;
  return {best, trace};
}

std::pair<Solution, RunTrace> run_gucro(const Scenario& scn, const RunOptions& opt) {
  const auto t0 = Clock::now();
  Allocation alloc = equal_split_allocation(scn, greedy_association(scn), 0.5);
  double y = scr(scn, alloc);
  RunTrace trace;
  trace.rows.push_back(make_row(scn, alloc, 0, y, 0.0, 0.0, ms_since(t0)));
  Solution best;
  best.allocation = alloc;
  best.scr_value = y;
  bool converged = false;
  for (int iter = 1; iter <= opt.max_outer && !converged; ++iter) {
    const Part2Out p2 = part2_pass(scn, alloc, y, opt);
    const double y_new = scr(scn, p2.alloc);
    if (y_new < y) break;
    alloc = p2.alloc;
    trace.rows.push_back(make_row(scn, alloc, iter, y_new, p2.objective, p2.objective, ms_since(t0)));
    if (y_new > best.scr_value) {
      best.allocation = alloc;
      best.scr_value = y_new;
    }
    converged = (y_new / y - 1.0) <= opt.epsilon;
    y = y_new;
  }
  best.converged = converged;
  best.iterations = static_cast<int>(trace.rows.size()) - 1;
  return {best, trace};
}

std::pair<Solution, RunTrace> run_exact(const Scenario& scn, const RunOptions& opt) {
  const auto t0 = Clock::now();
  Allocation alloc = initialize(scn);
  double y = scr(scn, alloc);
  RunTrace trace;
  trace.rows.push_back(make_row(scn, alloc, 0, y, 0.0, 0.0, ms_since(t0)));
  Solution best;
  best.allocation = alloc;
  best.scr_value = y;
  bool converged = false;
  for (int iter = 1; iter <= opt.max_outer && !converged; ++iter) {
    const oracle::AssociationSearchResult bf = oracle::brute_force_association(scn, alloc, y);
    Allocation p1 = alloc;
    double obj1 = dinkelbach_objective(scn, alloc, y);
    if (bf.found) {
      Allocation cand = alloc;
      cand.assoc = bf.assoc;
      cand.split = bf.split;
      cand.delay_bound = bf.delay_bound;
      const double val = dinkelbach_objective(scn, cand, y);
      if (val > obj1) {
        p1 = cand;
        obj1 = val;
      }
    }
    const Part2Out p2 = part2_pass(scn, p1, y, opt);
    const double y_new = scr(scn, p2.alloc);
    alloc = p2.alloc;
    trace.rows.push_back(make_row(scn, alloc, iter, y_new, obj1, p2.objective, ms_since(t0)));
    if (y_new > best.scr_value) {
      best.allocation = alloc;
      best.scr_value = y_new;
    }
    converged = (y_new / y - 1.0) <= opt.epsilon;
    if (y_new < y * (1.0 - 1e-10)) break;
    y = y_new;
  }
  best.converged = converged;
  best.iterations = static_cast<int>(trace.rows.size()) - 1;
  return {best, trace};
}

std::pair<Solution, RunTrace> run_algorithm(const std::string& name, const Scenario& scn,
                                            const RunOptions& opt) {
  if (name == "dashf") return run(scn, opt);
  if (name == "rucaa") return run_rucaa(scn, opt);
  if (name == "gucaa") return run_gucaa(scn, opt);
  if (name == "aauco") return run_aauco(scn, opt);
  if (name == "gucro") return run_gucro(scn, opt);
  if (name == "oracle") return run_exact(scn, opt);
  throw std::invalid_argument("unknown algorithm: " + name);
}

}  // namespace dashf::driver
