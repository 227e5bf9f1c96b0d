#include "dashf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace dashf::oracle {

namespace {

// rate and score recomputed locally so oracle comparisons stay meaningful
double rate_of(double b, double p, double g, double s2) {
  if (b <= 0.0 || p <= 0.0) return 0.0;
  return b * std::log2(1.0 + g * p / (s2 * b));
}

double score_of(const Scenario& scn, int m, double ps, double fs, double b) {
  const ServerProfile& s = scn.servers[m];
  return scn.score_scale * std::log1p(scn.score_norm * (ps / s.tx_power_max +
                                                        fs / s.gpu_speed_max + b / s.bandwidth_max));
}

// per-pair ingredients of the part-1 objective as affine functions of phi
struct PairPieces {
  double score = 0.0;
  double energy_const = 0.0;   // energy at phi = 0 (server side)
  double energy_slope = 0.0;   // d(energy)/d(phi)
  double delay_const = 0.0;    // delay at phi = 0
  double delay_slope = 0.0;    // d(delay)/d(phi)
};

PairPieces pair_pieces(const Scenario& scn, const Allocation& res, int n, int m) {
  const UserProfile& u = scn.users[n];
  const ServerProfile& s = scn.servers[m];
  const double bits = u.adapter_params * scn.bits_per_param;
  const double work = u.adapter_params * u.flops_per_param;
  const double r_up = rate_of(res.bandwidth(n, m), res.user_power(n), scn.gain(n, m), scn.noise_psd);
  const double r_down =
      rate_of(res.bandwidth(n, m), res.server_power(n, m), scn.gain(n, m), scn.noise_psd);
  if (r_up <= 0.0 || r_down <= 0.0)
    throw std::invalid_argument("oracle: zero rate on a selectable pair");

  PairPieces p;
  p.score = score_of(scn, m, res.server_power(n, m), res.server_speed(n, m), res.bandwidth(n, m));
  const double e_local = u.epochs * u.switched_cap * work * res.user_speed(n) * res.user_speed(n);
  const double e_up = res.user_power(n) * bits / r_up;
  const double e_server =
      s.epochs * s.switched_cap * work * res.server_speed(n, m) * res.server_speed(n, m);
  const double e_down = res.server_power(n, m) * bits / r_down;
  p.energy_const = e_server + e_down;
  p.energy_slope = e_local + e_up - e_server - e_down;

  const double t_local = work * u.epochs / res.user_speed(n);
  const double t_up = bits / r_up;
  const double t_server = work * s.epochs / res.server_speed(n, m);
  const double t_down = bits / r_down;
  p.delay_const = t_server + t_down;
  p.delay_slope = t_local + t_up - t_server - t_down;
  return p;
}

bool caps_ok(const Scenario& scn, const Allocation& res, const std::vector<int>& pick) {
  const int M = scn.n_servers();
  for (int m = 0; m < M; ++m) {
    double b = 0.0, p = 0.0, f = 0.0;
    for (std::size_t n = 0; n < pick.size(); ++n) {
      if (pick[n] != m) continue;
      b += res.bandwidth(n, m);
      p += res.server_power(n, m);
      f += res.server_speed(n, m);
    }
    const double tol = 1e-9;
    if (b > scn.servers[m].bandwidth_max * (1.0 + tol) ||
        p > scn.servers[m].tx_power_max * (1.0 + tol) ||
        f > scn.servers[m].gpu_speed_max * (1.0 + tol))
      return false;
  }
  return true;
}

struct RefitOut {
  Eigen::VectorXd split;
  double delay_bound = 0.0;
  double objective = 0.0;
  bool feasible = false;
};

// exact (phi, T) refit: the value function in T is convex piecewise linear
// with kinks only where a user's optimal split hits the box
RefitOut exact_refit(double t_cost, const Eigen::VectorXd& cost, const Eigen::VectorXd& alpha,
                     const Eigen::VectorXd& beta, double const_part) {
  const int N = static_cast<int>(cost.size());
  double t_floor = 0.0;
  for (int n = 0; n < N; ++n) t_floor = std::max(t_floor, alpha(n) + std::min(0.0, beta(n)));
  std::vector<double> cand{t_floor};
  for (int n = 0; n < N; ++n) {
    if (alpha(n) >= t_floor) cand.push_back(alpha(n));
    if (alpha(n) + beta(n) >= t_floor) cand.push_back(alpha(n) + beta(n));
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

  RefitOut best;
  best.objective = 1e300;
  for (double t : cand) {
    double val = t_cost * t + const_part;
    Eigen::VectorXd phi(N);
    bool ok = true;
    for (int n = 0; n < N; ++n) {
      double lo = 0.0, hi = 1.0;
      if (beta(n) > 0.0) {
        hi = std::min(1.0, (t - alpha(n)) / beta(n));
        if (hi < 0.0) { ok = false; break; }
      } else if (beta(n) < 0.0) {
        lo = std::max(0.0, (t - alpha(n)) / beta(n));
        if (lo > 1.0) { ok = false; break; }
      } else if (alpha(n) > t) {
        ok = false;
        break;
      }
      phi(n) = cost(n) >= 0.0 ? lo : hi;
      val += cost(n) * phi(n);
    }
    if (ok && val < best.objective) {
      best.objective = val;
      best.split = phi;
      best.delay_bound = t;
      best.feasible = true;
    }
  }
  if (best.feasible) {
    double realized = 0.0;
    for (int n = 0; n < N; ++n) realized = std::max(realized, alpha(n) + beta(n) * best.split(n));
    best.objective += t_cost * (realized - best.delay_bound);
    best.delay_bound = realized;
  }
  return best;
}

}  // namespace

double part1_objective(const Scenario& scn, const Allocation& res, double y,
                       const Eigen::MatrixXd& assoc, const Eigen::VectorXd& split,
                       double delay_bound) {
  const double ywe = y * scn.weight_energy;
  double obj = y * scn.weight_delay * delay_bound;
  for (int n = 0; n < scn.n_users(); ++n) {
    int m = 0;
    assoc.row(n).maxCoeff(&m);
    const PairPieces p = pair_pieces(scn, res, n, m);
    obj += ywe * (p.energy_const + p.energy_slope * split(n)) - p.score;
  }
  return obj;
}

AssociationSearchResult brute_force_association(const Scenario& scn, const Allocation& res,
                                                double y, long max_enumeration) {
  const int N = scn.n_users();
  const int M = scn.n_servers();
  double combos = std::pow(static_cast<double>(M), N);
  if (combos > static_cast<double>(max_enumeration))
    throw std::invalid_argument("brute_force_association: instance too large (" +
                                std::to_string(static_cast<long long>(combos)) + " > " +
                                std::to_string(max_enumeration) + " associations)");

  // cache the affine pieces per pair
  std::vector<std::vector<PairPieces>> pieces(N, std::vector<PairPieces>(M));
  for (int n = 0; n < N; ++n)
    for (int m = 0; m < M; ++m) pieces[n][m] = pair_pieces(scn, res, n, m);

  AssociationSearchResult out;
  std::vector<int> pick(N, 0);
  const double ywe = y * scn.weight_energy;
  const double ywt = y * scn.weight_delay;
  while (true) {
    ++out.enumerated;
    if (caps_ok(scn, res, pick)) {
      Eigen::VectorXd cost(N), alpha(N), beta(N);
      double const_part = 0.0;
      for (int n = 0; n < N; ++n) {
        const PairPieces& p = pieces[n][pick[n]];
        cost(n) = ywe * p.energy_slope;
        alpha(n) = p.delay_const;
        beta(n) = p.delay_slope;
        const_part += ywe * p.energy_const - p.score;
      }
      const RefitOut r = exact_refit(ywt, cost, alpha, beta, const_part);
      if (r.feasible && (!out.found || r.objective < out.objective)) {
        out.found = true;
        out.objective = r.objective;
        out.split = r.split;
        out.delay_bound = r.delay_bound;
        out.assoc = Eigen::MatrixXd::Zero(N, M);
        for (int n = 0; n < N; ++n) out.assoc(n, pick[n]) = 1.0;
      }
    }
    int k = 0;
    while (k < N && ++pick[k] == M) pick[k++] = 0;
    if (k == N) break;
  }
  return out;
}

double part2_objective(const Scenario& scn, const Eigen::MatrixXd& assoc,
                       const Eigen::VectorXd& split, double y,
                       const resources::ResourceVars& vars) {
  const double ywe = y * scn.weight_energy;
  double obj = -y * scn.weight_delay * vars.delay_bound;
  for (int n = 0; n < scn.n_users(); ++n) {
    int m = 0;
    assoc.row(n).maxCoeff(&m);
    const UserProfile& u = scn.users[n];
    const ServerProfile& s = scn.servers[m];
    const double bits = u.adapter_params * scn.bits_per_param;
    const double work = u.adapter_params * u.flops_per_param;
    const double phi = split(n);
    obj += score_of(scn, m, vars.server_power(n), vars.server_speed(n), vars.bandwidth(n));
    obj -= ywe * u.epochs * u.switched_cap * phi * work * vars.user_speed(n) * vars.user_speed(n);
    obj -= ywe * s.epochs * s.switched_cap * (1.0 - phi) * work * vars.server_speed(n) *
           vars.server_speed(n);
    if (phi > 0.0) {
      const double r = rate_of(vars.bandwidth(n), vars.user_power(n), scn.gain(n, m), scn.noise_psd);
      if (r <= 0.0) return -1e300;
      obj -= ywe * vars.user_power(n) * phi * bits / r;
    }
    if (phi < 1.0) {
      const double r =
          rate_of(vars.bandwidth(n), vars.server_power(n), scn.gain(n, m), scn.noise_psd);
      if (r <= 0.0) return -1e300;
      obj -= ywe * vars.server_power(n) * (1.0 - phi) * bits / r;
    }
  }
  return obj;
}

namespace {

double realized_delay(const Scenario& scn, const Eigen::MatrixXd& assoc,
                      const Eigen::VectorXd& split, const resources::ResourceVars& vars) {
  double worst = 0.0;
  for (int n = 0; n < scn.n_users(); ++n) {
    int m = 0;
    assoc.row(n).maxCoeff(&m);
    const UserProfile& u = scn.users[n];
    const ServerProfile& s = scn.servers[m];
    const double bits = u.adapter_params * scn.bits_per_param;
    const double work = u.adapter_params * u.flops_per_param;
    const double phi = split(n);
    double total = work * phi * u.epochs / vars.user_speed(n) +
                   work * (1.0 - phi) * s.epochs / vars.server_speed(n);
    if (phi > 0.0) {
      const double r = rate_of(vars.bandwidth(n), vars.user_power(n), scn.gain(n, m), scn.noise_psd);
      if (r <= 0.0) return 1e300;
      total += phi * bits / r;
    }
    if (phi < 1.0) {
      const double r =
          rate_of(vars.bandwidth(n), vars.server_power(n), scn.gain(n, m), scn.noise_psd);
      if (r <= 0.0) return 1e300;
      total += (1.0 - phi) * bits / r;
    }
    worst = std::max(worst, total);
  }
  return worst;
}

}  // namespace

GridSearchResult grid_resource_search(const Scenario& scn, const Eigen::MatrixXd& assoc,
                                      const Eigen::VectorXd& split, double y,
                                      const resources::ResourceVars& base, const GridSpec& grid) {
  const int N = scn.n_users();
  struct Axis {
    int user;
    int kind;  // 0 b, 1 pu, 2 ps, 3 fu, 4 fs
    int steps;
    double cap;
  };
  std::vector<Axis> axes;
  auto add_axes = [&](int kind, int steps) {
    if (steps < 2) return;
    for (int n = 0; n < N; ++n) {
      int m = 0;
      assoc.row(n).maxCoeff(&m);
      double cap = 0.0;
      switch (kind) {
        case 0: cap = scn.servers[m].bandwidth_max; break;
        case 1: cap = scn.users[n].tx_power_max; break;
        case 2: cap = scn.servers[m].tx_power_max; break;
        case 3: cap = scn.users[n].gpu_speed_max; break;
        case 4: cap = scn.servers[m].gpu_speed_max; break;
      }
      axes.push_back({n, kind, steps, cap});
    }
  };
  add_axes(0, grid.bandwidth_steps);
  add_axes(1, grid.user_power_steps);
  add_axes(2, grid.server_power_steps);
  add_axes(3, grid.user_speed_steps);
  add_axes(4, grid.server_speed_steps);

  double total = 1.0;
  for (const Axis& a : axes) total *= a.steps;
  if (total > static_cast<double>(grid.max_points))
    throw std::invalid_argument("grid_resource_search: grid too large");

  GridSearchResult out;
  std::vector<int> idx(axes.size(), 0);
  resources::ResourceVars vars = base;
  while (true) {
    vars = base;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const double v = axes[a].cap * static_cast<double>(idx[a] + 1) / axes[a].steps;
      switch (axes[a].kind) {
        case 0: vars.bandwidth(axes[a].user) = v; break;
        case 1: vars.user_power(axes[a].user) = v; break;
        case 2: vars.server_power(axes[a].user) = v; break;
        case 3: vars.user_speed(axes[a].user) = v; break;
        case 4: vars.server_speed(axes[a].user) = v; break;
      }
    }
    // per-server cap feasibility of the summed entries
    bool ok = true;
    for (int m = 0; m < scn.n_servers() && ok; ++m) {
      double b = 0.0, p = 0.0, f = 0.0;
      for (int n = 0; n < N; ++n) {
        if (assoc(n, m) == 0.0) continue;
        b += vars.bandwidth(n);
        p += vars.server_power(n);
        f += vars.server_speed(n);
      }
      const double tol = 1e-12;
      ok = b <= scn.servers[m].bandwidth_max * (1 + tol) &&
           p <= scn.servers[m].tx_power_max * (1 + tol) &&
           f <= scn.servers[m].gpu_speed_max * (1 + tol);
    }
    for (int n = 0; n < N && ok; ++n)
      ok = vars.user_power(n) <= scn.users[n].tx_power_max * (1 + 1e-12) &&
           vars.user_speed(n) <= scn.users[n].gpu_speed_max * (1 + 1e-12);
    if (ok) {
      vars.delay_bound = realized_delay(scn, assoc, split, vars);
      ++out.evaluated;
      const double obj = part2_objective(scn, assoc, split, y, vars);
      if (!out.found || obj > out.objective) {
        out.found = true;
        out.objective = obj;
        out.best = vars;
      }
    }
    if (axes.empty()) break;
    std::size_t k = 0;
    while (k < axes.size() && ++idx[k] == axes[k].steps) idx[k++] = 0;
    if (k == axes.size()) break;
  }
  return out;
}

Eigen::VectorXd finite_diff_grad(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& point, double h_rel) {
  Eigen::VectorXd g(point.size());
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    const double h = h_rel * std::max(std::abs(point(i)), 1e-12);
    Eigen::VectorXd hi = point, lo = point;
    hi(i) += h;
    lo(i) -= h;
    g(i) = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

}  // namespace dashf::oracle
