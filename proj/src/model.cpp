#include "dashf/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dashf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// delay of a positive workload against a possibly exhausted resource
double safe_div(double numerator, double denominator) {
  if (numerator == 0.0) return 0.0;
  if (denominator <= 0.0) return kInf;
  return numerator / denominator;
}
}  // namespace

void Scenario::validate() const {
  if (users.empty() || servers.empty())
    throw std::invalid_argument("scenario: needs at least one user and one server");
  if (gain.rows() != n_users() || gain.cols() != n_servers())
    throw std::invalid_argument("scenario: gain matrix shape mismatch");
  if ((gain.array() <= 0.0).any())
    throw std::invalid_argument("scenario: channel gains must be positive");
  if (noise_psd <= 0.0) throw std::invalid_argument("scenario: noise_psd must be positive");
  if (weight_delay <= 0.0 || weight_energy <= 0.0)
    throw std::invalid_argument("scenario: cost weights must be positive");
  if (score_scale <= 0.0 || score_norm <= 0.0)
    throw std::invalid_argument("scenario: service-score constants must be positive");
  if (bits_per_param <= 0.0)
    throw std::invalid_argument("scenario: bits_per_param must be positive");
  for (const auto& u : users) {
    if (u.adapter_params <= 0.0 || u.flops_per_param <= 0.0 || u.epochs < 1.0 ||
        u.gpu_speed_max <= 0.0 || u.tx_power_max <= 0.0 || u.switched_cap <= 0.0)
      throw std::invalid_argument("scenario: user profile fields must be positive (epochs >= 1)");
  }
  for (const auto& s : servers) {
    if (s.bandwidth_max <= 0.0 || s.tx_power_max <= 0.0 || s.gpu_speed_max <= 0.0 ||
        s.epochs < 1.0 || s.switched_cap <= 0.0)
      throw std::invalid_argument("scenario: server profile fields must be positive (epochs >= 1)");
  }
}

int Allocation::server_of(int n) const {
  int best = 0;
  assoc.row(n).maxCoeff(&best);
  return best;
}

double link_rate(double bandwidth, double power, double gain, double noise_psd) {
  if (gain <= 0.0) throw std::invalid_argument("link_rate: gain must be positive");
  if (noise_psd <= 0.0) throw std::invalid_argument("link_rate: noise_psd must be positive");
  if (bandwidth < 0.0 || power < 0.0)
    throw std::invalid_argument("link_rate: bandwidth and power must be nonnegative");
  if (bandwidth == 0.0 || power == 0.0) return 0.0;
  return bandwidth * std::log2(1.0 + gain * power / (noise_psd * bandwidth));
}

double service_score(double server_power, double server_speed, double bandwidth,
                     const ServerProfile& server, double score_scale, double score_norm) {
  const double load = server_power / server.tx_power_max +
                      server_speed / server.gpu_speed_max +
                      bandwidth / server.bandwidth_max;
  if (load < -1e-12 || load > 3.0 + 1e-9)
    throw std::invalid_argument("service_score: arguments outside [0, cap]");
  return score_scale * std::log1p(score_norm * load);
}

PhaseDelays phase_delays(const Scenario& scn, const Allocation& a, int n, int m) {
  const UserProfile& u = scn.users[n];
  const ServerProfile& s = scn.servers[m];
  const double x = a.assoc(n, m);
  const double phi = a.split(n);
  const double bits = u.adapter_params * scn.bits_per_param;
  const double up = link_rate(a.bandwidth(n, m), a.user_power(n), scn.gain(n, m), scn.noise_psd);
  const double down = link_rate(a.bandwidth(n, m), a.server_power(n, m), scn.gain(n, m), scn.noise_psd);

  PhaseDelays d;
  d.local_train = safe_div(u.flops_per_param * phi * u.adapter_params * u.epochs, a.user_speed(n));
  d.uplink = safe_div(x * phi * bits, up);
  d.server_train = safe_div(u.flops_per_param * (1.0 - phi) * x * u.adapter_params * s.epochs,
                            a.server_speed(n, m));
  d.downlink = safe_div(x * (1.0 - phi) * bits, down);
  return d;
}

PhaseEnergies phase_energies(const Scenario& scn, const Allocation& a, int n, int m) {
  const UserProfile& u = scn.users[n];
  const ServerProfile& s = scn.servers[m];
  const double x = a.assoc(n, m);
  const double phi = a.split(n);
  const PhaseDelays d = phase_delays(scn, a, n, m);

  PhaseEnergies e;
  e.local_train = u.epochs * u.switched_cap * phi * u.adapter_params * u.flops_per_param *
                  a.user_speed(n) * a.user_speed(n);
  e.uplink = a.user_power(n) * d.uplink;
  e.server_train = s.epochs * s.switched_cap * x * (1.0 - phi) * u.adapter_params *
                   u.flops_per_param * a.server_speed(n, m) * a.server_speed(n, m);
  e.downlink = a.server_power(n, m) * d.downlink;
  return e;
}

CostBreakdown evaluate(const Scenario& scn, const Allocation& a) {
  const int N = scn.n_users();
  const int M = scn.n_servers();
  CostBreakdown c;
  c.t_local.resize(N, M); c.t_up.resize(N, M); c.t_server.resize(N, M); c.t_down.resize(N, M);
  c.e_local.resize(N, M); c.e_up.resize(N, M); c.e_server.resize(N, M); c.e_down.resize(N, M);

  double delay_max = 0.0;
  double energy = 0.0;
  double service = 0.0;
  for (int n = 0; n < N; ++n) {
    for (int m = 0; m < M; ++m) {
      const PhaseDelays d = phase_delays(scn, a, n, m);
      const PhaseEnergies e = phase_energies(scn, a, n, m);
      c.t_local(n, m) = d.local_train; c.t_up(n, m) = d.uplink;
      c.t_server(n, m) = d.server_train; c.t_down(n, m) = d.downlink;
      c.e_local(n, m) = e.local_train; c.e_up(n, m) = e.uplink;
      c.e_server(n, m) = e.server_train; c.e_down(n, m) = e.downlink;
      delay_max = std::max(delay_max, d.total());
      // local-train energy is server-independent: counted once per user below
      energy += e.uplink + e.server_train + e.downlink;
      if (a.assoc(n, m) != 0.0) {
        service += a.assoc(n, m) *
                   service_score(a.server_power(n, m), a.server_speed(n, m), a.bandwidth(n, m),
                                 scn.servers[m], scn.score_scale, scn.score_norm);
      }
    }
    energy += c.e_local(n, 0);
  }
  c.delay_total = delay_max;
  c.energy_total = energy;
  c.service_total = service;
  return c;
}

double scr(const CostBreakdown& cost, double weight_delay, double weight_energy) {
  const double denom = weight_delay * cost.delay_total + weight_energy * cost.energy_total;
  if (std::isinf(denom)) return 0.0;
  if (!(denom > 0.0)) throw std::domain_error("scr: nonpositive cost denominator");
  return cost.service_total / denom;
}

double scr(const Scenario& scn, const Allocation& a) {
  return scr(evaluate(scn, a), scn.weight_delay, scn.weight_energy);
}

double dinkelbach_objective(const Scenario& scn, const Allocation& a, double y) {
  const CostBreakdown c = evaluate(scn, a);
  return c.service_total - y * (scn.weight_delay * a.delay_bound + scn.weight_energy * c.energy_total);
}

std::string Violation::describe() const {
  std::ostringstream os;
  os << "(" << constraint << ")";
  if (user >= 0) os << " user " << user;
  if (server >= 0) os << " server " << server;
  os << " violated by " << amount;
  return os.str();
}

std::vector<Violation> check_feasibility(const Scenario& scn, const Allocation& a, double tol) {
  const int N = scn.n_users();
  const int M = scn.n_servers();
  std::vector<Violation> out;
  auto flag = [&](const std::string& id, int n, int m, double amount) {
    if (amount > tol) out.push_back({id, n, m, amount});
  };

  for (int n = 0; n < N; ++n) {
    for (int m = 0; m < M; ++m) {
      const double x = a.assoc(n, m);
      flag("3b", n, m, std::abs(x * (x - 1.0)));
    }
    flag("3c", n, -1, std::abs(a.assoc.row(n).sum() - 1.0));
    flag("3d", n, -1, std::max(-a.split(n), a.split(n) - 1.0));
    flag("3f", n, -1, (a.user_power(n) - scn.users[n].tx_power_max) / scn.users[n].tx_power_max);
    flag("3g", n, -1, (a.user_speed(n) - scn.users[n].gpu_speed_max) / scn.users[n].gpu_speed_max);
  }
  for (int m = 0; m < M; ++m) {
    const ServerProfile& s = scn.servers[m];
    double b_sum = 0.0, p_sum = 0.0, f_sum = 0.0;
    for (int n = 0; n < N; ++n) {
      b_sum += a.assoc(n, m) * a.bandwidth(n, m);
      p_sum += a.assoc(n, m) * a.server_power(n, m);
      f_sum += a.assoc(n, m) * a.server_speed(n, m);
    }
    flag("3e", -1, m, (b_sum - s.bandwidth_max) / s.bandwidth_max);
    flag("3h", -1, m, (p_sum - s.tx_power_max) / s.tx_power_max);
    flag("3j", -1, m, (f_sum - s.gpu_speed_max) / s.gpu_speed_max);
  }
  // 3i: nonnegativity, normalized by the matching cap
  for (int n = 0; n < N; ++n) {
    flag("3i", n, -1, -a.user_power(n) / scn.users[n].tx_power_max);
    flag("3i", n, -1, -a.user_speed(n) / scn.users[n].gpu_speed_max);
    for (int m = 0; m < M; ++m) {
      flag("3i", n, m, -a.bandwidth(n, m) / scn.servers[m].bandwidth_max);
      flag("3i", n, m, -a.server_power(n, m) / scn.servers[m].tx_power_max);
      flag("3i", n, m, -a.server_speed(n, m) / scn.servers[m].gpu_speed_max);
    }
  }
  // 3k: per-pair four-phase delay within the bound
  const double t_ref = std::max(a.delay_bound, 1e-30);
  for (int n = 0; n < N; ++n) {
    for (int m = 0; m < M; ++m) {
      const double total = phase_delays(scn, a, n, m).total();
      flag("3k", n, m, (total - a.delay_bound) / t_ref);
    }
  }
  return out;
}

}  // namespace dashf
