#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

// Physical and cost model of the collaborative adapter-training system:
// Shannon link rates, the four training/transfer phases (local train, uplink,
// server train, downlink), their delays and energies, the per-user service
// score, and the service-cost ratio (SCR) that the optimizer maximizes.
namespace dashf {

struct UserProfile {
  double pos_x = 0.0;             // m
  double pos_y = 0.0;             // m
  double adapter_params = 0.0;    // d_n, trainable adapter parameter count
  double flops_per_param = 0.0;   // t_n, FLOPs per parameter per epoch
  double epochs = 1.0;            // e_n, local training epochs
  double gpu_speed_max = 0.0;     // FLOP/s, aggregate effective speed cap
  double tx_power_max = 0.0;      // W
  double switched_cap = 0.0;      // kappa_n, J·s^2/FLOP^3 effective constant
};

struct ServerProfile {
  double pos_x = 0.0;             // m
  double pos_y = 0.0;             // m
  double bandwidth_max = 0.0;     // Hz, total per server
  double tx_power_max = 0.0;      // W, total per server
  double gpu_speed_max = 0.0;     // FLOP/s, total per server
  double epochs = 1.0;            // e_m
  double switched_cap = 0.0;      // kappa_m
};

// Immutable problem instance. `gain` is the linear power gain per
// user-server pair (path loss times the frozen small-scale fade).
struct Scenario {
  std::vector<UserProfile> users;
  std::vector<ServerProfile> servers;
  Eigen::MatrixXd gain;           // N x M, linear power gain
  double noise_psd = 0.0;         // W/Hz
  double weight_delay = 0.0;      // cost weight on total delay
  double weight_energy = 0.0;     // cost weight on total energy
  double score_scale = 0.0;       // service-score range constant
  double score_norm = 0.0;        // service-score normalization constant
  double bits_per_param = 32.0;   // bits to encode one adapter parameter

  int n_users() const { return static_cast<int>(users.size()); }
  int n_servers() const { return static_cast<int>(servers.size()); }

  // Throws std::invalid_argument when any positivity/shape invariant fails.
  void validate() const;
};

// Full decision vector. Per-pair entries of bandwidth/server_power/
// server_speed are meaningful for connected pairs; entries of unconnected
// pairs act as standing offers that the association step may pick up.
struct Allocation {
  Eigen::MatrixXd assoc;          // x, N x M binary, rows sum to 1
  Eigen::VectorXd split;          // phi in [0,1], fraction trained locally
  Eigen::MatrixXd bandwidth;      // Hz, N x M
  Eigen::VectorXd user_power;     // W, N
  Eigen::MatrixXd server_power;   // W, N x M
  Eigen::VectorXd user_speed;     // FLOP/s, N
  Eigen::MatrixXd server_speed;   // FLOP/s, N x M
  double delay_bound = 0.0;       // T, s

  int server_of(int n) const;     // argmax of row n of assoc
};

struct PhaseDelays {
  double local_train = 0.0;       // T1
  double uplink = 0.0;            // T2
  double server_train = 0.0;      // T3
  double downlink = 0.0;          // T4
  double total() const { return local_train + uplink + server_train + downlink; }
};

struct PhaseEnergies {
  double local_train = 0.0;       // E1
  double uplink = 0.0;            // E2
  double server_train = 0.0;      // E3
  double downlink = 0.0;          // E4
};

// Per-pair phase tables plus the aggregates entering the SCR. Local-train
// delay/energy do not depend on the server, so those columns repeat; the
// energy total counts each user's local term once.
struct CostBreakdown {
  Eigen::MatrixXd t_local, t_up, t_server, t_down;   // N x M, s
  Eigen::MatrixXd e_local, e_up, e_server, e_down;   // N x M, J
  double delay_total = 0.0;       // max over pairs of the four-phase sum
  double energy_total = 0.0;      // sum_n E1_n + sum_{n,m} (E2+E3+E4)
  double service_total = 0.0;     // V = sum x_{n,m} v_{n,m}
};

struct Violation {
  std::string constraint;         // e.g. "3e"
  int user = -1;                  // -1 when not user-indexed
  int server = -1;                // -1 when not server-indexed
  double amount = 0.0;            // normalized violation magnitude
  std::string describe() const;
};

// Shannon rate b*log2(1 + g*p/(sigma2*b)). Returns 0 at b=0 or p=0
// (continuous limit), so barrier methods can approach the boundary.
double link_rate(double bandwidth, double power, double gain, double noise_psd);

// v = varpi1 * ln(1 + varpi2*(p/p_cap + f/f_cap + b/b_cap)).
double service_score(double server_power, double server_speed, double bandwidth,
                     const ServerProfile& server, double score_scale, double score_norm);

// Four-phase delays/energies of pair (n, m). Phases 2-4 carry the x factor;
// an exhausted resource (zero speed or rate) against a nonzero numerator
// yields an infinite sentinel for that phase.
PhaseDelays phase_delays(const Scenario& scn, const Allocation& a, int n, int m);
PhaseEnergies phase_energies(const Scenario& scn, const Allocation& a, int n, int m);

CostBreakdown evaluate(const Scenario& scn, const Allocation& a);

// SCR = V / (omega_t * T_total + omega_e * E_total). Throws on a zero or
// negative denominator; an infinite denominator maps to 0.
double scr(const CostBreakdown& cost, double weight_delay, double weight_energy);
double scr(const Scenario& scn, const Allocation& a);

// V - y*(omega_t*T + omega_e*E_total) with the allocation's delay bound as T.
double dinkelbach_objective(const Scenario& scn, const Allocation& a, double y);

// Empty iff the allocation satisfies every constraint of the joint problem
// within `tol` on cap-normalized slack. Constraint ids follow the library's
// canonical numbering (see README): 3b binary association, 3c one server per
// user, 3d split box, 3e bandwidth cap, 3f user power cap, 3g user speed cap,
// 3h server power cap, 3i nonnegativity, 3j server speed cap, 3k delay bound.
std::vector<Violation> check_feasibility(const Scenario& scn, const Allocation& a,
                                         double tol = 1e-9);

}  // namespace dashf
