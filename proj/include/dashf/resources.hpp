#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dashf/model.hpp"

// AO part 2: with the association and split fixed, allocate bandwidth, the
// transmit powers and the GPU speeds, plus the delay bound. The ratio terms
// chi/r are replaced by the surrogate chi^2*z + 1/(4 r^2 z), exact at
// z = 1/(2 chi r); for fixed z the surrogate problem is concave and is solved
// by a log-barrier method with damped Newton steps and analytic derivatives.
namespace dashf::resources {

// Connected-pair resource variables, one entry per user (the server is the
// user's associated one). delay_bound is the auxiliary T.
struct ResourceVars {
  Eigen::VectorXd bandwidth;     // Hz
  Eigen::VectorXd user_power;    // W
  Eigen::VectorXd server_power;  // W
  Eigen::VectorXd user_speed;    // FLOP/s
  Eigen::VectorXd server_speed;  // FLOP/s
  double delay_bound = 0.0;      // s
};

// Fractional-programming auxiliaries per user; an entry of 0 marks a term
// dropped because its chi vanishes structurally (split at 0 or 1).
struct FpState {
  Eigen::VectorXd z_up;
  Eigen::VectorXd z_down;
};

struct Chi {
  double uplink = 0.0;           // p_n * x * phi * d * omega_b
  double downlink = 0.0;         // p_{n,m} * x * (1-phi) * d * omega_b
};

Chi chi(const Scenario& scn, const Eigen::MatrixXd& assoc, const Eigen::VectorXd& split,
        const ResourceVars& vars, int n, int m);

// z = 1/(2 chi r) per active term; throws when a nonzero chi meets a zero rate.
FpState update_z(const Scenario& scn, const Eigen::MatrixXd& assoc, const Eigen::VectorXd& split,
                 const ResourceVars& vars);

// Surrogate objective at fixed z. Returns -inf when an active rate is
// nonpositive (the boundary penalty; barrier iterates never land there).
double transformed_objective(const Scenario& scn, const Eigen::MatrixXd& assoc,
                             const Eigen::VectorXd& split, double y, const ResourceVars& vars,
                             const FpState& z);

// Analytic gradient of the surrogate over the packed raw variables
// [b, p_u, p_s, f_u, f_s] per user then T; exposed for derivative checks.
Eigen::VectorXd transformed_gradient(const Scenario& scn, const Eigen::MatrixXd& assoc,
                                     const Eigen::VectorXd& split, double y,
                                     const ResourceVars& vars, const FpState& z);

// True objective of the resource subproblem (service minus weighted delay and
// energy, with the ratio terms evaluated directly).
double direct_objective(const Scenario& scn, const Eigen::MatrixXd& assoc,
                        const Eigen::VectorXd& split, double y, const ResourceVars& vars);

Eigen::VectorXd pack(const ResourceVars& vars);
ResourceVars unpack(const Eigen::VectorXd& packed, int n_users);

struct FreeVars {
  bool bandwidth = true;
  bool user_power = true;
  bool server_power = true;
  bool user_speed = true;
  bool server_speed = true;
  bool delay_bound = true;
};

struct SolveInfo {
  double objective = 0.0;        // surrogate value at the returned point
  double kkt_residual = 0.0;     // scaled stationarity + complementarity
  int newton_iterations = 0;
  bool converged = false;
};

// Maximizes the surrogate at fixed z over the cap/nonnegativity/delay
// constraints. The start is pulled strictly inside the caps; the returned
// point is never worse than the start in surrogate value.
ResourceVars solve_concave(const Scenario& scn, const Eigen::MatrixXd& assoc,
                           const Eigen::VectorXd& split, const FpState& z, double y,
                           const ResourceVars& start, double tol = 1e-6,
                           const FreeVars& free = {}, SolveInfo* info = nullptr);

struct Part2Result {
  ResourceVars vars;
  std::vector<double> objective_trace;  // direct objective per outer iteration
  bool converged = false;
  int outer_iterations = 0;
};

// Alternates the z update with the concave solve until the direct objective
// stalls. The direct objective is nondecreasing across outer iterations.
Part2Result solve_part2(const Scenario& scn, const Eigen::MatrixXd& assoc,
                        const Eigen::VectorXd& split, double y, const ResourceVars& start,
                        double tol = 1e-6, int max_outer = 20);

// Connected-pair view of a full allocation and its inverse. Unconnected pair
// entries of the result are filled with cap/N standing offers.
ResourceVars from_allocation(const Scenario& scn, const Allocation& a);
Allocation to_allocation(const Scenario& scn, const Eigen::MatrixXd& assoc,
                         const Eigen::VectorXd& split, const ResourceVars& vars);

}  // namespace dashf::resources
