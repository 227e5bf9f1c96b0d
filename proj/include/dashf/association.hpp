#pragma once

#include <Eigen/Dense>

#include "dashf/model.hpp"
#include "dashf/sdp.hpp"

// AO part 1: with communication/compute resources held fixed, choose the
// binary association and the training split. The bilinear objective becomes a
// QCQP over q = [split; vec(assoc)], homogenized and relaxed to an SDP whose
// rounded solution is repaired by a maximum-weight matching, after which the
// split and the delay bound are refit exactly.
namespace dashf::assoc {

// Linear/bilinear coefficients of the minimization objective
//   t_cost*T + sum_n split_cost_n*phi_n
//   + sum_{n,m} (assoc_cost_{n,m}*x_{n,m} + cross_cost_{n,m}*x_{n,m}*phi_n)
// plus the per-pair delay pieces
//   delay = delay_split_n*phi_n + delay_const_{n,m}*x + delay_cross_{n,m}*x*phi.
struct QcqpCoeffs {
  double y = 0.0;
  double t_cost = 0.0;            // y * weight_delay
  Eigen::VectorXd split_cost;     // N
  Eigen::MatrixXd assoc_cost;     // N x M
  Eigen::MatrixXd cross_cost;     // N x M
  Eigen::VectorXd delay_split;    // N
  Eigen::MatrixXd delay_const;    // N x M
  Eigen::MatrixXd delay_cross;    // N x M

  // objective value at a concrete (assoc, split, T) point
  double objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& phi, double t) const;
  double pair_delay(const Eigen::MatrixXd& x, const Eigen::VectorXd& phi, int n, int m) const;
  // finite upper bound on the delay of any feasible binary point
  double max_delay_bound() const;
};

// Coefficients from the fixed per-pair resources carried by `res` (its assoc
// and split are ignored). Throws if some pair has a zero rate against a
// nonzero transfer coefficient.
QcqpCoeffs build_coeffs(const Scenario& scn, const Allocation& res, double y);

// Homogenized SDR over s = [split; vec(assoc); 1], S = s s^T. Constraint
// families: per-entry binary equalities, per-user row sums, split box (phi >= 0
// plus the quadratic phi^2 <= phi, which also caps the lifted diagonal and
// keeps the relaxation bounded), the three per-server resource caps with fixed
// resource values, per-pair delay.
struct HomogenizedSdr {
  int n_users = 0, n_servers = 0;
  int dim = 0;                    // N + N*M + 1
  Eigen::MatrixXd objective;      // P1
  double t_weight = 0.0;
  std::vector<sdp::ConicProgram::Equality> binary_eqs;      // N*M
  std::vector<sdp::ConicProgram::Equality> rowsum_eqs;      // N
  std::vector<sdp::ConicProgram::Inequality> split_box;     // 2N
  std::vector<sdp::ConicProgram::Inequality> cap_ineqs;     // 3M
  std::vector<sdp::ConicProgram::Inequality> delay_ineqs;   // N*M

  int family_constraint_count() const;
  // Adds the homogenization pin S[D-1,D-1] = 1 on top of the families.
  sdp::ConicProgram to_conic() const;
};

HomogenizedSdr build_sdr(const QcqpCoeffs& coeffs, const Scenario& scn, const Allocation& res);

struct RelaxationResult {
  Eigen::MatrixXd s_matrix;       // PSD solution
  double t = 0.0;
  double objective = 0.0;         // SDP objective at the returned point
  double lower_bound = 0.0;       // certified bound for the binary problem
  double primal_residual = 0.0, dual_residual = 0.0;
  int iterations = 0;
  bool converged = false, infeasible = false;
  std::string status;
  sdp::Solution raw;              // for warm starts
};

RelaxationResult solve_relaxation(const HomogenizedSdr& sdr, double tol = 1e-6,
                                  int max_iter = 50000, const sdp::Solution* warm = nullptr);

// Recover a binary association from the relaxed S: read q from the
// homogenization column (leading eigenvector as fallback), clip the assoc
// block to [0,1], rescale rows whose mass exceeds one, then match users to
// ceil(N/M) replicated server slots by maximum weight.
Eigen::MatrixXd round_association(const Eigen::MatrixXd& s_matrix, int n_users, int n_servers);

struct SplitRefit {
  Eigen::VectorXd split;
  double delay_bound = 0.0;
  double objective = 0.0;         // exact LP optimum
};

// Exact LP in (split, T) for a fixed binary association: minimize
// t_cost*T + sum_n (split_cost_n + cross_cost_{n,m(n)}) * phi_n subject to the
// per-user delay constraints and the [0,1] box. Solved by enumerating the
// breakpoints of the piecewise-linear value function in T.
SplitRefit refit_split(const Eigen::MatrixXd& assoc, const QcqpCoeffs& coeffs);

}  // namespace dashf::assoc
