#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

// Dense semidefinite programming at desk scale: one PSD block S, one scalar
// variable T, linear trace constraints. Solved by operator splitting on the
// homogeneous self-dual embedding (alternating a projection onto the KKT
// affine set with a projection onto the cone product, over-relaxed), with
// Ruiz equilibration of the constraint matrix.
namespace dashf::sdp {

struct ConicProgram {
  int block_dim = 0;             // D
  Eigen::MatrixXd objective;     // C, symmetric D x D; minimize Tr(C S) + t_weight * T
  double t_weight = 0.0;

  struct Equality {
    Eigen::MatrixXd mat;         // Tr(mat * S) = rhs
    double rhs = 0.0;
  };
  struct Inequality {
    Eigen::MatrixXd mat;         // Tr(mat * S) + t_coeff * T <= rhs
    double t_coeff = 0.0;
    double rhs = 0.0;
  };
  std::vector<Equality> equalities;
  std::vector<Inequality> inequalities;

  void validate() const;         // symmetry/shape checks
  // Plain-text dump (dimension, then each matrix row-major in full decimal)
  // for cross-checking against external tools.
  void dump(std::ostream& os) const;
};

struct Solution {
  Eigen::MatrixXd psd;           // S, exactly PSD (taken from the cone side)
  double t = 0.0;
  double objective = 0.0;        // Tr(C S) + t_weight * T at the returned point
  double dual_objective = 0.0;
  double primal_residual = 0.0;  // relative, original problem scale
  double dual_residual = 0.0;
  double gap = 0.0;
  double first_residual = 0.0;   // residual at the first progress check
  int iterations = 0;
  bool converged = false;
  bool infeasible = false;
  bool unbounded = false;
  std::string status;

  Eigen::VectorXd dual_eq;       // one multiplier per equality
  Eigen::VectorXd dual_ineq;     // one multiplier per inequality (>= 0 at convergence)
  Eigen::MatrixXd dual_psd;      // multiplier for the PSD constraint

  // raw iterate in solver coordinates, kept for warm starts
  Eigen::VectorXd warm_x, warm_y, warm_s;
};

Solution solve(const ConicProgram& prog, double tol = 1e-6, int max_iter = 50000,
               const Solution* warm = nullptr);

// A value provably <= min over every feasible point whose variable norm
// ||(svec(S), T)|| is at most norm_bound: weak duality on the cone-projected
// dual, minus the dual-infeasibility correction.
double certified_lower_bound(const ConicProgram& prog, const Solution& sol, double norm_bound);

// Nearest (Frobenius) PSD matrix: eigendecompose and clip negative eigenvalues.
Eigen::MatrixXd project_psd(const Eigen::MatrixXd& sym);

// Scaled vectorization of a symmetric matrix: off-diagonals carry sqrt(2) so
// that svec(A).dot(svec(B)) = Tr(A B).
Eigen::VectorXd svec(const Eigen::MatrixXd& m);
Eigen::MatrixXd smat(const Eigen::VectorXd& v);

}  // namespace dashf::sdp
