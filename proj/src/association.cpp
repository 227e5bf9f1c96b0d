#include "dashf/association.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dashf/assignment.hpp"

namespace dashf::assoc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double QcqpCoeffs::objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& phi, double t) const {
  double val = t_cost * t + split_cost.dot(phi);
  for (Eigen::Index n = 0; n < x.rows(); ++n)
    for (Eigen::Index m = 0; m < x.cols(); ++m)
      val += assoc_cost(n, m) * x(n, m) + cross_cost(n, m) * x(n, m) * phi(n);
  return val;
}

double QcqpCoeffs::pair_delay(const Eigen::MatrixXd& x, const Eigen::VectorXd& phi, int n,
                              int m) const {
  return delay_split(n) * phi(n) + delay_const(n, m) * x(n, m) +
         delay_cross(n, m) * x(n, m) * phi(n);
}

double QcqpCoeffs::max_delay_bound() const {
  double worst = 0.0;
  for (Eigen::Index n = 0; n < delay_const.rows(); ++n) {
    for (Eigen::Index m = 0; m < delay_const.cols(); ++m) {
      const double beta = delay_split(n) + delay_cross(n, m);
      worst = std::max(worst, delay_const(n, m) + std::max(0.0, beta));
    }
  }
  return worst;
}

QcqpCoeffs build_coeffs(const Scenario& scn, const Allocation& res, double y) {
  if (y < 0.0) throw std::invalid_argument("build_coeffs: y must be nonnegative");
  const int N = scn.n_users();
  const int M = scn.n_servers();
  QcqpCoeffs c;
  c.y = y;
  c.t_cost = y * scn.weight_delay;
  c.split_cost.resize(N);
  c.assoc_cost.resize(N, M);
  c.cross_cost.resize(N, M);
  c.delay_split.resize(N);
  c.delay_const.resize(N, M);
  c.delay_cross.resize(N, M);

  const double we = scn.weight_energy;
  for (int n = 0; n < N; ++n) {
    const UserProfile& u = scn.users[n];
    const double bits = u.adapter_params * scn.bits_per_param;
    const double work = u.adapter_params * u.flops_per_param;
    if (res.user_speed(n) <= 0.0)
      throw std::invalid_argument("build_coeffs: user speed must be positive");
    c.split_cost(n) = y * we * u.epochs * u.switched_cap * work * res.user_speed(n) * res.user_speed(n);
    c.delay_split(n) = work * u.epochs / res.user_speed(n);

    for (int m = 0; m < M; ++m) {
      const ServerProfile& s = scn.servers[m];
      const double up = link_rate(res.bandwidth(n, m), res.user_power(n), scn.gain(n, m), scn.noise_psd);
      const double down =
          link_rate(res.bandwidth(n, m), res.server_power(n, m), scn.gain(n, m), scn.noise_psd);
      if (up <= 0.0 || down <= 0.0)
        throw std::invalid_argument("build_coeffs: zero rate on pair (" + std::to_string(n) + "," +
                                    std::to_string(m) + ") with a nonzero transfer");
      if (res.server_speed(n, m) <= 0.0)
        throw std::invalid_argument("build_coeffs: zero server speed on a selectable pair");
      const double v = service_score(res.server_power(n, m), res.server_speed(n, m),
                                     res.bandwidth(n, m), s, scn.score_scale, scn.score_norm);
      const double up_cost = res.user_power(n) * bits / up;
      const double down_cost = res.server_power(n, m) * bits / down;
      const double server_compute = s.epochs * s.switched_cap * work * res.server_speed(n, m) *
                                    res.server_speed(n, m);
      c.assoc_cost(n, m) = y * we * (down_cost + server_compute) - v;
      c.cross_cost(n, m) = y * we * (up_cost - down_cost - server_compute);

      const double t_up = bits / up;
      const double t_server = work * s.epochs / res.server_speed(n, m);
      const double t_down = bits / down;
      c.delay_const(n, m) = t_server + t_down;
      c.delay_cross(n, m) = t_up - t_server - t_down;
    }
  }
  return c;
}

namespace {

// symmetric pair write into a homogenized matrix
void put_sym(Eigen::MatrixXd& m, int i, int j, double v) {
  m(i, j) += v;
  if (i != j) m(j, i) += v;
}

}  // namespace

int HomogenizedSdr::family_constraint_count() const {
  return static_cast<int>(binary_eqs.size() + rowsum_eqs.size() + split_box.size() +
                          cap_ineqs.size() + delay_ineqs.size());
}

sdp::ConicProgram HomogenizedSdr::to_conic() const {
  sdp::ConicProgram prog;
  prog.block_dim = dim;
  prog.objective = objective;
  prog.t_weight = t_weight;
  prog.equalities = binary_eqs;
  prog.equalities.insert(prog.equalities.end(), rowsum_eqs.begin(), rowsum_eqs.end());
  Eigen::MatrixXd pin = Eigen::MatrixXd::Zero(dim, dim);
  pin(dim - 1, dim - 1) = 1.0;
  prog.equalities.push_back({pin, 1.0});
  prog.inequalities = split_box;
  prog.inequalities.insert(prog.inequalities.end(), cap_ineqs.begin(), cap_ineqs.end());
  prog.inequalities.insert(prog.inequalities.end(), delay_ineqs.begin(), delay_ineqs.end());
  return prog;
}

HomogenizedSdr build_sdr(const QcqpCoeffs& coeffs, const Scenario& scn, const Allocation& res) {
  const int N = scn.n_users();
  const int M = scn.n_servers();
  HomogenizedSdr sdr;
  sdr.n_users = N;
  sdr.n_servers = M;
  sdr.dim = N + N * M + 1;
  const int D = sdr.dim;
  const int h = D - 1;
  auto xi = [&](int n, int m) { return N + n * M + m; };

  sdr.objective = Eigen::MatrixXd::Zero(D, D);
  sdr.t_weight = coeffs.t_cost;
  for (int n = 0; n < N; ++n) {
    put_sym(sdr.objective, n, h, coeffs.split_cost(n) / 2.0);
    for (int m = 0; m < M; ++m) {
      put_sym(sdr.objective, xi(n, m), h, coeffs.assoc_cost(n, m) / 2.0);
      put_sym(sdr.objective, n, xi(n, m), coeffs.cross_cost(n, m) / 2.0);
    }
  }

  for (int n = 0; n < N; ++n) {
    for (int m = 0; m < M; ++m) {
      Eigen::MatrixXd q = Eigen::MatrixXd::Zero(D, D);
      q(xi(n, m), xi(n, m)) = 1.0;
      put_sym(q, xi(n, m), h, -0.5);
      sdr.binary_eqs.push_back({q, 0.0});  // x^2 - x = 0
    }
  }
  for (int n = 0; n < N; ++n) {
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(D, D);
    for (int m = 0; m < M; ++m) put_sym(q, xi(n, m), h, 0.5);
    sdr.rowsum_eqs.push_back({q, 1.0});
  }
  for (int n = 0; n < N; ++n) {
    // quadratic form of the box: phi^2 <= phi bounds the lifted diagonal,
    // keeping the relaxation bounded along the split directions
    Eigen::MatrixXd up = Eigen::MatrixXd::Zero(D, D);
    up(n, n) = 1.0;
    put_sym(up, n, h, -0.5);
    sdr.split_box.push_back({up, 0.0, 0.0});   // phi^2 - phi <= 0
    Eigen::MatrixXd lo = Eigen::MatrixXd::Zero(D, D);
    put_sym(lo, n, h, -0.5);
    sdr.split_box.push_back({lo, 0.0, 0.0});   // -phi <= 0
  }
  // per-server caps on the fixed resource values, normalized by the cap
  for (int m = 0; m < M; ++m) {
    const ServerProfile& s = scn.servers[m];
    Eigen::MatrixXd qb = Eigen::MatrixXd::Zero(D, D);
    Eigen::MatrixXd qp = Eigen::MatrixXd::Zero(D, D);
    Eigen::MatrixXd qf = Eigen::MatrixXd::Zero(D, D);
    for (int n = 0; n < N; ++n) {
      put_sym(qb, xi(n, m), h, 0.5 * res.bandwidth(n, m) / s.bandwidth_max);
      put_sym(qp, xi(n, m), h, 0.5 * res.server_power(n, m) / s.tx_power_max);
      put_sym(qf, xi(n, m), h, 0.5 * res.server_speed(n, m) / s.gpu_speed_max);
    }
    sdr.cap_ineqs.push_back({qb, 0.0, 1.0});
    sdr.cap_ineqs.push_back({qp, 0.0, 1.0});
    sdr.cap_ineqs.push_back({qf, 0.0, 1.0});
  }
  for (int n = 0; n < N; ++n) {
    for (int m = 0; m < M; ++m) {
      Eigen::MatrixXd q = Eigen::MatrixXd::Zero(D, D);
      put_sym(q, n, h, 0.5 * coeffs.delay_split(n));
      put_sym(q, xi(n, m), h, 0.5 * coeffs.delay_const(n, m));
      put_sym(q, n, xi(n, m), 0.5 * coeffs.delay_cross(n, m));
      sdr.delay_ineqs.push_back({q, -1.0, 0.0});  // delay - T <= 0
    }
  }
  return sdr;
}

RelaxationResult solve_relaxation(const HomogenizedSdr& sdr, double tol, int max_iter,
                                  const sdp::Solution* warm) {
  const sdp::ConicProgram prog = sdr.to_conic();
  sdp::Solution sol = sdp::solve(prog, tol, max_iter, warm);
  RelaxationResult out;
  out.infeasible = sol.infeasible;
  out.converged = sol.converged;
  out.status = sol.status;
  out.iterations = sol.iterations;
  if (sol.infeasible || sol.unbounded) return out;
  out.s_matrix = sol.psd;
  out.t = sol.t;
  out.objective = sol.objective + 0.0;
  out.primal_residual = sol.primal_residual;
  out.dual_residual = sol.dual_residual;
  // any binary-feasible point s=[phi,x,1] has ||svec(s s^T)|| = ||s||^2
  // <= 2N+1 and a delay bound below the worst finite pair delay
  double t_cap = 0.0;
  for (const auto& con : sdr.delay_ineqs) {
    double row_max = 0.0;
    for (int i = 0; i < sdr.dim; ++i)
      for (int j = i; j < sdr.dim; ++j) row_max += std::abs(con.mat(i, j)) * 2.0;
    t_cap = std::max(t_cap, row_max);
  }
  const double s_norm = 2.0 * sdr.n_users + 1.0;
  const double norm_bound = std::hypot(s_norm, t_cap);
  out.lower_bound = sdp::certified_lower_bound(prog, sol, norm_bound);
  if (!sol.converged) {
    out.status = "nonconverged: primal_residual=" + std::to_string(sol.primal_residual) +
                 " dual_residual=" + std::to_string(sol.dual_residual);
  }
  return out;
}

Eigen::MatrixXd round_association(const Eigen::MatrixXd& s_matrix, int n_users, int n_servers) {
  const int N = n_users, M = n_servers;
  const int D = N + N * M + 1;
  if (s_matrix.rows() != D || s_matrix.cols() != D)
    throw std::invalid_argument("round_association: S has the wrong dimension");

  Eigen::VectorXd q;
  const double h = s_matrix(D - 1, D - 1);
  if (h > 1e-12) {
    q = s_matrix.col(D - 1).head(D - 1) / h;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s_matrix);
    Eigen::VectorXd lead = es.eigenvectors().col(D - 1);
    if (std::abs(lead(D - 1)) <= 1e-9)
      throw std::runtime_error("round_association: degenerate relaxation solution");
    q = (lead / lead(D - 1)).head(D - 1);
  }

  Eigen::MatrixXd frac(N, M);
  for (int n = 0; n < N; ++n)
    for (int m = 0; m < M; ++m)
      frac(n, m) = std::clamp(q(N + n * M + m), 0.0, 1.0);
  for (int n = 0; n < N; ++n) {
    const double row = frac.row(n).sum();
    if (row > 1.0) frac.row(n) /= row;
  }

  // each server contributes ceil(N/M) slots; rows beyond the real users are
  // zero padding absorbed by the matching
  const int slots = (N + M - 1) / M;
  const int K = M * slots;
  Eigen::MatrixXd weight = Eigen::MatrixXd::Zero(K, K);
  for (int n = 0; n < N; ++n)
    for (int m = 0; m < M; ++m)
      for (int k = 0; k < slots; ++k) weight(n, m * slots + k) = frac(n, m);

  const std::vector<int> cols = max_weight_assignment(weight);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(N, M);
  for (int n = 0; n < N; ++n) x(n, cols[n] / slots) = 1.0;
  return x;
}

namespace {

// per-user exact minimizer of cost*phi over {phi in [0,1] : alpha + beta*phi <= t}
struct SplitChoice {
  double phi = 0.0;
  bool feasible = true;
};

SplitChoice best_split(double cost, double alpha, double beta, double t) {
  SplitChoice out;
  if (beta > 0.0) {
    const double ub = (t - alpha) / beta;
    if (ub < 0.0) return {0.0, false};
    out.phi = (cost >= 0.0) ? 0.0 : std::min(1.0, ub);
  } else if (beta < 0.0) {
    const double lb = (t - alpha) / beta;  // beta < 0 flips the inequality
    if (lb > 1.0) return {1.0, false};
    out.phi = (cost >= 0.0) ? std::clamp(lb, 0.0, 1.0) : 1.0;
  } else {
    if (alpha > t) return {0.0, false};
    out.phi = (cost >= 0.0) ? 0.0 : 1.0;
  }
  return out;
}

}  // namespace

SplitRefit refit_split(const Eigen::MatrixXd& assoc, const QcqpCoeffs& coeffs) {
  const int N = static_cast<int>(assoc.rows());
  const int M = static_cast<int>(assoc.cols());
  std::vector<int> server(N, 0);
  for (int n = 0; n < N; ++n) {
    int best = 0;
    assoc.row(n).maxCoeff(&best);
    server[n] = best;
    if (std::abs(assoc.row(n).sum() - 1.0) > 1e-9)
      throw std::invalid_argument("refit_split: association must be row-stochastic binary");
  }
  (void)M;

  Eigen::VectorXd cost(N), alpha(N), beta(N);
  double t_floor = 0.0;  // least delay bound any split can reach
  for (int n = 0; n < N; ++n) {
    const int m = server[n];
    cost(n) = coeffs.split_cost(n) + coeffs.cross_cost(n, m);
    alpha(n) = coeffs.delay_const(n, m);
    beta(n) = coeffs.delay_split(n) + coeffs.delay_cross(n, m);
    t_floor = std::max(t_floor, alpha(n) + std::min(0.0, beta(n)));
  }

  // value(T) is convex piecewise linear; its kinks sit where some user's
  // optimal split hits the box, i.e. at alpha_n or alpha_n + beta_n
  std::vector<double> candidates{t_floor};
  for (int n = 0; n < N; ++n) {
    if (alpha(n) >= t_floor) candidates.push_back(alpha(n));
    if (alpha(n) + beta(n) >= t_floor) candidates.push_back(alpha(n) + beta(n));
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  SplitRefit best;
  best.objective = kInf;
  for (const double t : candidates) {
    Eigen::VectorXd phi(N);
    bool ok = true;
    double val = coeffs.t_cost * t;
    for (int n = 0; n < N; ++n) {
      const SplitChoice ch = best_split(cost(n), alpha(n), beta(n), t);
      if (!ch.feasible) {
        ok = false;
        break;
      }
      phi(n) = ch.phi;
      val += cost(n) * ch.phi;
    }
    if (ok && val < best.objective) {
      best.objective = val;
      best.split = phi;
      best.delay_bound = t;
    }
  }
  if (!std::isfinite(best.objective)) throw std::runtime_error("refit_split: infeasible");

  // tighten T to the realized max delay (free when t_cost > 0, harmless else)
  double realized = 0.0;
  for (int n = 0; n < N; ++n) realized = std::max(realized, alpha(n) + beta(n) * best.split(n));
  // include pure local-training delay of unconnected pairs
  for (int n = 0; n < N; ++n)
    realized = std::max(realized, coeffs.delay_split(n) * best.split(n));
  best.objective += coeffs.t_cost * (realized - best.delay_bound);
  best.delay_bound = realized;
  return best;
}

}  // namespace dashf::assoc
