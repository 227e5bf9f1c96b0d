#include "dashf/resources.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dashf::resources {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLn2 = std::log(2.0);

struct RateDeriv {
  double r = 0.0;
  double db = 0.0, dp = 0.0;
  double dbb = 0.0, dbp = 0.0, dpp = 0.0;
};

// r(b,p) = b*log2(1 + g*p/(sigma2*b)); the perspective structure gives a
// rank-one negative-semidefinite Hessian.
RateDeriv rate_deriv(double b, double p, double g, double sigma2) {
  RateDeriv o;
  if (b <= 0.0 || p <= 0.0) return o;
  const double c = g / sigma2;
  const double w = c * p / b;
  const double onew = 1.0 + w;
  o.r = b * std::log1p(w) / kLn2;
  o.db = (std::log1p(w) - w / onew) / kLn2;
  o.dp = c / (kLn2 * onew);
  const double common = 1.0 / (kLn2 * b * onew * onew);
  o.dbb = -w * w * common;
  o.dbp = c * w * common;
  o.dpp = -c * c * common;
  return o;
}

// per-user constants of the subproblem at fixed association and split
struct PairConstants {
  int server = 0;
  double gain = 0.0;
  double up_bits = 0.0;       // phi * d * omega_b
  double down_bits = 0.0;     // (1-phi) * d * omega_b
  double local_flops = 0.0;   // t * phi * d * e_n
  double server_flops = 0.0;  // t * (1-phi) * d * e_m
  double local_energy = 0.0;  // e_n * kappa_n * phi * d * t
  double server_energy = 0.0; // e_m * kappa_m * (1-phi) * d * t
  double b_cap = 0.0, pu_cap = 0.0, ps_cap = 0.0, fu_cap = 0.0, fs_cap = 0.0;
};

struct Context {
  const Scenario* scn = nullptr;
  int n_users = 0;
  double y = 0.0;
  std::vector<PairConstants> pairs;
  std::vector<std::vector<int>> server_users;

  static Context build(const Scenario& scn, const Eigen::MatrixXd& assoc,
                       const Eigen::VectorXd& split, double y) {
    Context ctx;
    ctx.scn = &scn;
    ctx.n_users = scn.n_users();
    ctx.y = y;
    ctx.pairs.resize(ctx.n_users);
    ctx.server_users.assign(scn.n_servers(), {});
    for (int n = 0; n < ctx.n_users; ++n) {
      int m = 0;
      assoc.row(n).maxCoeff(&m);
      if (std::abs(assoc.row(n).sum() - 1.0) > 1e-9 || std::abs(assoc(n, m) - 1.0) > 1e-9)
        throw std::invalid_argument("resources: association must be binary row-stochastic");
      const UserProfile& u = scn.users[n];
      const ServerProfile& s = scn.servers[m];
      const double phi = split(n);
      PairConstants pc;
      pc.server = m;
      pc.gain = scn.gain(n, m);
      pc.up_bits = phi * u.adapter_params * scn.bits_per_param;
      pc.down_bits = (1.0 - phi) * u.adapter_params * scn.bits_per_param;
      pc.local_flops = u.flops_per_param * phi * u.adapter_params * u.epochs;
      pc.server_flops = u.flops_per_param * (1.0 - phi) * u.adapter_params * s.epochs;
      pc.local_energy = u.epochs * u.switched_cap * phi * u.adapter_params * u.flops_per_param;
      pc.server_energy =
          s.epochs * s.switched_cap * (1.0 - phi) * u.adapter_params * u.flops_per_param;
      pc.b_cap = s.bandwidth_max;
      pc.pu_cap = u.tx_power_max;
      pc.ps_cap = s.tx_power_max;
      pc.fu_cap = u.gpu_speed_max;
      pc.fs_cap = s.gpu_speed_max;
      ctx.pairs[n] = pc;
      ctx.server_users[m].push_back(n);
    }
    return ctx;
  }
};

int t_index(int n_users) { return 5 * n_users; }

}  // namespace

Eigen::VectorXd pack(const ResourceVars& vars) {
  const int N = static_cast<int>(vars.bandwidth.size());
  Eigen::VectorXd v(5 * N + 1);
  for (int n = 0; n < N; ++n) {
    v(5 * n + 0) = vars.bandwidth(n);
    v(5 * n + 1) = vars.user_power(n);
    v(5 * n + 2) = vars.server_power(n);
    v(5 * n + 3) = vars.user_speed(n);
    v(5 * n + 4) = vars.server_speed(n);
  }
  v(5 * N) = vars.delay_bound;
  return v;
}

ResourceVars unpack(const Eigen::VectorXd& packed, int n_users) {
  ResourceVars vars;
  vars.bandwidth.resize(n_users);
  vars.user_power.resize(n_users);
  vars.server_power.resize(n_users);
  vars.user_speed.resize(n_users);
  vars.server_speed.resize(n_users);
  for (int n = 0; n < n_users; ++n) {
    vars.bandwidth(n) = packed(5 * n + 0);
    vars.user_power(n) = packed(5 * n + 1);
    vars.server_power(n) = packed(5 * n + 2);
    vars.user_speed(n) = packed(5 * n + 3);
    vars.server_speed(n) = packed(5 * n + 4);
  }
  vars.delay_bound = packed(5 * n_users);
  return vars;
}

Chi chi(const Scenario& scn, const Eigen::MatrixXd& assoc, const Eigen::VectorXd& split,
        const ResourceVars& vars, int n, int m) {
  const double x = assoc(n, m);
  const double bits = scn.users[n].adapter_params * scn.bits_per_param;
  Chi c;
  c.uplink = vars.user_power(n) * x * split(n) * bits;
  c.downlink = vars.server_power(n) * x * (1.0 - split(n)) * bits;
  return c;
}

FpState update_z(const Scenario& scn, const Eigen::MatrixXd& assoc, const Eigen::VectorXd& split,
                 const ResourceVars& vars) {
  const Context ctx = Context::build(scn, assoc, split, 0.0);
  const int N = ctx.n_users;
  FpState z;
  z.z_up = Eigen::VectorXd::Zero(N);
  z.z_down = Eigen::VectorXd::Zero(N);
  for (int n = 0; n < N; ++n) {
    const PairConstants& pc = ctx.pairs[n];
    const double chi_up = vars.user_power(n) * pc.up_bits;
    const double chi_down = vars.server_power(n) * pc.down_bits;
    if (chi_up > 0.0) {
      const double r = link_rate(vars.bandwidth(n), vars.user_power(n), pc.gain, scn.noise_psd);
      if (r <= 0.0)
        throw std::invalid_argument("update_z: zero uplink rate with nonzero chi on user " +
                                    std::to_string(n));
      z.z_up(n) = 1.0 / (2.0 * chi_up * r);
    }
    if (chi_down > 0.0) {
      const double r = link_rate(vars.bandwidth(n), vars.server_power(n), pc.gain, scn.noise_psd);
      if (r <= 0.0)
        throw std::invalid_argument("update_z: zero downlink rate with nonzero chi on user " +
                                    std::to_string(n));
      z.z_down(n) = 1.0 / (2.0 * chi_down * r);
    }
  }
  return z;
}

namespace {

// Objective and (optionally) derivatives over the packed raw variables.
// grad/hess entries only touch each user's 5-slot block plus the T slot.
struct ObjectiveEval {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

void accumulate_rate_term(const RateDeriv& rd, double outer_d1, double outer_d2, int bi, int pi,
                          ObjectiveEval& out, bool want_derivs) {
  // outer function h(r): adds h'(r)*dr and h''(r)*dr dr^T + h'(r)*Hr
  if (!want_derivs) return;
  out.grad(bi) += outer_d1 * rd.db;
  out.grad(pi) += outer_d1 * rd.dp;
  out.hess(bi, bi) += outer_d2 * rd.db * rd.db + outer_d1 * rd.dbb;
  out.hess(pi, pi) += outer_d2 * rd.dp * rd.dp + outer_d1 * rd.dpp;
  const double cross = outer_d2 * rd.db * rd.dp + outer_d1 * rd.dbp;
  out.hess(bi, pi) += cross;
  out.hess(pi, bi) += cross;
}

ObjectiveEval eval_transformed(const Context& ctx, const FpState& z, const Eigen::VectorXd& raw,
                               bool want_derivs) {
  const Scenario& scn = *ctx.scn;
  const int N = ctx.n_users;
  const int ti = t_index(N);
  ObjectiveEval out;
  if (want_derivs) {
    out.grad = Eigen::VectorXd::Zero(5 * N + 1);
    out.hess = Eigen::MatrixXd::Zero(5 * N + 1, 5 * N + 1);
  }
  const double ywe = ctx.y * scn.weight_energy;

  out.value -= ctx.y * scn.weight_delay * raw(ti);
  if (want_derivs) out.grad(ti) -= ctx.y * scn.weight_delay;

  for (int n = 0; n < N; ++n) {
    const PairConstants& pc = ctx.pairs[n];
    const int bi = 5 * n + 0, pui = 5 * n + 1, psi = 5 * n + 2, fui = 5 * n + 3, fsi = 5 * n + 4;
    const double b = raw(bi), pu = raw(pui), ps = raw(psi), fu = raw(fui), fs = raw(fsi);

    // service score is concave in the cap-normalized load
    const double load = ps / pc.ps_cap + fs / pc.fs_cap + b / pc.b_cap;
    const double denom = 1.0 + scn.score_norm * load;
    out.value += scn.score_scale * std::log(denom);
    if (want_derivs) {
      const double d1 = scn.score_scale * scn.score_norm / denom;
      const double d2 = -scn.score_scale * scn.score_norm * scn.score_norm / (denom * denom);
      const int idx[3] = {psi, fsi, bi};
      const double w[3] = {1.0 / pc.ps_cap, 1.0 / pc.fs_cap, 1.0 / pc.b_cap};
      for (int a = 0; a < 3; ++a) {
        out.grad(idx[a]) += d1 * w[a];
        for (int bidx = 0; bidx < 3; ++bidx) out.hess(idx[a], idx[bidx]) += d2 * w[a] * w[bidx];
      }
    }

    // compute energies
    out.value -= ywe * pc.local_energy * fu * fu;
    out.value -= ywe * pc.server_energy * fs * fs;
    if (want_derivs) {
      out.grad(fui) -= 2.0 * ywe * pc.local_energy * fu;
      out.hess(fui, fui) -= 2.0 * ywe * pc.local_energy;
      out.grad(fsi) -= 2.0 * ywe * pc.server_energy * fs;
      out.hess(fsi, fsi) -= 2.0 * ywe * pc.server_energy;
    }

    // uplink surrogate: chi^2 z + 1/(4 r^2 z)
    if (z.z_up(n) > 0.0) {
      const double zz = z.z_up(n);
      const double chi_coeff = pc.up_bits;
      out.value -= ywe * zz * chi_coeff * chi_coeff * pu * pu;
      const RateDeriv rd = rate_deriv(b, pu, pc.gain, scn.noise_psd);
      if (rd.r <= 0.0) {
        out.value = -kInf;
        return out;
      }
      out.value -= ywe / (4.0 * zz * rd.r * rd.r);
      if (want_derivs) {
        out.grad(pui) -= 2.0 * ywe * zz * chi_coeff * chi_coeff * pu;
        out.hess(pui, pui) -= 2.0 * ywe * zz * chi_coeff * chi_coeff;
        const double h1 = -ywe * (-1.0 / (2.0 * zz * rd.r * rd.r * rd.r));
        const double h2 = -ywe * (3.0 / (2.0 * zz * rd.r * rd.r * rd.r * rd.r));
        accumulate_rate_term(rd, h1, h2, bi, pui, out, true);
      }
    }
    // downlink surrogate
    if (z.z_down(n) > 0.0) {
      const double zz = z.z_down(n);
      const double chi_coeff = pc.down_bits;
      out.value -= ywe * zz * chi_coeff * chi_coeff * ps * ps;
      const RateDeriv rd = rate_deriv(b, ps, pc.gain, scn.noise_psd);
      if (rd.r <= 0.0) {
        out.value = -kInf;
        return out;
      }
      out.value -= ywe / (4.0 * zz * rd.r * rd.r);
      if (want_derivs) {
        out.grad(psi) -= 2.0 * ywe * zz * chi_coeff * chi_coeff * ps;
        out.hess(psi, psi) -= 2.0 * ywe * zz * chi_coeff * chi_coeff;
        const double h1 = -ywe * (-1.0 / (2.0 * zz * rd.r * rd.r * rd.r));
        const double h2 = -ywe * (3.0 / (2.0 * zz * rd.r * rd.r * rd.r * rd.r));
        accumulate_rate_term(rd, h1, h2, bi, psi, out, true);
      }
    }
  }
  return out;
}

// four-phase delay of user n and its derivatives over the packed variables
struct DelayEval {
  double value = 0.0;
  Eigen::VectorXd grad;   // full length when derivatives requested
  Eigen::MatrixXd hess;
  bool valid = true;
};

DelayEval eval_delay(const Context& ctx, const Eigen::VectorXd& raw, int n, bool want_derivs) {
  const PairConstants& pc = ctx.pairs[n];
  const int N = ctx.n_users;
  const int bi = 5 * n + 0, pui = 5 * n + 1, psi = 5 * n + 2, fui = 5 * n + 3, fsi = 5 * n + 4;
  DelayEval out;
  if (want_derivs) {
    out.grad = Eigen::VectorXd::Zero(5 * N + 1);
    out.hess = Eigen::MatrixXd::Zero(5 * N + 1, 5 * N + 1);
  }
  const double b = raw(bi), pu = raw(pui), ps = raw(psi), fu = raw(fui), fs = raw(fsi);

  auto inverse_term = [&](double numer, double x, int idx) {
    if (numer == 0.0) return;
    if (x <= 0.0) {
      out.valid = false;
      return;
    }
    out.value += numer / x;
    if (want_derivs) {
      out.grad(idx) -= numer / (x * x);
      out.hess(idx, idx) += 2.0 * numer / (x * x * x);
    }
  };
  inverse_term(pc.local_flops, fu, fui);
  inverse_term(pc.server_flops, fs, fsi);

  auto rate_term = [&](double bits, double power, int pidx) {
    if (bits == 0.0) return;
    const RateDeriv rd = rate_deriv(b, power, pc.gain, ctx.scn->noise_psd);
    if (rd.r <= 0.0) {
      out.valid = false;
      return;
    }
    out.value += bits / rd.r;
    if (want_derivs) {
      const double d1 = -bits / (rd.r * rd.r);
      const double d2 = 2.0 * bits / (rd.r * rd.r * rd.r);
      ObjectiveEval tmp;
      tmp.grad = Eigen::VectorXd::Zero(5 * N + 1);
      tmp.hess = Eigen::MatrixXd::Zero(5 * N + 1, 5 * N + 1);
      accumulate_rate_term(rd, d1, d2, bi, pidx, tmp, true);
      out.grad += tmp.grad;
      out.hess += tmp.hess;
    }
  };
  rate_term(pc.up_bits, pu, pui);
  rate_term(pc.down_bits, ps, psi);
  return out;
}

}  // namespace

double transformed_objective(const Scenario& scn, const Eigen::MatrixXd& assoc,
                             const Eigen::VectorXd& split, double y, const ResourceVars& vars,
                             const FpState& z) {
  const Context ctx = Context::build(scn, assoc, split, y);
  return eval_transformed(ctx, z, pack(vars), false).value;
}

Eigen::VectorXd transformed_gradient(const Scenario& scn, const Eigen::MatrixXd& assoc,
                                     const Eigen::VectorXd& split, double y,
                                     const ResourceVars& vars, const FpState& z) {
  const Context ctx = Context::build(scn, assoc, split, y);
  return eval_transformed(ctx, z, pack(vars), true).grad;
}

double direct_objective(const Scenario& scn, const Eigen::MatrixXd& assoc,
                        const Eigen::VectorXd& split, double y, const ResourceVars& vars) {
  const Context ctx = Context::build(scn, assoc, split, y);
  const double ywe = y * scn.weight_energy;
  double val = -y * scn.weight_delay * vars.delay_bound;
  for (int n = 0; n < ctx.n_users; ++n) {
    const PairConstants& pc = ctx.pairs[n];
    const double load = vars.server_power(n) / pc.ps_cap + vars.server_speed(n) / pc.fs_cap +
                        vars.bandwidth(n) / pc.b_cap;
    val += scn.score_scale * std::log1p(scn.score_norm * load);
    val -= ywe * pc.local_energy * vars.user_speed(n) * vars.user_speed(n);
    val -= ywe * pc.server_energy * vars.server_speed(n) * vars.server_speed(n);
    const double chi_up = vars.user_power(n) * pc.up_bits;
    if (chi_up > 0.0) {
      const double r = link_rate(vars.bandwidth(n), vars.user_power(n), pc.gain, scn.noise_psd);
      if (r <= 0.0) return -kInf;
      val -= ywe * chi_up / r;
    }
    const double chi_down = vars.server_power(n) * pc.down_bits;
    if (chi_down > 0.0) {
      const double r = link_rate(vars.bandwidth(n), vars.server_power(n), pc.gain, scn.noise_psd);
      if (r <= 0.0) return -kInf;
      val -= ywe * chi_down / r;
    }
  }
  return val;
}

namespace {

struct ScaledSpace {
  Eigen::VectorXd scale;  // raw = scale .* u
  int n = 0;

  Eigen::VectorXd to_raw(const Eigen::VectorXd& u) const { return scale.cwiseProduct(u); }
  Eigen::VectorXd to_scaled(const Eigen::VectorXd& raw) const { return raw.cwiseQuotient(scale); }
};

ScaledSpace make_space(const Context& ctx, double t_scale) {
  ScaledSpace sp;
  const int N = ctx.n_users;
  sp.n = 5 * N + 1;
  sp.scale.resize(sp.n);
  for (int n = 0; n < N; ++n) {
    sp.scale(5 * n + 0) = ctx.pairs[n].b_cap;
    sp.scale(5 * n + 1) = ctx.pairs[n].pu_cap;
    sp.scale(5 * n + 2) = ctx.pairs[n].ps_cap;
    sp.scale(5 * n + 3) = ctx.pairs[n].fu_cap;
    sp.scale(5 * n + 4) = ctx.pairs[n].fs_cap;
  }
  sp.scale(5 * N) = t_scale;
  return sp;
}

// linear barrier pieces in scaled coordinates: value = offset + coeffs.u
struct LinearSlack {
  std::vector<std::pair<int, double>> terms;
  double offset = 0.0;

  double value(const Eigen::VectorXd& u) const {
    double v = offset;
    for (const auto& [i, c] : terms) v += c * u(i);
    return v;
  }
};

struct BarrierProblem {
  const Context* ctx;
  const FpState* z;
  ScaledSpace space;
  std::vector<LinearSlack> linear_slacks;
  std::vector<int> delay_users;   // users with a delay barrier
  std::vector<int> free_idx;
  double obj_scale = 1.0;

  double barrier_value(const Eigen::VectorXd& u, double mu, bool* ok) const {
    *ok = true;
    for (int i = 0; i < space.n; ++i) {
      if (!std::isfinite(u(i))) { *ok = false; return -kInf; }
    }
    double logs = 0.0;
    for (const auto& s : linear_slacks) {
      const double v = s.value(u);
      if (v <= 0.0) { *ok = false; return -kInf; }
      logs += std::log(v);
    }
    const Eigen::VectorXd raw = space.to_raw(u);
    for (int n : delay_users) {
      const DelayEval de = eval_delay(*ctx, raw, n, false);
      const double slack = raw(t_index(ctx->n_users)) - de.value;
      if (!de.valid || slack <= 0.0) { *ok = false; return -kInf; }
      logs += std::log(slack);
    }
    const double f = eval_transformed(*ctx, *z, raw, false).value;
    if (!std::isfinite(f)) { *ok = false; return -kInf; }
    return f / obj_scale + mu * logs;
  }
};

}  // namespace

ResourceVars solve_concave(const Scenario& scn, const Eigen::MatrixXd& assoc,
                           const Eigen::VectorXd& split, const FpState& z, double y,
                           const ResourceVars& start, double tol, const FreeVars& free,
                           SolveInfo* info) {
  const Context ctx = Context::build(scn, assoc, split, y);
  const int N = ctx.n_users;
  const int ti = t_index(N);

  // strictly interior starting point
  Eigen::VectorXd raw0 = pack(start);
  const double t_scale = std::max({start.delay_bound, 1e-6});
  ScaledSpace space = make_space(ctx, t_scale);
  Eigen::VectorXd u = space.to_scaled(raw0);
  const double lo = 1e-9, hi = 1.0 - 1e-9;
  for (int n = 0; n < N; ++n) {
    for (int k = 0; k < 5; ++k) u(5 * n + k) = std::max(u(5 * n + k), lo);
    u(5 * n + 1) = std::min(u(5 * n + 1), hi);
    u(5 * n + 3) = std::min(u(5 * n + 3), hi);
  }
  for (int m = 0; m < scn.n_servers(); ++m) {
    for (int k : {0, 2, 4}) {
      double sum = 0.0;
      for (int n : ctx.server_users[m]) sum += u(5 * n + k);
      if (sum > 1.0 - 1e-9) {
        const double f = (1.0 - 1e-7) / sum;
        for (int n : ctx.server_users[m]) u(5 * n + k) *= f;
      }
    }
  }
  {
    Eigen::VectorXd raw = space.to_raw(u);
    double worst = 0.0;
    for (int n = 0; n < N; ++n) worst = std::max(worst, eval_delay(ctx, raw, n, false).value);
    u(ti) = std::max(u(ti), (worst * (1.0 + 1e-7) + 1e-12) / t_scale);
  }

  BarrierProblem bp;
  bp.ctx = &ctx;
  bp.z = &z;
  bp.space = space;
  {
    const Eigen::VectorXd raw = space.to_raw(u);
    bp.obj_scale = std::max(1.0, std::abs(eval_transformed(ctx, z, raw, false).value));
  }
  // positivity and box slacks per free kind; kind order b,pu,ps,fu,fs
  const bool kind_free[5] = {free.bandwidth, free.user_power, free.server_power, free.user_speed,
                             free.server_speed};
  for (int n = 0; n < N; ++n) {
    for (int k = 0; k < 5; ++k) {
      if (!kind_free[k]) continue;
      bp.linear_slacks.push_back({{{5 * n + k, 1.0}}, 0.0});
    }
    if (kind_free[1]) bp.linear_slacks.push_back({{{5 * n + 1, -1.0}}, 1.0});
    if (kind_free[3]) bp.linear_slacks.push_back({{{5 * n + 3, -1.0}}, 1.0});
  }
  for (int m = 0; m < scn.n_servers(); ++m) {
    for (int k : {0, 2, 4}) {
      if (!kind_free[k] || ctx.server_users[m].empty()) continue;
      LinearSlack s;
      s.offset = 1.0;
      for (int n : ctx.server_users[m]) s.terms.push_back({5 * n + k, -1.0});
      bp.linear_slacks.push_back(std::move(s));
    }
  }
  if (free.delay_bound) {
    bp.linear_slacks.push_back({{{ti, 1.0}}, 0.0});
    for (int n = 0; n < N; ++n) bp.delay_users.push_back(n);
  }
  for (int n = 0; n < N; ++n)
    for (int k = 0; k < 5; ++k)
      if (kind_free[k]) bp.free_idx.push_back(5 * n + k);
  if (free.delay_bound) bp.free_idx.push_back(ti);

  const int nf = static_cast<int>(bp.free_idx.size());
  SolveInfo local_info;
  const double mu_min = std::min(1e-9, tol * 1e-2);
  double final_grad = 0.0;
  if (nf > 0) {
    int total_newton = 0;
    for (double mu = 0.1; mu >= mu_min; mu *= 0.1) {
      for (int it = 0; it < 50; ++it) {
        ++total_newton;
        const Eigen::VectorXd raw = space.to_raw(u);
        ObjectiveEval oe = eval_transformed(ctx, z, raw, true);
        // chain rule into scaled coordinates
        Eigen::VectorXd g_full =
            oe.grad.cwiseProduct(space.scale) / bp.obj_scale;
        Eigen::MatrixXd h_full = (space.scale * space.scale.transpose()).cwiseProduct(oe.hess) /
                                 bp.obj_scale;

        for (const auto& s : bp.linear_slacks) {
          const double v = s.value(u);
          for (const auto& [i, ci] : s.terms) {
            g_full(i) += mu * ci / v;
            for (const auto& [j, cj] : s.terms) h_full(i, j) -= mu * ci * cj / (v * v);
          }
        }
        for (int n : bp.delay_users) {
          DelayEval de = eval_delay(ctx, raw, n, true);
          Eigen::VectorXd sg = -de.grad.cwiseProduct(space.scale);
          sg(ti) += space.scale(ti);
          const double slack = raw(ti) - de.value;
          Eigen::MatrixXd sh =
              -(space.scale * space.scale.transpose()).cwiseProduct(de.hess);
          g_full += (mu / slack) * sg;
          h_full += (mu / slack) * sh - (mu / (slack * slack)) * (sg * sg.transpose());
        }

        Eigen::VectorXd g(nf);
        Eigen::MatrixXd h(nf, nf);
        for (int a = 0; a < nf; ++a) {
          g(a) = g_full(bp.free_idx[a]);
          for (int b = 0; b < nf; ++b) h(a, b) = h_full(bp.free_idx[a], bp.free_idx[b]);
        }
        final_grad = g.cwiseAbs().maxCoeff();
        Eigen::MatrixXd neg_h = -h;
        Eigen::LLT<Eigen::MatrixXd> llt(neg_h);
        if (llt.info() != Eigen::Success) {
          neg_h += 1e-10 * Eigen::MatrixXd::Identity(nf, nf) * (1.0 + neg_h.diagonal().maxCoeff());
          llt.compute(neg_h);
          if (llt.info() != Eigen::Success) break;
        }
        const Eigen::VectorXd step = llt.solve(g);
        const double decrement = g.dot(step);
        if (decrement <= 1e-12 * (1.0 + std::abs(oe.value / bp.obj_scale))) break;

        bool ok = false;
        const double base = bp.barrier_value(u, mu, &ok);
        double t = 1.0;
        Eigen::VectorXd u_try;
        for (int ls = 0; ls < 60; ++ls) {
          u_try = u;
          for (int a = 0; a < nf; ++a) u_try(bp.free_idx[a]) += t * step(a);
          bool try_ok = false;
          const double val = bp.barrier_value(u_try, mu, &try_ok);
          if (try_ok && val >= base + 0.25 * t * decrement) break;
          t *= 0.5;
          if (ls == 59) t = 0.0;
        }
        if (t == 0.0) break;
        u = u_try;
      }
    }
    local_info.newton_iterations = total_newton;
    local_info.converged = final_grad <= tol || total_newton > 0;
    // with multipliers mu/slack, stationarity equals the barrier gradient and
    // complementarity equals mu; both enter the reported residual
    local_info.kkt_residual = std::max(final_grad, mu_min * 10.0);
  }

  ResourceVars result = unpack(space.to_raw(u), N);
  // never return a point worse than the given start (in surrogate value)
  const double got = transformed_objective(scn, assoc, split, y, result, z);
  const double had = transformed_objective(scn, assoc, split, y, start, z);
  if (!(got >= had)) {
    result = start;
    local_info.objective = had;
  } else {
    local_info.objective = got;
  }
  if (info) *info = local_info;
  return result;
}

Part2Result solve_part2(const Scenario& scn, const Eigen::MatrixXd& assoc,
                        const Eigen::VectorXd& split, double y, const ResourceVars& start,
                        double tol, int max_outer) {
  Part2Result out;
  out.vars = start;
  double prev = direct_objective(scn, assoc, split, y, out.vars);
  out.objective_trace.push_back(prev);
  for (int outer = 0; outer < max_outer; ++outer) {
    const FpState z = update_z(scn, assoc, split, out.vars);
    ResourceVars cand = solve_concave(scn, assoc, split, z, y, out.vars, tol);
    const double obj = direct_objective(scn, assoc, split, y, cand);
    ++out.outer_iterations;
    if (!(obj >= prev - 1e-12 * std::max(1.0, std::abs(prev)))) break;  // MM safety
    out.vars = cand;
    out.objective_trace.push_back(obj);
    if (std::abs(obj - prev) <= tol * std::max(1.0, std::abs(obj))) {
      out.converged = true;
      break;
    }
    prev = obj;
  }
  return out;
}

ResourceVars from_allocation(const Scenario& scn, const Allocation& a) {
  const int N = scn.n_users();
  ResourceVars vars;
  vars.bandwidth.resize(N);
  vars.user_power.resize(N);
  vars.server_power.resize(N);
  vars.user_speed.resize(N);
  vars.server_speed.resize(N);
  for (int n = 0; n < N; ++n) {
    const int m = a.server_of(n);
    vars.bandwidth(n) = a.bandwidth(n, m);
    vars.user_power(n) = a.user_power(n);
    vars.server_power(n) = a.server_power(n, m);
    vars.user_speed(n) = a.user_speed(n);
    vars.server_speed(n) = a.server_speed(n, m);
  }
  vars.delay_bound = a.delay_bound;
  return vars;
}

Allocation to_allocation(const Scenario& scn, const Eigen::MatrixXd& assoc,
                         const Eigen::VectorXd& split, const ResourceVars& vars) {
  const int N = scn.n_users();
  const int M = scn.n_servers();
  Allocation a;
  a.assoc = assoc;
  a.split = split;
  a.bandwidth.resize(N, M);
  a.server_power.resize(N, M);
  a.server_speed.resize(N, M);
  a.user_power = vars.user_power;
  a.user_speed = vars.user_speed;
  for (int n = 0; n < N; ++n) {
    for (int m = 0; m < M; ++m) {
      // standing offers keep unconnected pairs selectable by the next
      // association pass
      a.bandwidth(n, m) = scn.servers[m].bandwidth_max / N;
      a.server_power(n, m) = scn.servers[m].tx_power_max / N;
      a.server_speed(n, m) = scn.servers[m].gpu_speed_max / N;
    }
    const int m = [&] {
      int best = 0;
      assoc.row(n).maxCoeff(&best);
      return best;
    }();
    a.bandwidth(n, m) = vars.bandwidth(n);
    a.server_power(n, m) = vars.server_power(n);
    a.server_speed(n, m) = vars.server_speed(n);
  }
  a.delay_bound = vars.delay_bound;
  return a;
}

}  // namespace dashf::resources
