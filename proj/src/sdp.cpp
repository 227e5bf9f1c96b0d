#include "dashf/sdp.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace dashf::sdp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
const double kSqrt2 = std::sqrt(2.0);

int svec_dim(int d) { return d * (d + 1) / 2; }
}  // namespace

Eigen::VectorXd svec(const Eigen::MatrixXd& m) {
  const int d = static_cast<int>(m.rows());
  Eigen::VectorXd v(svec_dim(d));
  int k = 0;
  for (int c = 0; c < d; ++c)
    for (int r = 0; r <= c; ++r) v(k++) = (r == c) ? m(r, c) : kSqrt2 * m(r, c);
  return v;
}

Eigen::MatrixXd smat(const Eigen::VectorXd& v) {
  const int n = static_cast<int>(v.size());
  const int d = static_cast<int>((std::sqrt(8.0 * n + 1.0) - 1.0) / 2.0 + 0.5);
  if (svec_dim(d) != n) throw std::invalid_argument("smat: not a svec length");
  Eigen::MatrixXd m(d, d);
  int k = 0;
  for (int c = 0; c < d; ++c) {
    for (int r = 0; r <= c; ++r) {
      const double x = (r == c) ? v(k) : v(k) / kSqrt2;
      m(r, c) = x;
      m(c, r) = x;
      ++k;
    }
  }
  return m;
}

Eigen::MatrixXd project_psd(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (sym + sym.transpose()));
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

void ConicProgram::validate() const {
  if (block_dim < 1) throw std::invalid_argument("conic: block_dim must be >= 1");
  auto check_sym = [&](const Eigen::MatrixXd& m, const char* what) {
    if (m.rows() != block_dim || m.cols() != block_dim)
      throw std::invalid_argument(std::string("conic: bad matrix shape in ") + what);
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + m.cwiseAbs().maxCoeff()))
      throw std::invalid_argument(std::string("conic: matrix not symmetric in ") + what);
  };
  check_sym(objective, "objective");
  for (const auto& e : equalities) check_sym(e.mat, "equality");
  for (const auto& i : inequalities) check_sym(i.mat, "inequality");
}

void ConicProgram::dump(std::ostream& os) const {
  os.precision(17);
  auto put = [&](const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) os << m(r, c) << (c + 1 < m.cols() ? " " : "\n");
    }
  };
  os << "block_dim " << block_dim << "\n";
  os << "t_weight " << t_weight << "\n";
  os << "objective\n";
  put(objective);
  os << "equalities " << equalities.size() << "\n";
  for (const auto& e : equalities) {
    os << "rhs " << e.rhs << "\n";
    put(e.mat);
  }
  os << "inequalities " << inequalities.size() << "\n";
  for (const auto& i : inequalities) {
    os << "t_coeff " << i.t_coeff << " rhs " << i.rhs << "\n";
    put(i.mat);
  }
}

namespace {

// Conic data in solver form: min c.x  s.t.  A x + s = b,  s in {0}^p * R+^q * PSD.
// x = [svec(S); T]. The PSD rows are -I on the svec block.
struct Assembled {
  int dim = 0;        // D
  int sd = 0;         // svec length
  int n = 0;          // sd + 1
  int p = 0, q = 0;   // equality / inequality counts
  int m = 0;          // p + q + sd
  Eigen::MatrixXd A;
  Eigen::VectorXd b, c;
};

Assembled assemble(const ConicProgram& prog) {
  Assembled out;
  out.dim = prog.block_dim;
  out.sd = svec_dim(prog.block_dim);
  out.n = out.sd + 1;
  out.p = static_cast<int>(prog.equalities.size());
  out.q = static_cast<int>(prog.inequalities.size());
  out.m = out.p + out.q + out.sd;
  out.A.setZero(out.m, out.n);
  out.b.setZero(out.m);
  out.c.setZero(out.n);
  out.c.head(out.sd) = svec(prog.objective);
  out.c(out.sd) = prog.t_weight;
  for (int i = 0; i < out.p; ++i) {
    out.A.row(i).head(out.sd) = svec(prog.equalities[i].mat).transpose();
    out.b(i) = prog.equalities[i].rhs;
  }
  for (int j = 0; j < out.q; ++j) {
    out.A.row(out.p + j).head(out.sd) = svec(prog.inequalities[j].mat).transpose();
    out.A(out.p + j, out.sd) = prog.inequalities[j].t_coeff;
    out.b(out.p + j) = prog.inequalities[j].rhs;
  }
  out.A.block(out.p + out.q, 0, out.sd, out.sd) = -Eigen::MatrixXd::Identity(out.sd, out.sd);
  return out;
}

struct Scaling {
  Eigen::VectorXd row;   // length m, uniform over the PSD block
  Eigen::VectorXd col;   // length n
  double sigma = 1.0;    // extra scalar on b
  double rho = 1.0;      // extra scalar on c
};

Scaling equilibrate(Assembled& s) {
  const int m = s.m, n = s.n, p = s.p, q = s.q;
  Scaling sc;
  sc.row.setOnes(m);
  sc.col.setOnes(n);
  for (int pass = 0; pass < 10; ++pass) {
    Eigen::VectorXd rnorm(m), cnorm(n);
    for (int i = 0; i < m; ++i) rnorm(i) = s.A.row(i).cwiseAbs().maxCoeff();
    // one scalar for the whole PSD block keeps the cone intact
    const double psd_norm = rnorm.tail(s.sd).maxCoeff();
    for (int i = p + q; i < m; ++i) rnorm(i) = psd_norm;
    for (int i = 0; i < m; ++i) {
      const double f = rnorm(i) > 1e-12 ? 1.0 / std::sqrt(rnorm(i)) : 1.0;
      s.A.row(i) *= f;
      sc.row(i) *= f;
    }
    for (int j = 0; j < n; ++j) cnorm(j) = s.A.col(j).cwiseAbs().maxCoeff();
    for (int j = 0; j < n; ++j) {
      const double f = cnorm(j) > 1e-12 ? 1.0 / std::sqrt(cnorm(j)) : 1.0;
      s.A.col(j) *= f;
      sc.col(j) *= f;
    }
  }
  s.b = sc.row.asDiagonal() * s.b;
  s.c = sc.col.asDiagonal() * s.c;
  sc.sigma = 1.0 / std::max(s.b.norm(), 1e-9);
  sc.rho = 1.0 / std::max(s.c.norm(), 1e-9);
  s.b *= sc.sigma;
  s.c *= sc.rho;
  return sc;
}

// Applies (I + [[I, A^T], [-A, I]])-style KKT solves via the Woodbury identity,
// exploiting that the PSD rows contribute a diagonal to A^T A.
struct KktSolver {
  const Assembled& prob;
  Eigen::VectorXd d0_inv;        // diagonal of (I + A^T A) minus the G^T G part
  Eigen::MatrixXd g;             // eq+ineq rows
  Eigen::MatrixXd g_d0inv;       // G * D0^-1
  Eigen::LLT<Eigen::MatrixXd> cap_llt;
  Eigen::VectorXd gx, gy;        // cached solve of [c; b]
  double gamma = 0.0;

  explicit KktSolver(const Assembled& s) : prob(s) {
    const int n = s.n, k = s.p + s.q;
    Eigen::VectorXd d0(n);
    for (int j = 0; j < n; ++j) {
      const double psd_entry = (j < s.sd) ? s.A(s.p + s.q + j, j) : 0.0;
      d0(j) = 1.0 + psd_entry * psd_entry;
    }
    d0_inv = d0.cwiseInverse();
    g = s.A.topRows(k);
    g_d0inv = g * d0_inv.asDiagonal();
    Eigen::MatrixXd cap = Eigen::MatrixXd::Identity(k, k) + g_d0inv * g.transpose();
    cap_llt.compute(cap);
    if (cap_llt.info() != Eigen::Success)
      throw std::runtime_error("sdp: KKT factorization failed");
    solve_pair(s.c, s.b, gx, gy);
    gamma = 1.0 + s.c.dot(gx) + s.b.dot(gy);
  }

  Eigen::VectorXd h_solve(const Eigen::VectorXd& w) const {
    Eigen::VectorXd t = g_d0inv * w;
    Eigen::VectorXd u = cap_llt.solve(t);
    return d0_inv.asDiagonal() * w - g_d0inv.transpose() * u;
  }

  void solve_pair(const Eigen::VectorXd& rx, const Eigen::VectorXd& ry, Eigen::VectorXd& zx,
                  Eigen::VectorXd& zy) const {
    zx = h_solve(rx - prob.A.transpose() * ry);
    zy = ry + prob.A * zx;
  }

  // z = (I + Q)^-1 w for the embedding matrix Q = [[0, A^T, c], [-A, 0, b], [-c^T, -b^T, 0]].
  void apply(const Eigen::VectorXd& wx, const Eigen::VectorXd& wy, double wt, Eigen::VectorXd& zx,
             Eigen::VectorXd& zy, double& zt) const {
    Eigen::VectorXd px, py;
    solve_pair(wx, wy, px, py);
    zt = (wt + prob.c.dot(px) + prob.b.dot(py)) / gamma;
    zx = px - zt * gx;
    zy = py - zt * gy;
  }
};

struct RawResiduals {
  double pres = kInf, dres = kInf, gap = kInf;
  double pobj = 0.0, dobj = 0.0;
  double max() const { return std::max(pres, std::max(dres, gap)); }
};

}  // namespace

Solution solve(const ConicProgram& prog, double tol, int max_iter, const Solution* warm) {
  prog.validate();
  Assembled raw = assemble(prog);
  Assembled scaled = raw;
  const Scaling sc = equilibrate(scaled);
  const KktSolver kkt(scaled);

  const int n = scaled.n, m = scaled.m, p = scaled.p, q = scaled.q, sd = scaled.sd;
  const int dim = scaled.dim;

  Eigen::VectorXd ux = Eigen::VectorXd::Zero(n), uy = Eigen::VectorXd::Zero(m);
  double ut = 1.0;
  Eigen::VectorXd vx = Eigen::VectorXd::Zero(n), vy = Eigen::VectorXd::Zero(m);
  double vt = 0.0;
  if (warm && warm->warm_x.size() == n && warm->warm_y.size() == m && warm->warm_s.size() == m) {
    // map the previous original-scale point into the current scaling
    ux = (sc.col.cwiseInverse().asDiagonal() * warm->warm_x) * sc.sigma;
    uy = (sc.row.asDiagonal() * warm->warm_y) * sc.rho;
    vy = (sc.row.asDiagonal() * warm->warm_s) * sc.sigma;
    ut = 1.0;
  }

  const double alpha = 1.6;  // over-relaxation
  Solution out;
  out.status = "max_iter";
  auto unscale_x = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return (sc.col.asDiagonal() * x) / sc.sigma;
  };
  auto unscale_y = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd {
    return (sc.row.asDiagonal() * y) / sc.rho;
  };
  auto unscale_s = [&](const Eigen::VectorXd& s) -> Eigen::VectorXd {
    return (sc.row.cwiseInverse().asDiagonal() * s) / sc.sigma;
  };

  auto raw_residuals = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& s) {
    RawResiduals r;
    r.pres = (raw.A * x + s - raw.b).norm() / (1.0 + raw.b.norm());
    r.dres = (raw.A.transpose() * y + raw.c).norm() / (1.0 + raw.c.norm());
    r.pobj = raw.c.dot(x);
    r.dobj = -raw.b.dot(y);
    r.gap = std::abs(r.pobj - r.dobj) / (1.0 + std::abs(r.pobj) + std::abs(r.dobj));
    return r;
  };

  Eigen::VectorXd tx, ty, bx, by, wx, wy;
  double tt = 0.0;
  bool first_check = true;
  int iter = 0;
  for (iter = 1; iter <= max_iter; ++iter) {
    // affine step
    kkt.apply(ux + vx, uy + vy, ut + vt, tx, ty, tt);
    // over-relaxed reflection, then cone projection
    bx = alpha * tx + (1.0 - alpha) * ux - vx;
    by = alpha * ty + (1.0 - alpha) * uy - vy;
    const double bt = alpha * tt + (1.0 - alpha) * ut - vt;

    wx = bx;  // x block is free
    wy = by;
    wy.segment(p, q) = wy.segment(p, q).cwiseMax(0.0);
    {
      Eigen::MatrixXd ypsd = smat(wy.tail(sd));
      wy.tail(sd) = svec(project_psd(ypsd));
    }
    const double wt = std::max(bt, 0.0);

    vx = wx - bx;
    vy = wy - by;
    vt = wt - bt;
    ux = wx;
    uy = wy;
    ut = wt;

    if (iter % 25 == 0 || iter == max_iter) {
      const double unorm = std::sqrt(ux.squaredNorm() + uy.squaredNorm() + ut * ut);
      if (!std::isfinite(unorm) || unorm > 1e14) {
        out.status = "diverged";
        break;
      }
      if (ut > 1e-11 * std::max(1.0, unorm)) {
        Eigen::VectorXd x = unscale_x(ux / ut);
        Eigen::VectorXd y = unscale_y(uy / ut);
        Eigen::VectorXd s = unscale_s(vy / ut);
        const RawResiduals r = raw_residuals(x, y, s);
        if (first_check) {
          out.first_residual = r.max();
          first_check = false;
        }
        if (r.max() <= tol) {
          out.converged = true;
          out.status = "solved";
          out.iterations = iter;
          out.primal_residual = r.pres;
          out.dual_residual = r.dres;
          out.gap = r.gap;
          out.psd = project_psd(smat(s.tail(sd)));  // cone side: exactly PSD
          out.t = x(sd);
          out.objective = r.pobj;
          out.dual_objective = r.dobj;
          out.dual_eq = y.head(p);
          out.dual_ineq = y.segment(p, q);
          out.dual_psd = smat(y.tail(sd));
          out.warm_x = x;
          out.warm_y = y;
          out.warm_s = s;
          return out;
        }
      } else {
        // homogeneous certificates: tau collapsed
        Eigen::VectorXd y = unscale_y(uy);
        Eigen::VectorXd x = unscale_x(ux);
        Eigen::VectorXd s = unscale_s(vy);
        const double by_val = raw.b.dot(y);
        const double cx_val = raw.c.dot(x);
        if (by_val < -1e-12 &&
            (raw.A.transpose() * y).norm() <= 1e-6 * std::abs(by_val) * (1.0 + raw.b.norm())) {
          out.infeasible = true;
          out.status = "infeasible";
          out.iterations = iter;
          return out;
        }
        if (cx_val < -1e-12 &&
            (raw.A * x + s).norm() <= 1e-6 * std::abs(cx_val) * (1.0 + raw.c.norm())) {
          out.unbounded = true;
          out.status = "unbounded";
          out.iterations = iter;
          return out;
        }
      }
    }
  }

  // nonconverged: report the best available scaled-back iterate
  const double tau = std::max(ut, 1e-11);
  Eigen::VectorXd x = unscale_x(ux / tau);
  Eigen::VectorXd y = unscale_y(uy / tau);
  Eigen::VectorXd s = unscale_s(vy / tau);
  const RawResiduals r = raw_residuals(x, y, s);
  out.iterations = std::min(iter, max_iter);
  out.primal_residual = r.pres;
  out.dual_residual = r.dres;
  out.gap = r.gap;
  out.psd = project_psd(smat(s.tail(sd)));
  out.t = x(sd);
  out.objective = r.pobj;
  out.dual_objective = r.dobj;
  out.dual_eq = y.head(p);
  out.dual_ineq = y.segment(p, q);
  out.dual_psd = smat(y.tail(sd));
  out.warm_x = x;
  out.warm_y = y;
  out.warm_s = s;
  out.converged = false;
  if (out.status != "diverged") out.status = "max_iter";
  (void)dim;
  return out;
}

double certified_lower_bound(const ConicProgram& prog, const Solution& sol, double norm_bound) {
  if (sol.infeasible || sol.unbounded) return -kInf;
  const Assembled raw = assemble(prog);
  const int p = raw.p, q = raw.q, sd = raw.sd;
  if (sol.dual_eq.size() != p || sol.dual_ineq.size() != q) return -kInf;
  // force exact dual-cone membership, then apply weak duality with a norm
  // correction for the remaining dual infeasibility
  Eigen::VectorXd y(raw.m);
  y.head(p) = sol.dual_eq;
  y.segment(p, q) = sol.dual_ineq.cwiseMax(0.0);
  y.tail(sd) = svec(project_psd(sol.dual_psd));
  const double dual_obj = -raw.b.dot(y);
  const double dres = (raw.A.transpose() * y + raw.c).norm();
  return dual_obj - dres * norm_bound;
}

}  // namespace dashf::sdp
