#include <doctest.h>

#include <cmath>
#include <sstream>

#include "dashf/scenario.hpp"
#include "dashf/sdp.hpp"

using namespace dashf;

namespace {

// random symmetric matrix with entries in [-1, 1]
Eigen::MatrixXd random_sym(Rng& rng, int d) {
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = rng.uniform(-1.0, 1.0);
  return m;
}

Eigen::MatrixXd random_psd(Rng& rng, int d) {
  Eigen::MatrixXd m = random_sym(rng, d);
  return m * m.transpose();
}

}  // namespace

TEST_CASE("svec/smat preserve trace inner products") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2 + rng.uniform_int(5);
    const Eigen::MatrixXd a = random_sym(rng, d);
    const Eigen::MatrixXd b = random_sym(rng, d);
    CHECK(sdp::svec(a).dot(sdp::svec(b)) == doctest::Approx((a * b).trace()).epsilon(1e-12));
    CHECK((sdp::smat(sdp::svec(a)) - a).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("psd projection") {
  Rng rng(4);
  const Eigen::MatrixXd p = random_psd(rng, 5);
  CHECK((sdp::project_psd(p) - p).cwiseAbs().maxCoeff() < 1e-9);

  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = -1.0;
  const Eigen::MatrixXd proj = sdp::project_psd(d);
  CHECK(proj(0, 0) == doctest::Approx(1.0));
  CHECK(proj(1, 1) == doctest::Approx(0.0).epsilon(1e-12));

  // Frobenius optimality against random PSD competitors
  const Eigen::MatrixXd m = random_sym(rng, 4);
  const Eigen::MatrixXd best = sdp::project_psd(m);
  const double dist = (m - best).norm();
  for (int i = 0; i < 100; ++i) {
    const Eigen::MatrixXd other = random_psd(rng, 4);
    CHECK(dist <= (m - other).norm() + 1e-9);
  }
}

TEST_CASE("one-by-one block: minimize trace with a pin") {
  sdp::ConicProgram prog;
  prog.block_dim = 1;
  prog.objective = Eigen::MatrixXd::Ones(1, 1);
  prog.equalities.push_back({Eigen::MatrixXd::Ones(1, 1), 1.0});
  const sdp::Solution sol = sdp::solve(prog, 1e-8);
  REQUIRE(sol.converged);
  CHECK(sol.psd(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("diagonal objective picks the small eigenvalue") {
  // min Tr(diag(1,2) S) with Tr(S)=1: optimum 1 at S = e1 e1^T
  sdp::ConicProgram prog;
  prog.block_dim = 2;
  prog.objective = Eigen::Vector2d(1.0, 2.0).asDiagonal();
  prog.equalities.push_back({Eigen::MatrixXd::Identity(2, 2), 1.0});
  const sdp::Solution sol = sdp::solve(prog, 1e-8);
  REQUIRE(sol.converged);
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(sol.psd(0, 0) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("scalar variable participates") {
  // min T subject to Tr(E11 S) - T <= 0 and Tr(E11 S) = 2: optimum T = 2
  sdp::ConicProgram prog;
  prog.block_dim = 2;
  prog.objective = Eigen::MatrixXd::Zero(2, 2);
  prog.t_weight = 1.0;
  Eigen::MatrixXd e11 = Eigen::MatrixXd::Zero(2, 2);
  e11(0, 0) = 1.0;
  prog.equalities.push_back({e11, 2.0});
  prog.inequalities.push_back({e11, -1.0, 0.0});
  const sdp::Solution sol = sdp::solve(prog, 1e-8);
  REQUIRE(sol.converged);
  CHECK(sol.t == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("random instances with a KKT-constructed optimum") {
  // Build (S*, y*, Z*) with S* Z* = 0 and derive the objective from dual
  // feasibility; the optimal value is then known exactly by construction.
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 5;
    // rank-2 optimal S* and a complementary PSD dual slack Z*
    Eigen::MatrixXd basis = random_sym(rng, d);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(basis);
    Eigen::MatrixXd u = es.eigenvectors();
    Eigen::VectorXd s_ev = Eigen::VectorXd::Zero(d), z_ev = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < 2; ++i) s_ev(i) = 0.5 + rng.uniform01();
    for (int i = 2; i < d; ++i) z_ev(i) = 0.5 + rng.uniform01();
    const Eigen::MatrixXd s_star = u * s_ev.asDiagonal() * u.transpose();
    const Eigen::MatrixXd z_star = u * z_ev.asDiagonal() * u.transpose();

    const int n_eq = 3;
    std::vector<Eigen::MatrixXd> mats;
    Eigen::VectorXd y_star(n_eq);
    sdp::ConicProgram prog;
    prog.block_dim = d;
    for (int i = 0; i < n_eq; ++i) {
      mats.push_back(random_sym(rng, d));
      y_star(i) = rng.uniform(-1.0, 1.0);
      prog.equalities.push_back({mats.back(), (mats.back() * s_star).trace()});
    }
    // C = Z* + sum y_i A_i makes (S*, y*, Z*) a KKT point
    Eigen::MatrixXd c = z_star;
    for (int i = 0; i < n_eq; ++i) c += y_star(i) * mats[i];
    prog.objective = c;

    const double opt = (c * s_star).trace();
    const sdp::Solution sol = sdp::solve(prog, 1e-7, 100000);
    REQUIRE(sol.converged);
    CHECK(sol.objective == doctest::Approx(opt).epsilon(1e-5));
    // weak duality: primal >= dual up to the solved tolerance
    CHECK(sol.objective >= sol.dual_objective - 1e-5 * (1.0 + std::abs(opt)));
  }
}

TEST_CASE("returned block is symmetric PSD and residuals shrink") {
  Rng rng(21);
  sdp::ConicProgram prog;
  prog.block_dim = 6;
  prog.objective = random_sym(rng, 6);
  for (int i = 0; i < 4; ++i) {
    const Eigen::MatrixXd a = random_sym(rng, 6);
    prog.equalities.push_back({a, (a * random_psd(rng, 6)).trace()});
  }
  prog.inequalities.push_back({Eigen::MatrixXd::Identity(6, 6), 0.0, 50.0});
  const sdp::Solution sol = sdp::solve(prog, 1e-6);
  REQUIRE(sol.converged);
  CHECK((sol.psd - sol.psd.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sol.psd);
  CHECK(es.eigenvalues().minCoeff() >= -1e-6);
  CHECK(std::max(sol.primal_residual, sol.dual_residual) <= sol.first_residual + 1e-12);
}

TEST_CASE("inconsistent equalities produce an infeasibility diagnostic") {
  sdp::ConicProgram prog;
  prog.block_dim = 2;
  prog.objective = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd e11 = Eigen::MatrixXd::Zero(2, 2);
  e11(0, 0) = 1.0;
  prog.equalities.push_back({e11, 1.0});
  prog.equalities.push_back({e11, 2.0});
  const sdp::Solution sol = sdp::solve(prog, 1e-6, 20000);
  CHECK_FALSE(sol.converged);
  CHECK((sol.infeasible || sol.status != "solved"));
}

TEST_CASE("program dump is parseable text") {
  sdp::ConicProgram prog;
  prog.block_dim = 2;
  prog.objective = Eigen::MatrixXd::Identity(2, 2);
  prog.equalities.push_back({Eigen::MatrixXd::Identity(2, 2), 1.0});
  std::ostringstream os;
  prog.dump(os);
  CHECK(os.str().find("block_dim 2") != std::string::npos);
  CHECK(os.str().find("equalities 1") != std::string::npos);
}
