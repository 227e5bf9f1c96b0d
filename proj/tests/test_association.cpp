#include <doctest.h>

#include <cmath>

#include "dashf/assignment.hpp"
#include "dashf/association.hpp"
#include "dashf/driver.hpp"
#include "dashf/oracle.hpp"
#include "dashf/scenario.hpp"
#include "tests/helpers.hpp"

using namespace dashf;

namespace {

// resources with caps respected for every possible association
Allocation random_resources(const Scenario& scn, Rng& rng) {
  Allocation a = driver::initialize(scn);
  const int N = scn.n_users();
  for (int n = 0; n < N; ++n) {
    a.user_power(n) = scn.users[n].tx_power_max * rng.uniform(0.5, 1.0);
    a.user_speed(n) = scn.users[n].gpu_speed_max * rng.uniform(0.5, 1.0);
    for (int m = 0; m < scn.n_servers(); ++m) {
      a.bandwidth(n, m) = scn.servers[m].bandwidth_max / N * rng.uniform(0.3, 1.0);
      a.server_power(n, m) = scn.servers[m].tx_power_max / N * rng.uniform(0.3, 1.0);
      a.server_speed(n, m) = scn.servers[m].gpu_speed_max / N * rng.uniform(0.3, 1.0);
    }
  }
  return a;
}

Eigen::MatrixXd random_binary_assoc(int n_users, int n_servers, Rng& rng) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n_users, n_servers);
  for (int n = 0; n < n_users; ++n) x(n, rng.uniform_int(n_servers)) = 1.0;
  return x;
}

Eigen::VectorXd embed(const Eigen::MatrixXd& x, const Eigen::VectorXd& phi) {
  const int N = static_cast<int>(x.rows());
  const int M = static_cast<int>(x.cols());
  Eigen::VectorXd s(N + N * M + 1);
  s.head(N) = phi;
  for (int n = 0; n < N; ++n)
    for (int m = 0; m < M; ++m) s(N + n * M + m) = x(n, m);
  s(N + N * M) = 1.0;
  return s;
}

}  // namespace

TEST_CASE("coefficients vanish with y except the service part") {
  const Scenario scn = tests::default_scenario(4, 2, 5);
  const Allocation res = driver::initialize(scn);
  const assoc::QcqpCoeffs c = assoc::build_coeffs(scn, res, 0.0);
  CHECK(c.split_cost.cwiseAbs().maxCoeff() == 0.0);
  CHECK(c.cross_cost.cwiseAbs().maxCoeff() == 0.0);
  for (int n = 0; n < 4; ++n) {
    for (int m = 0; m < 2; ++m) {
      const double v = service_score(res.server_power(n, m), res.server_speed(n, m),
                                     res.bandwidth(n, m), scn.servers[m], scn.score_scale,
                                     scn.score_norm);
      CHECK(c.assoc_cost(n, m) == doctest::Approx(-v).epsilon(1e-12));
    }
  }
}

TEST_CASE("coefficient identity against the cost model") {
  const Scenario scn = tests::default_scenario(5, 2, 11);
  Rng rng(123);
  Allocation res = random_resources(scn, rng);
  const double y0 = scr(scn, driver::initialize(scn));
  for (int trial = 0; trial < 50; ++trial) {
    const double y = y0 * rng.uniform(0.1, 2.0);
    const assoc::QcqpCoeffs c = assoc::build_coeffs(scn, res, y);
    Allocation point = res;
    point.assoc = random_binary_assoc(5, 2, rng);
    point.split = Eigen::VectorXd::NullaryExpr(5, [&](Eigen::Index) { return rng.uniform01(); });
    point.delay_bound = rng.uniform(0.1, 100.0);
    const double via_coeffs = c.objective(point.assoc, point.split, point.delay_bound);
    const double via_model = -dinkelbach_objective(scn, point, y);
    CHECK(via_coeffs == doctest::Approx(via_model).epsilon(1e-9));
  }
}

TEST_CASE("symmetric users get identical association costs") {
  Scenario scn = tests::default_scenario(2, 2, 7);
  scn.users[1] = scn.users[0];
  scn.gain(1, 0) = scn.gain(0, 0);
  scn.gain(1, 1) = scn.gain(0, 1);
  Allocation res = driver::initialize(scn);
  res.user_power(1) = res.user_power(0);
  res.user_speed(1) = res.user_speed(0);
  const assoc::QcqpCoeffs c = assoc::build_coeffs(scn, res, 1.0);
  CHECK(c.assoc_cost(0, 0) == doctest::Approx(c.assoc_cost(1, 0)).epsilon(1e-12));
  CHECK(c.assoc_cost(0, 1) == doctest::Approx(c.assoc_cost(1, 1)).epsilon(1e-12));
}

TEST_CASE("SDR embedding reproduces the quadratic objective") {
  const Scenario scn = tests::default_scenario(4, 2, 13);
  Rng rng(77);
  const Allocation res = random_resources(scn, rng);
  const double y = scr(scn, driver::initialize(scn));
  const assoc::QcqpCoeffs c = assoc::build_coeffs(scn, res, y);
  const assoc::HomogenizedSdr sdr = assoc::build_sdr(c, scn, res);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::MatrixXd x = random_binary_assoc(4, 2, rng);
    const Eigen::VectorXd phi =
        Eigen::VectorXd::NullaryExpr(4, [&](Eigen::Index) { return rng.uniform01(); });
    const double t = rng.uniform(0.0, 50.0);
    const Eigen::VectorXd s = embed(x, phi);
    const Eigen::MatrixXd cap_s = s * s.transpose();
    const double lifted = (sdr.objective * cap_s).trace() + sdr.t_weight * t;
    const double direct = c.objective(x, phi, t);
    CHECK(lifted == doctest::Approx(direct).epsilon(1e-9));
  }
}

TEST_CASE("binary constraint matrices vanish exactly on binary points") {
  const Scenario scn = tests::default_scenario(3, 2, 17);
  Rng rng(5);
  const Allocation res = random_resources(scn, rng);
  const assoc::QcqpCoeffs c = assoc::build_coeffs(scn, res, 1.0);
  const assoc::HomogenizedSdr sdr = assoc::build_sdr(c, scn, res);
  const Eigen::MatrixXd x = random_binary_assoc(3, 2, rng);
  const Eigen::VectorXd phi = Eigen::VectorXd::Constant(3, 0.25);
  const Eigen::MatrixXd cap_s = embed(x, phi) * embed(x, phi).transpose();
  for (const auto& eq : sdr.binary_eqs) CHECK((eq.mat * cap_s).trace() == 0.0);
  for (const auto& eq : sdr.rowsum_eqs) CHECK((eq.mat * cap_s).trace() == doctest::Approx(1.0));
  // split box and caps hold at feasible points
  for (const auto& in : sdr.split_box) CHECK((in.mat * cap_s).trace() <= in.rhs + 1e-12);
  for (const auto& in : sdr.cap_ineqs) CHECK((in.mat * cap_s).trace() <= in.rhs + 1e-9);
}

TEST_CASE("constraint family counts") {
  const Scenario scn = tests::default_scenario(3, 2, 19);
  const Allocation res = driver::initialize(scn);
  const assoc::QcqpCoeffs c = assoc::build_coeffs(scn, res, 1.0);
  const assoc::HomogenizedSdr sdr = assoc::build_sdr(c, scn, res);
  CHECK(sdr.binary_eqs.size() == 6);
  CHECK(sdr.rowsum_eqs.size() == 3);
  CHECK(sdr.split_box.size() == 6);
  CHECK(sdr.cap_ineqs.size() == 6);
  CHECK(sdr.delay_ineqs.size() == 6);
  CHECK(sdr.family_constraint_count() == 27);
  CHECK(sdr.dim == 3 + 6 + 1);
}

TEST_CASE("single-pair relaxation is tight and rank one") {
  const Scenario scn = tests::default_scenario(1, 1, 23);
  const Allocation res = driver::initialize(scn);
  const double y = scr(scn, res);
  const assoc::QcqpCoeffs c = assoc::build_coeffs(scn, res, y);
  const assoc::HomogenizedSdr sdr = assoc::build_sdr(c, scn, res);
  const assoc::RelaxationResult rel = assoc::solve_relaxation(sdr, 1e-8);
  REQUIRE(rel.converged);
  const Eigen::MatrixXd x = assoc::round_association(rel.s_matrix, 1, 1);
  CHECK(x(0, 0) == 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rel.s_matrix);
  const Eigen::VectorXd ev = es.eigenvalues();
  CHECK(ev(ev.size() - 2) / ev(ev.size() - 1) < 1e-5);
  // tight: relaxation value matches the refit optimum
  const assoc::SplitRefit refit = assoc::refit_split(x, c);
  CHECK(rel.objective + sdr.t_weight * rel.t ==
        doctest::Approx(refit.objective).epsilon(1e-4));
}

TEST_CASE("relaxation lower-bounds the exhaustive optimum") {
  Rng rng(31);
  for (std::uint64_t seed = 100; seed < 108; ++seed) {
    const Scenario scn = tests::default_scenario(3, 2, seed);
    const Allocation res = random_resources(scn, rng);
    const double y = scr(scn, driver::initialize(scn)) * rng.uniform(0.5, 1.5);
    const assoc::QcqpCoeffs c = assoc::build_coeffs(scn, res, y);
    const assoc::HomogenizedSdr sdr = assoc::build_sdr(c, scn, res);
    const assoc::RelaxationResult rel = assoc::solve_relaxation(sdr, 1e-6);
    REQUIRE(rel.converged);

    const oracle::AssociationSearchResult bf = oracle::brute_force_association(scn, res, y);
    REQUIRE(bf.found);
    CHECK(rel.lower_bound <= bf.objective + 1e-6);

    // rounded solution can't beat the exhaustive optimum
    const Eigen::MatrixXd x = assoc::round_association(rel.s_matrix, 3, 2);
    const assoc::SplitRefit refit = assoc::refit_split(x, c);
    CHECK(refit.objective >= bf.objective - 1e-6 * std::abs(bf.objective));
  }
}

TEST_CASE("rounding recovers an exact binary embedding") {
  Rng rng(41);
  const Eigen::MatrixXd x = random_binary_assoc(4, 2, rng);
  const Eigen::VectorXd phi = Eigen::VectorXd::Constant(4, 0.5);
  const Eigen::VectorXd s = embed(x, phi);
  const Eigen::MatrixXd cap_s = s * s.transpose();
  const Eigen::MatrixXd back = assoc::round_association(cap_s, 4, 2);
  CHECK((back - x).cwiseAbs().maxCoeff() == 0.0);
  // scale invariance of the matching weights
  const Eigen::MatrixXd scaled = assoc::round_association(3.7 * cap_s, 4, 2);
  CHECK((scaled - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fractional rows go to the heavier server") {
  const int N = 2, M = 2;
  const int D = N + N * M + 1;
  Eigen::VectorXd s(D);
  s << 0.5, 0.5,          // splits
      0.4, 0.6,           // user 0 prefers server 1
      0.7, 0.3,           // user 1 prefers server 0
      1.0;
  const Eigen::MatrixXd x = assoc::round_association(s * s.transpose(), N, M);
  CHECK(x(0, 1) == 1.0);
  CHECK(x(1, 0) == 1.0);
}

TEST_CASE("degenerate relaxation output is rejected") {
  const int D = 1 + 1 + 1;
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(D, D);
  bad(0, 0) = 1.0;  // no homogenization mass anywhere
  CHECK_THROWS(assoc::round_association(bad, 1, 1));
}

TEST_CASE("split refit endpoint cases") {
  assoc::QcqpCoeffs c;
  c.y = 1.0;
  c.t_cost = 1.0;
  c.split_cost = Eigen::VectorXd::Constant(2, 1.0);
  c.assoc_cost = Eigen::MatrixXd::Zero(2, 1);
  c.cross_cost = Eigen::MatrixXd::Zero(2, 1);
  c.delay_split = Eigen::VectorXd::Zero(2);
  c.delay_const = Eigen::MatrixXd::Zero(2, 1);
  c.delay_cross = Eigen::MatrixXd::Zero(2, 1);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(2, 1);

  SUBCASE("positive costs and no delay push the split to zero") {
    const assoc::SplitRefit r = assoc::refit_split(x, c);
    CHECK(r.split.cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.delay_bound == 0.0);
  }
  SUBCASE("negative cost and negligible delay pressure push the split to one") {
    c.split_cost = Eigen::VectorXd::Constant(2, -1.0);
    c.t_cost = 1e-12;
    c.delay_split = Eigen::VectorXd::Constant(2, 1.0);  // delay = phi
    const assoc::SplitRefit r = assoc::refit_split(x, c);
    CHECK(r.split.minCoeff() == doctest::Approx(1.0));
    CHECK(r.delay_bound == doctest::Approx(1.0));
  }
}

TEST_CASE("split refit matches a two-dimensional grid oracle") {
  const Scenario scn = tests::default_scenario(2, 2, 43);
  Rng rng(47);
  const Allocation res = random_resources(scn, rng);
  const double y = scr(scn, driver::initialize(scn));
  const assoc::QcqpCoeffs c = assoc::build_coeffs(scn, res, y);
  const Eigen::MatrixXd x = random_binary_assoc(2, 2, rng);
  int server_of[2];
  for (int n = 0; n < 2; ++n) server_of[n] = x(n, 0) > 0.5 ? 0 : 1;
  const assoc::SplitRefit r = assoc::refit_split(x, c);

  double best = 1e300;
  const int steps = 1000;
  Eigen::VectorXd phi(2);
  for (int i = 0; i <= steps; ++i) {
    phi(0) = static_cast<double>(i) / steps;
    for (int j = 0; j <= steps; ++j) {
      phi(1) = static_cast<double>(j) / steps;
      double t = 0.0;
      for (int n = 0; n < 2; ++n) t = std::max(t, c.pair_delay(x, phi, n, server_of[n]));
      best = std::min(best, c.objective(x, phi, t));
    }
  }
  CHECK(std::abs(r.objective - best) <= 1e-3 * std::max(1.0, std::abs(best)));
  CHECK(r.objective <= best + 1e-9 * std::abs(best));  // exact refit can only be better
}

TEST_CASE("refit keeps the allocation feasible") {
  Rng rng(53);
  for (std::uint64_t seed = 7; seed < 12; ++seed) {
    const Scenario scn = tests::default_scenario(5, 2, seed);
    Allocation res = random_resources(scn, rng);
    const double y = scr(scn, driver::initialize(scn));
    const assoc::QcqpCoeffs c = assoc::build_coeffs(scn, res, y);
    res.assoc = random_binary_assoc(5, 2, rng);
    const assoc::SplitRefit r = assoc::refit_split(res.assoc, c);
    res.split = r.split;
    res.delay_bound = r.delay_bound;
    CHECK(check_feasibility(scn, res).empty());
  }
}

TEST_CASE("infeasible caps produce an infeasibility diagnostic") {
  Scenario scn = tests::default_scenario(2, 1, 59);
  scn.servers[0].bandwidth_max = 1e-3;  // far below any offered bandwidth
  Allocation res = driver::initialize(scn);
  res.bandwidth.setConstant(1e6);
  const assoc::QcqpCoeffs c = assoc::build_coeffs(scn, res, 1.0);
  const assoc::HomogenizedSdr sdr = assoc::build_sdr(c, scn, res);
  const assoc::RelaxationResult rel = assoc::solve_relaxation(sdr, 1e-6, 20000);
  CHECK((rel.infeasible || !rel.converged));
}
