#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dashf/driver.hpp"
#include "dashf/model.hpp"
#include "dashf/scenario.hpp"
#include "tests/helpers.hpp"

using namespace dashf;

TEST_CASE("link rate basics") {
  // b=1 Hz with g*p/sigma2 = 1: log2(2) = 1
  CHECK(link_rate(1.0, 1.0, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(link_rate(5.0, 0.0, 1.0, 1.0) == 0.0);
  CHECK(link_rate(0.0, 5.0, 1.0, 1.0) == 0.0);
  // hand-evaluated value, frozen: b=1 MHz, p=0.2 W, g=1e-10, default noise psd
  const double sigma2 = dbm_to_watt(-134.0);
  CHECK(sigma2 == doctest::Approx(3.9810717055349695e-17).epsilon(1e-15));
  CHECK(link_rate(1e6, 0.2, 1e-10, sigma2) ==
        doctest::Approx(587247.1568774263).epsilon(1e-9));
  CHECK_THROWS_AS(link_rate(1.0, 1.0, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(link_rate(1.0, 1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("link rate monotone in power and bandwidth") {
  const double sigma2 = dbm_to_watt(-134.0);
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const double b = rng.uniform(1e3, 1e7);
    const double p = rng.uniform(1e-3, 0.2);
    const double g = std::pow(10.0, rng.uniform(-13.0, -8.0));
    const double r = link_rate(b, p, g, sigma2);
    CHECK(link_rate(b, p * 1.1, g, sigma2) >= r);
    CHECK(link_rate(b * 1.1, p, g, sigma2) >= r);
    CHECK(r > 0.0);
  }
}

TEST_CASE("service score at the caps and at zero") {
  ServerProfile s;
  s.bandwidth_max = 10e6;
  s.tx_power_max = 10.0;
  s.gpu_speed_max = 1372.8e12;
  const double w1 = 10000.0 / M_LN2;
  const double w2 = 1.0 / 3.0;
  // all three at cap: w2 normalizes the sum to one and w1 cancels ln 2
  CHECK(service_score(10.0, 1372.8e12, 10e6, s, w1, w2) ==
        doctest::Approx(10000.0).epsilon(1e-12));
  CHECK(service_score(0.0, 0.0, 0.0, s, w1, w2) == 0.0);
  // half of each cap, frozen independent evaluation: 10000*log2(1.5)
  CHECK(service_score(5.0, 686.4e12, 5e6, s, w1, w2) ==
        doctest::Approx(5849.625007211562).epsilon(1e-12));
}

TEST_CASE("service score is jointly concave") {
  ServerProfile s;
  s.bandwidth_max = 10e6;
  s.tx_power_max = 10.0;
  s.gpu_speed_max = 1372.8e12;
  const double w1 = 10000.0 / M_LN2, w2 = 1.0 / 3.0;
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const double u[3] = {rng.uniform01() * 10.0, rng.uniform01() * 1372.8e12,
                         rng.uniform01() * 10e6};
    const double v[3] = {rng.uniform01() * 10.0, rng.uniform01() * 1372.8e12,
                         rng.uniform01() * 10e6};
    const double lam = rng.uniform01();
    const double mixed =
        service_score(lam * u[0] + (1 - lam) * v[0], lam * u[1] + (1 - lam) * v[1],
                      lam * u[2] + (1 - lam) * v[2], s, w1, w2);
    const double bound = lam * service_score(u[0], u[1], u[2], s, w1, w2) +
                         (1 - lam) * service_score(v[0], v[1], v[2], s, w1, w2);
    CHECK(mixed >= bound - 1e-9);
  }
}

TEST_CASE("phase delays obey the split and association factors") {
  const Scenario scn = tests::default_scenario(4, 2, 3);
  Allocation a = driver::initialize(scn);

  a.split(1) = 1.0;  // everything trained locally: no server phases
  const int m1 = a.server_of(1);
  const PhaseDelays d1 = phase_delays(scn, a, 1, m1);
  CHECK(d1.server_train == 0.0);
  CHECK(d1.downlink == 0.0);
  CHECK(d1.uplink > 0.0);

  // unconnected pair: only the local phase remains
  const int off = 1 - m1;
  const PhaseDelays d0 = phase_delays(scn, a, 1, off);
  CHECK(d0.uplink == 0.0);
  CHECK(d0.server_train == 0.0);
  CHECK(d0.downlink == 0.0);
  CHECK(d0.local_train == doctest::Approx(d1.local_train));
}

TEST_CASE("phase values match a scalar recomputation") {
  const Scenario scn = tests::default_scenario(3, 2, 17);
  Allocation a = driver::initialize(scn);
  for (int n = 0; n < 3; ++n) {
    const int m = a.server_of(n);
    const UserProfile& u = scn.users[n];
    const ServerProfile& s = scn.servers[m];
    const double bits = u.adapter_params * scn.bits_per_param;
    const double r_up = a.bandwidth(n, m) *
                        std::log2(1.0 + scn.gain(n, m) * a.user_power(n) /
                                            (scn.noise_psd * a.bandwidth(n, m)));
    const double r_down = a.bandwidth(n, m) *
                          std::log2(1.0 + scn.gain(n, m) * a.server_power(n, m) /
                                              (scn.noise_psd * a.bandwidth(n, m)));
    const PhaseDelays d = phase_delays(scn, a, n, m);
    CHECK(d.local_train == doctest::Approx(u.flops_per_param * 0.5 * u.adapter_params * u.epochs /
                                           a.user_speed(n))
                               .epsilon(1e-12));
    CHECK(d.uplink == doctest::Approx(0.5 * bits / r_up).epsilon(1e-12));
    CHECK(d.server_train == doctest::Approx(u.flops_per_param * 0.5 * u.adapter_params * s.epochs /
                                            a.server_speed(n, m))
                                .epsilon(1e-12));
    CHECK(d.downlink == doctest::Approx(0.5 * bits / r_down).epsilon(1e-12));

    const PhaseEnergies e = phase_energies(scn, a, n, m);
    CHECK(e.local_train == doctest::Approx(u.epochs * u.switched_cap * 0.5 * u.adapter_params *
                                           u.flops_per_param * a.user_speed(n) * a.user_speed(n))
                               .epsilon(1e-12));
    CHECK(e.uplink == doctest::Approx(a.user_power(n) * d.uplink).epsilon(1e-12));
    CHECK(e.server_train ==
          doctest::Approx(s.epochs * s.switched_cap * 0.5 * u.adapter_params * u.flops_per_param *
                          a.server_speed(n, m) * a.server_speed(n, m))
              .epsilon(1e-12));
    CHECK(e.downlink == doctest::Approx(a.server_power(n, m) * d.downlink).epsilon(1e-12));
  }
}

TEST_CASE("phase energies vanish with their factors") {
  const Scenario scn = tests::default_scenario(3, 2, 5);
  Allocation a = driver::initialize(scn);
  a.split(0) = 0.0;
  const PhaseEnergies e = phase_energies(scn, a, 0, a.server_of(0));
  CHECK(e.local_train == 0.0);
  const int off = 1 - a.server_of(0);
  const PhaseEnergies e0 = phase_energies(scn, a, 0, off);
  CHECK(e0.uplink == 0.0);
  CHECK(e0.server_train == 0.0);
  CHECK(e0.downlink == 0.0);
}

TEST_CASE("evaluate matches an independent re-summation") {
  const Scenario scn = tests::default_scenario(5, 2, 23);
  const Allocation a = driver::initialize(scn);
  const CostBreakdown c = evaluate(scn, a);

  double delay_max = 0.0, energy = 0.0, service = 0.0;
  for (int n = 0; n < scn.n_users(); ++n) {
    for (int m = 0; m < scn.n_servers(); ++m) {
      const PhaseDelays d = phase_delays(scn, a, n, m);
      delay_max = std::max(delay_max, d.total());
      const PhaseEnergies e = phase_energies(scn, a, n, m);
      energy += e.uplink + e.server_train + e.downlink;
      if (a.assoc(n, m) > 0.0)
        service += service_score(a.server_power(n, m), a.server_speed(n, m), a.bandwidth(n, m),
                                 scn.servers[m], scn.score_scale, scn.score_norm);
    }
    energy += phase_energies(scn, a, n, 0).local_train;
  }
  CHECK(c.delay_total == doctest::Approx(delay_max).epsilon(1e-12));
  CHECK(c.energy_total == doctest::Approx(energy).epsilon(1e-12));
  CHECK(c.service_total == doctest::Approx(service).epsilon(1e-12));
}

TEST_CASE("two symmetric users get identical costs") {
  Scenario scn = tests::default_scenario(2, 1, 3);
  scn.gain(0, 0) = scn.gain(1, 0) = 1e-10;
  scn.users[1] = scn.users[0];
  const Allocation a = driver::initialize(scn);
  const CostBreakdown c = evaluate(scn, a);
  CHECK(c.t_up(0, 0) == doctest::Approx(c.t_up(1, 0)).epsilon(1e-12));
  CHECK(c.e_server(0, 0) == doctest::Approx(c.e_server(1, 0)).epsilon(1e-12));
}

TEST_CASE("scr basics and homogeneity") {
  CostBreakdown c;
  c.service_total = 1.0;
  c.delay_total = 1.0;
  c.energy_total = 0.0;
  CHECK(scr(c, 1.0, 1.0) == doctest::Approx(1.0));
  c.service_total = 3.0;
  CHECK(scr(c, 1.0, 1.0) == doctest::Approx(3.0));

  const Scenario scn = tests::default_scenario(4, 2, 9);
  const Allocation a = driver::initialize(scn);
  const CostBreakdown cb = evaluate(scn, a);
  const double base = scr(cb, scn.weight_delay, scn.weight_energy);
  const double scaled = scr(cb, 4.0 * scn.weight_delay, 4.0 * scn.weight_energy);
  CHECK(scaled == doctest::Approx(base / 4.0).epsilon(1e-14));

  c.service_total = 1.0;
  c.delay_total = 0.0;
  c.energy_total = 0.0;
  CHECK_THROWS_AS(scr(c, 1.0, 1.0), std::domain_error);
}

TEST_CASE("feasibility flags the right constraints") {
  const Scenario scn = tests::default_scenario(4, 2, 31);
  Allocation a = driver::initialize(scn);
  CHECK(check_feasibility(scn, a).empty());

  SUBCASE("bandwidth cap") {
    for (int n = 0; n < 4; ++n) a.bandwidth(n, 0) = scn.servers[0].bandwidth_max * 1.01;
    a.assoc.setZero();
    for (int n = 0; n < 4; ++n) a.assoc(n, 0) = 1.0;
    a.delay_bound = evaluate(scn, a).delay_total;
    bool found = false;
    for (const auto& v : check_feasibility(scn, a))
      if (v.constraint == "3e") found = true;
    CHECK(found);
  }
  SUBCASE("association row sum") {
    a.assoc(0, 0) = 1.0;
    a.assoc(0, 1) = 1.0;
    bool found = false;
    for (const auto& v : check_feasibility(scn, a))
      if (v.constraint == "3c") found = true;
    CHECK(found);
  }
  SUBCASE("split box") {
    a.split(2) = 1.5;
    a.delay_bound = evaluate(scn, a).delay_total;
    bool found = false;
    for (const auto& v : check_feasibility(scn, a))
      if (v.constraint == "3d") found = true;
    CHECK(found);
  }
}
