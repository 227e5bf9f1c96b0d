#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "dashf/driver.hpp"
#include "dashf/scenario.hpp"
#include "tests/helpers.hpp"

using namespace dashf;

TEST_CASE("adapter parameter count") {
  CHECK(adapter_param_count(1, 1, 1) == 4.0);
  CHECK(adapter_param_count(4, 2, 4) == 22.0);
  CHECK_THROWS_AS(adapter_param_count(4, 0, 4), std::invalid_argument);
}

TEST_CASE("path loss") {
  CHECK(path_loss_db(1.0) == doctest::Approx(128.1).epsilon(1e-14));
  CHECK(path_loss_db(0.1) == doctest::Approx(90.5).epsilon(1e-12));
  CHECK(path_loss_db(10.0) == doctest::Approx(165.7).epsilon(1e-12));
  CHECK_THROWS_AS(path_loss_db(0.0), std::invalid_argument);
}

TEST_CASE("generation is deterministic per seed") {
  const ScenarioConfig cfg = tests::default_config(10, 2, 42);
  const Scenario a = generate(cfg);
  const Scenario b = generate(cfg);
  CHECK(scenario_to_json(a) == scenario_to_json(b));
  const Scenario c = generate(tests::default_config(10, 2, 43));
  CHECK(scenario_to_json(a) != scenario_to_json(c));
}

TEST_CASE("generated quantities sit in their configured ranges") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const ScenarioConfig cfg = tests::default_config(10, 2, seed);
    const Scenario scn = generate(cfg);
    for (const auto& u : scn.users) {
      CHECK(u.adapter_params >= cfg.adapter_params_min);
      CHECK(u.adapter_params <= cfg.adapter_params_max);
      CHECK(u.pos_x >= 0.0);
      CHECK(u.pos_x <= cfg.area_side_m);
      const double token_bits = u.flops_per_param * cfg.bits_per_token / cfg.flops_per_token_per_param;
      CHECK(token_bits >= cfg.token_bits_min - 1e-6);
      CHECK(token_bits <= cfg.token_bits_max + 1e-6);
    }
    CHECK((scn.gain.array() > 0.0).all());
  }
}

TEST_CASE("fading power is unit mean") {
  Rng rng(2024);
  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) sum += rng.exponential();
  CHECK(std::abs(sum / n - 1.0) < 0.03);
}

TEST_CASE("uniform stream stays in range and fills it") {
  Rng rng(5);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform01();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("scenario save/load round-trips exactly") {
  const Scenario scn = tests::default_scenario(6, 2, 77);
  const std::string path = "scenario_roundtrip_test.json";
  save_scenario(scn, path);
  const Scenario back = load_scenario(path);
  CHECK(scenario_to_json(back) == scenario_to_json(scn));
  CHECK(scenario_hash(back) == scenario_hash(scn));
  std::remove(path.c_str());
}

TEST_CASE("allocation save/load round-trips exactly") {
  const Scenario scn = tests::default_scenario(4, 2, 3);
  const Allocation a = driver::initialize(scn);
  const std::string path = "allocation_roundtrip_test.json";
  save_allocation(a, path);
  const Allocation back = load_allocation(path);
  CHECK(allocation_to_json(back) == allocation_to_json(a));
  std::remove(path.c_str());
}

TEST_CASE("schema errors carry the field path") {
  const Scenario scn = tests::default_scenario(3, 2, 1);
  std::string text = scenario_to_json(scn);

  SUBCASE("truncated document") {
    CHECK_THROWS_AS(scenario_from_json(text.substr(0, text.size() / 2)), SchemaError);
  }
  SUBCASE("missing field has a path") {
    const std::string needle = "\"noise_psd_w_per_hz\"";
    const auto pos = text.find(needle);
    REQUIRE(pos != std::string::npos);
    std::string broken = text;
    broken.replace(pos, needle.size(), "\"renamed_field\"");
    try {
      scenario_from_json(broken);
      FAIL("expected a schema error");
    } catch (const SchemaError& e) {
      CHECK(e.field_path == "noise_psd_w_per_hz");
    }
  }
  SUBCASE("wrong kind") {
    CHECK_THROWS_AS(allocation_from_json(text), SchemaError);
  }
}

TEST_CASE("config round-trip and validation") {
  ScenarioConfig cfg = tests::default_config(7, 3, 9);
  cfg.bandwidth_max_hz = 25e6;
  const ScenarioConfig back = config_from_json(config_to_json(cfg));
  CHECK(back.n_users == 7);
  CHECK(back.bandwidth_max_hz == 25e6);
  CHECK(back.seed == 9);

  cfg.n_users = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
