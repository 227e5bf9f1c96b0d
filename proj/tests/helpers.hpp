#pragma once

#include "dashf/scenario.hpp"

namespace dashf::tests {

inline ScenarioConfig default_config(int n_users, int n_servers, std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.n_users = n_users;
  cfg.n_servers = n_servers;
  cfg.seed = seed;
  return cfg;
}

inline Scenario default_scenario(int n_users, int n_servers, std::uint64_t seed) {
  return generate(default_config(n_users, n_servers, seed));
}

}  // namespace dashf::tests
