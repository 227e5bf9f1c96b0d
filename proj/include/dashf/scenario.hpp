#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "dashf/model.hpp"

// Deterministic instance generation and serialization. All randomness flows
// through a fixed, portable 64-bit generator so a seed reproduces the same
// scenario bit-for-bit on every platform.
namespace dashf {

// xoshiro256++ seeded through splitmix64. Uniform doubles take the top 53
// bits, so streams are identical wherever IEEE-754 doubles are.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next_u64();
  double uniform01();                        // [0, 1)
  double uniform(double lo, double hi);
  double exponential();                      // unit mean
  int uniform_int(int n);                    // {0, ..., n-1}

  static constexpr const char* kAlgorithm = "xoshiro256++";

 private:
  std::uint64_t state_[4];
};

struct ScenarioConfig {
  int n_users = 10;
  int n_servers = 2;
  double area_side_m = 1000.0;
  std::uint64_t seed = 1;

  double bandwidth_max_hz = 10e6;
  double user_power_max_w = 0.2;
  double server_power_max_w = 10.0;
  double user_speed_max = 19.58e12;          // FLOP/s, aggregate effective
  double server_speed_max = 1372.8e12;       // FLOP/s, aggregate effective
  double switched_cap_user = 1e-38;
  double switched_cap_server = 1e-38;
  double adapter_params_min = 1.2e6;
  double adapter_params_max = 14e6;
  double token_bits_min = 1e7;
  double token_bits_max = 5e7;
  double weight_delay = 0.5;
  double weight_energy = 0.005;
  double score_scale = 10000.0 / M_LN2;
  double score_norm = 1.0 / 3.0;
  double bits_per_param = 32.0;
  double user_epochs = 1.0;
  double server_epochs = 1.0;
  double noise_psd_dbm = -134.0;             // dBm per Hz

  // Conventions, not physics: token ids at 16 bits each, and 6 FLOPs per
  // token per adapter parameter per epoch (forward + backward estimate).
  double bits_per_token = 16.0;
  double flops_per_token_per_param = 6.0;
  double min_distance_m = 1.0;               // path-loss distance floor

  void validate() const;                     // throws on bad ranges
};

// d_in*d_adapt + d_adapt*d_out + d_adapt + d_out (weights plus biases of the
// down/up projection pair).
double adapter_param_count(int d_in, int d_adapt, int d_out);

// 128.1 + 37.6*log10(d_km); the standard macro-cell large-scale model.
double path_loss_db(double distance_km);

double dbm_to_watt(double dbm);

// Draw order: user positions (x,y per user), server positions, adapter
// parameter counts, token data sizes, then the fading matrix row-major.
Scenario generate(const ScenarioConfig& cfg);

// JSON serialization (schema_version 1, full-precision doubles).
std::string scenario_to_json(const Scenario& scn);
Scenario scenario_from_json(const std::string& text);
void save_scenario(const Scenario& scn, const std::string& path);
Scenario load_scenario(const std::string& path);

std::string allocation_to_json(const Allocation& a);
Allocation allocation_from_json(const std::string& text);
void save_allocation(const Allocation& a, const std::string& path);
Allocation load_allocation(const std::string& path);

std::string config_to_json(const ScenarioConfig& cfg);
ScenarioConfig config_from_json(const std::string& text);

// FNV-1a over the canonical JSON form; stamped into every output file.
std::uint64_t scenario_hash(const Scenario& scn);
std::string scenario_hash_hex(const Scenario& scn);

// Thrown by the *_from_json loaders with the offending field path.
struct SchemaError : std::runtime_error {
  explicit SchemaError(const std::string& field, const std::string& what)
      : std::runtime_error("schema error at " + field + ": " + what), field_path(field) {}
  std::string field_path;
};

}  // namespace dashf
