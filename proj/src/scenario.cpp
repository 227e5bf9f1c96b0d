#include "dashf/scenario.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

using nlohmann::json;

namespace dashf {

namespace {

std::uint64_t splitmix64(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t s = seed;
  for (auto& w : state_) w = splitmix64(s);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double Rng::exponential() { return -std::log1p(-uniform01()); }

int Rng::uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

void ScenarioConfig::validate() const {
  if (n_users < 1 || n_servers < 1)
    throw std::invalid_argument("config: n_users and n_servers must be >= 1");
  if (area_side_m <= 0.0) throw std::invalid_argument("config: area_side_m must be positive");
  if (adapter_params_min <= 0.0 || adapter_params_max < adapter_params_min)
    throw std::invalid_argument("config: adapter parameter range empty or nonpositive");
  if (token_bits_min <= 0.0 || token_bits_max < token_bits_min)
    throw std::invalid_argument("config: token bits range empty or nonpositive");
  if (bandwidth_max_hz <= 0.0 || user_power_max_w <= 0.0 || server_power_max_w <= 0.0 ||
      user_speed_max <= 0.0 || server_speed_max <= 0.0)
    throw std::invalid_argument("config: resource caps must be positive");
  if (switched_cap_user <= 0.0 || switched_cap_server <= 0.0)
    throw std::invalid_argument("config: switched capacitance must be positive");
  if (weight_delay <= 0.0 || weight_energy <= 0.0)
    throw std::invalid_argument("config: cost weights must be positive");
  if (score_scale <= 0.0 || score_norm <= 0.0)
    throw std::invalid_argument("config: service-score constants must be positive");
  if (bits_per_param <= 0.0 || bits_per_token <= 0.0 || flops_per_token_per_param <= 0.0)
    throw std::invalid_argument("config: bit/FLOP conversion constants must be positive");
  if (user_epochs < 1.0 || server_epochs < 1.0)
    throw std::invalid_argument("config: epochs must be >= 1");
  if (min_distance_m <= 0.0) throw std::invalid_argument("config: min_distance_m must be positive");
}

double adapter_param_count(int d_in, int d_adapt, int d_out) {
  if (d_in < 1 || d_adapt < 1 || d_out < 1)
    throw std::invalid_argument("adapter_param_count: dimensions must be >= 1");
  return static_cast<double>(d_in) * d_adapt + static_cast<double>(d_adapt) * d_out + d_adapt + d_out;
}

double path_loss_db(double distance_km) {
  if (distance_km <= 0.0) throw std::invalid_argument("path_loss_db: distance must be positive");
  return 128.1 + 37.6 * std::log10(distance_km);
}

double dbm_to_watt(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

Scenario generate(const ScenarioConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const int N = cfg.n_users;
  const int M = cfg.n_servers;

  Scenario scn;
  scn.noise_psd = dbm_to_watt(cfg.noise_psd_dbm);
  scn.weight_delay = cfg.weight_delay;
  scn.weight_energy = cfg.weight_energy;
  scn.score_scale = cfg.score_scale;
  scn.score_norm = cfg.score_norm;
  scn.bits_per_param = cfg.bits_per_param;

  scn.users.resize(N);
  for (auto& u : scn.users) {
    u.pos_x = rng.uniform(0.0, cfg.area_side_m);
    u.pos_y = rng.uniform(0.0, cfg.area_side_m);
    u.epochs = cfg.user_epochs;
    u.gpu_speed_max = cfg.user_speed_max;
    u.tx_power_max = cfg.user_power_max_w;
    u.switched_cap = cfg.switched_cap_user;
  }
  scn.servers.resize(M);
  for (auto& s : scn.servers) {
    s.pos_x = rng.uniform(0.0, cfg.area_side_m);
    s.pos_y = rng.uniform(0.0, cfg.area_side_m);
    s.bandwidth_max = cfg.bandwidth_max_hz;
    s.tx_power_max = cfg.server_power_max_w;
    s.gpu_speed_max = cfg.server_speed_max;
    s.epochs = cfg.server_epochs;
    s.switched_cap = cfg.switched_cap_server;
  }
  for (auto& u : scn.users)
    u.adapter_params = rng.uniform(cfg.adapter_params_min, cfg.adapter_params_max);
  for (auto& u : scn.users) {
    const double token_bits = rng.uniform(cfg.token_bits_min, cfg.token_bits_max);
    u.flops_per_param = cfg.flops_per_token_per_param * token_bits / cfg.bits_per_token;
  }

  scn.gain.resize(N, M);
  for (int n = 0; n < N; ++n) {
    for (int m = 0; m < M; ++m) {
      const double dx = scn.users[n].pos_x - scn.servers[m].pos_x;
      const double dy = scn.users[n].pos_y - scn.servers[m].pos_y;
      const double dist_m = std::max(std::hypot(dx, dy), cfg.min_distance_m);
      const double large_scale = std::pow(10.0, -path_loss_db(dist_m / 1000.0) / 10.0);
      scn.gain(n, m) = large_scale * rng.exponential();  // unit-mean Rayleigh power fade
    }
  }
  scn.validate();
  return scn;
}

namespace {

const json& require(const json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(path + key, "missing field");
  return *it;
}

double require_number(const json& j, const char* key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_number()) throw SchemaError(path + key, "expected a number");
  return v.get<double>();
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw SchemaError(path, "expected a nonempty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) throw SchemaError(path + "[0]", "expected a nonempty row");
  Eigen::MatrixXd m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw SchemaError(path + "[" + std::to_string(r) + "]", "ragged or non-array row");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number())
        throw SchemaError(path + "[" + std::to_string(r) + "][" + std::to_string(c) + "]",
                          "expected a number");
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw SchemaError(path, "expected a nonempty array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number())
      throw SchemaError(path + "[" + std::to_string(i) + "]", "expected a number");
    v(i) = j[i].get<double>();
  }
  return v;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json parse_document(const std::string& text, const char* expected_kind) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("<document>", std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("<document>", "expected a JSON object");
  const json& ver = require(j, "schema_version", "");
  if (!ver.is_number_integer() || ver.get<int>() != 1)
    throw SchemaError("schema_version", "unsupported version (expected 1)");
  const json& kind = require(j, "kind", "");
  if (!kind.is_string() || kind.get<std::string>() != expected_kind)
    throw SchemaError("kind", std::string("expected \"") + expected_kind + "\"");
  return j;
}

}  // namespace

std::string scenario_to_json(const Scenario& scn) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "scenario";
  j["noise_psd_w_per_hz"] = scn.noise_psd;
  j["weight_delay"] = scn.weight_delay;
  j["weight_energy"] = scn.weight_energy;
  j["score_scale"] = scn.score_scale;
  j["score_norm"] = scn.score_norm;
  j["bits_per_param"] = scn.bits_per_param;
  json users = json::array();
  for (const auto& u : scn.users) {
    users.push_back({{"pos_x", u.pos_x},
                     {"pos_y", u.pos_y},
                     {"adapter_params", u.adapter_params},
                     {"flops_per_param", u.flops_per_param},
                     {"epochs", u.epochs},
                     {"gpu_speed_max", u.gpu_speed_max},
                     {"tx_power_max", u.tx_power_max},
                     {"switched_cap", u.switched_cap}});
  }
  j["users"] = std::move(users);
  json servers = json::array();
  for (const auto& s : scn.servers) {
    servers.push_back({{"pos_x", s.pos_x},
                       {"pos_y", s.pos_y},
                       {"bandwidth_max", s.bandwidth_max},
                       {"tx_power_max", s.tx_power_max},
                       {"gpu_speed_max", s.gpu_speed_max},
                       {"epochs", s.epochs},
                       {"switched_cap", s.switched_cap}});
  }
  j["servers"] = std::move(servers);
  j["gain"] = matrix_to_json(scn.gain);
  return j.dump(2);
}

Scenario scenario_from_json(const std::string& text) {
  const json j = parse_document(text, "scenario");
  Scenario scn;
  scn.noise_psd = require_number(j, "noise_psd_w_per_hz", "");
  scn.weight_delay = require_number(j, "weight_delay", "");
  scn.weight_energy = require_number(j, "weight_energy", "");
  scn.score_scale = require_number(j, "score_scale", "");
  scn.score_norm = require_number(j, "score_norm", "");
  scn.bits_per_param = require_number(j, "bits_per_param", "");

  const json& users = require(j, "users", "");
  if (!users.is_array() || users.empty()) throw SchemaError("users", "expected a nonempty array");
  for (std::size_t i = 0; i < users.size(); ++i) {
    const std::string path = "users[" + std::to_string(i) + "].";
    UserProfile u;
    u.pos_x = require_number(users[i], "pos_x", path);
    u.pos_y = require_number(users[i], "pos_y", path);
    u.adapter_params = require_number(users[i], "adapter_params", path);
    u.flops_per_param = require_number(users[i], "flops_per_param", path);
    u.epochs = require_number(users[i], "epochs", path);
    u.gpu_speed_max = require_number(users[i], "gpu_speed_max", path);
    u.tx_power_max = require_number(users[i], "tx_power_max", path);
    u.switched_cap = require_number(users[i], "switched_cap", path);
    scn.users.push_back(u);
  }
  const json& servers = require(j, "servers", "");
  if (!servers.is_array() || servers.empty())
    throw SchemaError("servers", "expected a nonempty array");
  for (std::size_t i = 0; i < servers.size(); ++i) {
    const std::string path = "servers[" + std::to_string(i) + "].";
    ServerProfile s;
    s.pos_x = require_number(servers[i], "pos_x", path);
    s.pos_y = require_number(servers[i], "pos_y", path);
    s.bandwidth_max = require_number(servers[i], "bandwidth_max", path);
    s.tx_power_max = require_number(servers[i], "tx_power_max", path);
    s.gpu_speed_max = require_number(servers[i], "gpu_speed_max", path);
    s.epochs = require_number(servers[i], "epochs", path);
    s.switched_cap = require_number(servers[i], "switched_cap", path);
    scn.servers.push_back(s);
  }
  scn.gain = matrix_from_json(require(j, "gain", ""), "gain");
  try {
    scn.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError("<document>", e.what());
  }
  return scn;
}

std::string allocation_to_json(const Allocation& a) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "allocation";
  j["assoc"] = matrix_to_json(a.assoc);
  j["split"] = vector_to_json(a.split);
  j["bandwidth_hz"] = matrix_to_json(a.bandwidth);
  j["user_power_w"] = vector_to_json(a.user_power);
  j["server_power_w"] = matrix_to_json(a.server_power);
  j["user_speed_flops"] = vector_to_json(a.user_speed);
  j["server_speed_flops"] = matrix_to_json(a.server_speed);
  j["delay_bound_s"] = a.delay_bound;
  return j.dump(2);
}

Allocation allocation_from_json(const std::string& text) {
  const json j = parse_document(text, "allocation");
  Allocation a;
  a.assoc = matrix_from_json(require(j, "assoc", ""), "assoc");
  a.split = vector_from_json(require(j, "split", ""), "split");
  a.bandwidth = matrix_from_json(require(j, "bandwidth_hz", ""), "bandwidth_hz");
  a.user_power = vector_from_json(require(j, "user_power_w", ""), "user_power_w");
  a.server_power = matrix_from_json(require(j, "server_power_w", ""), "server_power_w");
  a.user_speed = vector_from_json(require(j, "user_speed_flops", ""), "user_speed_flops");
  a.server_speed = matrix_from_json(require(j, "server_speed_flops", ""), "server_speed_flops");
  a.delay_bound = require_number(j, "delay_bound_s", "");
  return a;
}

namespace {
void write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << text << '\n';
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}
}  // namespace

void save_scenario(const Scenario& scn, const std::string& path) {
  write_file(path, scenario_to_json(scn));
}

Scenario load_scenario(const std::string& path) { return scenario_from_json(read_file(path)); }

void save_allocation(const Allocation& a, const std::string& path) {
  write_file(path, allocation_to_json(a));
}

Allocation load_allocation(const std::string& path) {
  return allocation_from_json(read_file(path));
}

std::string config_to_json(const ScenarioConfig& cfg) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "scenario_config";
  j["rng"] = {{"algorithm", Rng::kAlgorithm}, {"seed", cfg.seed}};
  j["n_users"] = cfg.n_users;
  j["n_servers"] = cfg.n_servers;
  j["area_side_m"] = cfg.area_side_m;
  j["bandwidth_max_hz"] = cfg.bandwidth_max_hz;
  j["user_power_max_w"] = cfg.user_power_max_w;
  j["server_power_max_w"] = cfg.server_power_max_w;
  j["user_speed_max"] = cfg.user_speed_max;
  j["server_speed_max"] = cfg.server_speed_max;
  j["switched_cap_user"] = cfg.switched_cap_user;
  j["switched_cap_server"] = cfg.switched_cap_server;
  j["adapter_params_min"] = cfg.adapter_params_min;
  j["adapter_params_max"] = cfg.adapter_params_max;
  j["token_bits_min"] = cfg.token_bits_min;
  j["token_bits_max"] = cfg.token_bits_max;
  j["weight_delay"] = cfg.weight_delay;
  j["weight_energy"] = cfg.weight_energy;
  j["score_scale"] = cfg.score_scale;
  j["score_norm"] = cfg.score_norm;
  j["bits_per_param"] = cfg.bits_per_param;
  j["user_epochs"] = cfg.user_epochs;
  j["server_epochs"] = cfg.server_epochs;
  j["noise_psd_dbm"] = cfg.noise_psd_dbm;
  j["bits_per_token"] = cfg.bits_per_token;
  j["flops_per_token_per_param"] = cfg.flops_per_token_per_param;
  j["min_distance_m"] = cfg.min_distance_m;
  return j.dump(2);
}

ScenarioConfig config_from_json(const std::string& text) {
  const json j = parse_document(text, "scenario_config");
  ScenarioConfig cfg;
  const json& rng = require(j, "rng", "");
  const json& alg = require(rng, "algorithm", "rng.");
  if (!alg.is_string() || alg.get<std::string>() != Rng::kAlgorithm)
    throw SchemaError("rng.algorithm", std::string("expected \"") + Rng::kAlgorithm + "\"");
  const json& seed = require(rng, "seed", "rng.");
  if (!seed.is_number_unsigned() && !seed.is_number_integer())
    throw SchemaError("rng.seed", "expected an integer");
  cfg.seed = seed.get<std::uint64_t>();

  const json& nu = require(j, "n_users", "");
  const json& ns = require(j, "n_servers", "");
  if (!nu.is_number_integer()) throw SchemaError("n_users", "expected an integer");
  if (!ns.is_number_integer()) throw SchemaError("n_servers", "expected an integer");
  cfg.n_users = nu.get<int>();
  cfg.n_servers = ns.get<int>();
  cfg.area_side_m = require_number(j, "area_side_m", "");
  cfg.bandwidth_max_hz = require_number(j, "bandwidth_max_hz", "");
  cfg.user_power_max_w = require_number(j, "user_power_max_w", "");
  cfg.server_power_max_w = require_number(j, "server_power_max_w", "");
  cfg.user_speed_max = require_number(j, "user_speed_max", "");
  cfg.server_speed_max = require_number(j, "server_speed_max", "");
  cfg.switched_cap_user = require_number(j, "switched_cap_user", "");
  cfg.switched_cap_server = require_number(j, "switched_cap_server", "");
  cfg.adapter_params_min = require_number(j, "adapter_params_min", "");
  cfg.adapter_params_max = require_number(j, "adapter_params_max", "");
  cfg.token_bits_min = require_number(j, "token_bits_min", "");
  cfg.token_bits_max = require_number(j, "token_bits_max", "");
  cfg.weight_delay = require_number(j, "weight_delay", "");
  cfg.weight_energy = require_number(j, "weight_energy", "");
  cfg.score_scale = require_number(j, "score_scale", "");
  cfg.score_norm = require_number(j, "score_norm", "");
  cfg.bits_per_param = require_number(j, "bits_per_param", "");
  cfg.user_epochs = require_number(j, "user_epochs", "");
  cfg.server_epochs = require_number(j, "server_epochs", "");
  cfg.noise_psd_dbm = require_number(j, "noise_psd_dbm", "");
  cfg.bits_per_token = require_number(j, "bits_per_token", "");
  cfg.flops_per_token_per_param = require_number(j, "flops_per_token_per_param", "");
  cfg.min_distance_m = require_number(j, "min_distance_m", "");
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError("<document>", e.what());
  }
  return cfg;
}

std::uint64_t scenario_hash(const Scenario& scn) {
  const std::string text = scenario_to_json(scn);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string scenario_hash_hex(const Scenario& scn) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(scenario_hash(scn)));
  return std::string(buf);
}

}  // namespace dashf
