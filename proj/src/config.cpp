#include "uavaoi/config.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>

namespace uavaoi {

namespace {

bool divides(double whole, double step) {
  const double q = whole / step;
  return std::fabs(q - std::round(q)) < 1e-9 * std::max(1.0, q);
}

}  // namespace

int EnvConfig::cells_x() const { return static_cast<int>(std::lround(area_x / grid_step)) + 1; }
int EnvConfig::cells_y() const { return static_cast<int>(std::lround(area_y / grid_step)) + 1; }

bool EnvConfig::in_grid(Cell c) const {
  return c.x >= 0 && c.y >= 0 && c.x < cells_x() && c.y < cells_y();
}

void EnvConfig::validate() const {
  if (num_devices < 0 || num_uavs < 1) throw ConfigError("need num_devices >= 0 and num_uavs >= 1");
  if (static_cast<int>(devices.size()) != num_devices)
    throw ConfigError("devices list length differs from num_devices");
  if (static_cast<int>(uavs.size()) != num_uavs)
    throw ConfigError("uavs list length differs from num_uavs");
  if (!(grid_step > 0.0) || !(area_x > 0.0) || !(area_y > 0.0))
    throw ConfigError("area and grid_step must be positive");
  if (!divides(area_x, grid_step) || !divides(area_y, grid_step))
    throw ConfigError("grid_step must divide area_x and area_y");
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (!(interval_len > 0.0)) throw ConfigError("interval_len must be positive");
  if (!(aoi_weight_gamma >= 0.0 && aoi_weight_gamma <= 1.0))
    throw ConfigError("aoi_weight_gamma must lie in [0, 1]");
  if (!(rician_factor >= 0.0)) throw ConfigError("rician_factor must be >= 0");
  if (!(noise_power > 0.0)) throw ConfigError("noise_power must be positive");
  if (!(min_rate >= 0.0)) throw ConfigError("min_rate must be >= 0");
  for (int i = 0; i < num_devices; ++i) {
    const auto& d = devices[i];
    if (d.id != i) throw ConfigError("device ids must be 0..I-1 in order");
    if (d.gen_period_k < 1 || d.gen_period_k > horizon)
      throw ConfigError("device " + std::to_string(i) + ": gen_period_k outside [1, K]");
    if (!(d.bandwidth > 0.0)) throw ConfigError("device " + std::to_string(i) + ": bandwidth <= 0");
    if (!(d.tx_power >= 0.0)) throw ConfigError("device " + std::to_string(i) + ": tx_power < 0");
    if (d.pos_x < 0.0 || d.pos_x > area_x || d.pos_y < 0.0 || d.pos_y > area_y)
      throw ConfigError("device " + std::to_string(i) + ": position outside area");
  }
  std::set<double> altitudes;
  for (int u = 0; u < num_uavs; ++u) {
    const auto& v = uavs[u];
    if (v.id != u) throw ConfigError("uav ids must be 0..U-1 in order");
    if (!(v.speed > 0.0)) throw ConfigError("uav " + std::to_string(u) + ": speed <= 0");
    if (!(v.max_flight_time > 0.0))
      throw ConfigError("uav " + std::to_string(u) + ": max_flight_time <= 0");
    if (!(v.altitude > 0.0)) throw ConfigError("uav " + std::to_string(u) + ": altitude <= 0");
    if (!in_grid(v.start_cell)) throw ConfigError("uav " + std::to_string(u) + ": start outside grid");
    if (!altitudes.insert(v.altitude).second) throw ConfigError("uav altitudes must be distinct");
  }
}

std::vector<DeviceConfig> generate_devices(int count, double area_x, double area_y,
                                           const DeviceRanges& r, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, area_x), uy(0.0, area_y);
  std::uniform_int_distribution<int> uk(r.k_min, r.k_max);
  std::uniform_real_distribution<double> ub(r.bandwidth_min, r.bandwidth_max);
  std::uniform_real_distribution<double> up(r.tx_power_min, r.tx_power_max);
  std::vector<DeviceConfig> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    DeviceConfig d;
    d.id = i;
    d.pos_x = ux(rng);
    d.pos_y = uy(rng);
    d.gen_period_k = uk(rng);
    d.bandwidth = ub(rng);
    d.tx_power = up(rng);
    out.push_back(d);
  }
  return out;
}

std::vector<UavConfig> default_uavs(int count, double speed, double max_flight_time) {
  std::vector<UavConfig> out;
  for (int u = 0; u < count; ++u) {
    UavConfig v;
    v.id = u;
    v.altitude = count == 1 ? 100.0 : 80.0 + 20.0 * u / (count - 1);
    v.speed = speed;
    v.max_flight_time = max_flight_time;
    v.start_cell = {0, 0};
    out.push_back(v);
  }
  return out;
}

EnvConfig full_scale_config(std::uint64_t seed) {
  EnvConfig cfg;
  cfg.num_devices = 25;
  cfg.num_uavs = 3;
  cfg.area_x = cfg.area_y = 1000.0;
  cfg.grid_step = 100.0;
  cfg.horizon = 500;
  cfg.interval_len = 3e-3;
  cfg.rician_factor = 10.0;
  cfg.noise_power = 1e-15;  // -120 dBm
  cfg.min_rate = 150e3;
  cfg.aoi_weight_gamma = 0.8;
  cfg.rng_seed = seed;
  cfg.devices = generate_devices(cfg.num_devices, cfg.area_x, cfg.area_y, DeviceRanges{}, seed);
  // One move per interval over the whole horizon.
  cfg.uavs = default_uavs(cfg.num_uavs, 15.0, cfg.horizon * cfg.grid_step / 15.0);
  return cfg;
}

EnvConfig desk_scale_config(std::uint64_t seed) {
  EnvConfig cfg;
  cfg.num_devices = 8;
  cfg.num_uavs = 2;
  cfg.area_x = cfg.area_y = 900.0;
  cfg.grid_step = 100.0;
  cfg.horizon = 50;
  cfg.interval_len = 3e-3;
  cfg.rician_factor = 10.0;
  // Low-SNR link budget so that the rate gate gives each UAV a coverage
  // radius of roughly 200-370 m.
  cfg.noise_power = 1e-8;
  cfg.min_rate = 1.5e9;
  cfg.aoi_weight_gamma = 0.8;
  cfg.rng_seed = seed;
  DeviceRanges ranges;
  ranges.tx_power_min = 0.5e-3;
  cfg.devices = generate_devices(cfg.num_devices, cfg.area_x, cfg.area_y, ranges, seed);
  cfg.uavs = default_uavs(cfg.num_uavs, 15.0, 300.0);
  return cfg;
}

EnvConfig tiny_oracle_config() {
  EnvConfig cfg;
  cfg.num_devices = 3;
  cfg.num_uavs = 1;
  cfg.area_x = cfg.area_y = 200.0;
  cfg.grid_step = 100.0;
  cfg.horizon = 5;
  cfg.interval_len = 1.0;
  cfg.pure_los = true;
  cfg.noise_power = 1e-8;
  // Gamma >= 4 at H = 100 m: in range within one cell horizontally,
  // diagonal neighbours (d^2 = 3e4) are out of range.
  cfg.min_rate = 1.5e9 * std::log2(5.0);
  cfg.aoi_weight_gamma = 0.8;
  cfg.rng_seed = 0;
  cfg.devices = {
      {0, 200.0, 0.0, 1, 1.5e9, 1e-3},
      {1, 0.0, 200.0, 2, 1.5e9, 1e-3},
      {2, 200.0, 200.0, 1, 1.5e9, 1e-3},
  };
  cfg.uavs = default_uavs(1, 15.0, 30.0);
  return cfg;
}

std::string to_string(WeightMode mode) {
  return mode == WeightMode::paper_literal ? "paper_literal" : "generation_time";
}

WeightMode weight_mode_from_string(const std::string& s) {
  if (s == "paper_literal") return WeightMode::paper_literal;
  if (s == "generation_time") return WeightMode::generation_time;
  throw ConfigError("unknown weight_mode '" + s + "'");
}

void to_json(nlohmann::json& j, const Cell& c) { j = nlohmann::json::array({c.x, c.y}); }

void from_json(const nlohmann::json& j, Cell& c) {
  if (j.is_array()) {
    c.x = j.at(0).get<int>();
    c.y = j.at(1).get<int>();
  } else {
    c.x = j.at("x").get<int>();
    c.y = j.at("y").get<int>();
  }
}

void to_json(nlohmann::json& j, const DeviceConfig& d) {
  j = {{"id", d.id},
       {"pos_x", d.pos_x},
       {"pos_y", d.pos_y},
       {"gen_period_k", d.gen_period_k},
       {"bandwidth", d.bandwidth},
       {"tx_power", d.tx_power}};
}

void from_json(const nlohmann::json& j, DeviceConfig& d) {
  j.at("id").get_to(d.id);
  j.at("pos_x").get_to(d.pos_x);
  j.at("pos_y").get_to(d.pos_y);
  j.at("gen_period_k").get_to(d.gen_period_k);
  j.at("bandwidth").get_to(d.bandwidth);
  j.at("tx_power").get_to(d.tx_power);
}

void to_json(nlohmann::json& j, const UavConfig& u) {
  j = {{"id", u.id},
       {"altitude", u.altitude},
       {"speed", u.speed},
       {"max_flight_time", u.max_flight_time},
       {"start_cell", u.start_cell}};
}

void from_json(const nlohmann::json& j, UavConfig& u) {
  j.at("id").get_to(u.id);
  j.at("altitude").get_to(u.altitude);
  j.at("speed").get_to(u.speed);
  j.at("max_flight_time").get_to(u.max_flight_time);
  u.start_cell = j.value("start_cell", Cell{});
}

void to_json(nlohmann::json& j, const EnvConfig& c) {
  j = {{"num_devices", c.num_devices},
       {"num_uavs", c.num_uavs},
       {"area_x", c.area_x},
       {"area_y", c.area_y},
       {"grid_step", c.grid_step},
       {"horizon", c.horizon},
       {"interval_len", c.interval_len},
       {"rician_factor", c.rician_factor},
       {"pure_los", c.pure_los},
       {"noise_power", c.noise_power},
       {"min_rate", c.min_rate},
       {"aoi_weight_gamma", c.aoi_weight_gamma},
       {"weight_mode", to_string(c.weight_mode)},
       {"devices", c.devices},
       {"uavs", c.uavs},
       {"rng_seed", c.rng_seed}};
}

void from_json(const nlohmann::json& j, EnvConfig& c) {
  c = EnvConfig{};
  j.at("num_devices").get_to(c.num_devices);
  j.at("num_uavs").get_to(c.num_uavs);
  c.area_x = j.value("area_x", c.area_x);
  c.area_y = j.value("area_y", c.area_y);
  c.grid_step = j.value("grid_step", c.grid_step);
  c.horizon = j.value("horizon", c.horizon);
  c.interval_len = j.value("interval_len", c.interval_len);
  c.rician_factor = j.value("rician_factor", c.rician_factor);
  c.pure_los = j.value("pure_los", c.pure_los);
  c.noise_power = j.value("noise_power", c.noise_power);
  c.min_rate = j.value("min_rate", c.min_rate);
  c.aoi_weight_gamma = j.value("aoi_weight_gamma", c.aoi_weight_gamma);
  c.weight_mode = weight_mode_from_string(j.value("weight_mode", std::string("paper_literal")));
  c.rng_seed = j.value("rng_seed", std::uint64_t{0});

  if (j.contains("devices")) {
    j.at("devices").get_to(c.devices);
  } else {
    DeviceRanges r;
    if (j.contains("device_ranges")) {
      const auto& jr = j.at("device_ranges");
      r.k_min = jr.value("k_min", r.k_min);
      r.k_max = jr.value("k_max", r.k_max);
      r.bandwidth_min = jr.value("bandwidth_min", r.bandwidth_min);
      r.bandwidth_max = jr.value("bandwidth_max", r.bandwidth_max);
      r.tx_power_min = jr.value("tx_power_min", r.tx_power_min);
      r.tx_power_max = jr.value("tx_power_max", r.tx_power_max);
    }
    c.devices = generate_devices(c.num_devices, c.area_x, c.area_y, r, c.rng_seed);
  }
  if (j.contains("uavs")) {
    j.at("uavs").get_to(c.uavs);
  } else {
    c.uavs = default_uavs(c.num_uavs, j.value("uav_speed", 15.0),
                          j.value("uav_max_flight_time", 1e9));
  }
}

EnvConfig load_env_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scenario '" + path + "': " + e.what());
  }
  EnvConfig cfg;
  try {
    cfg = j.get<EnvConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scenario '" + path + "': " + e.what());
  }
  cfg.validate();
  return cfg;
}

void save_env_config(const EnvConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << nlohmann::json(cfg).dump(2) << '\n';
}

}  // namespace uavaoi
