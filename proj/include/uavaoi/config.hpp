#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace uavaoi {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Cell {
  int x = 0;
  int y = 0;
  auto operator<=>(const Cell&) const = default;
};

enum class WeightMode { paper_literal, generation_time };

struct DeviceConfig {
  int id = 0;
  double pos_x = 0.0;
  double pos_y = 0.0;
  int gen_period_k = 1;     // packets generated every k intervals
  double bandwidth = 1.5e9; // Hz
  double tx_power = 1e-3;   // W
};

struct UavConfig {
  int id = 0;
  double altitude = 100.0;       // m, pairwise distinct
  double speed = 15.0;           // m/s
  double max_flight_time = 1e9;  // s
  Cell start_cell{};
};

// Ranges used when a scenario omits its device list.
struct DeviceRanges {
  int k_min = 1;
  int k_max = 5;
  double bandwidth_min = 1.5e9;
  double bandwidth_max = 2.0e9;
  double tx_power_min = 0.0;
  double tx_power_max = 1e-3;
};

struct EnvConfig {
  int num_devices = 0;
  int num_uavs = 0;
  double area_x = 1000.0;
  double area_y = 1000.0;
  double grid_step = 100.0;
  int horizon = 500;
  double interval_len = 3e-3;
  double rician_factor = 10.0;
  bool pure_los = false;
  double noise_power = 1e-15;
  double min_rate = 150e3;
  double aoi_weight_gamma = 0.8;
  WeightMode weight_mode = WeightMode::paper_literal;
  std::vector<DeviceConfig> devices;
  std::vector<UavConfig> uavs;
  std::uint64_t rng_seed = 0;

  int cells_x() const;
  int cells_y() const;
  int num_cells() const { return cells_x() * cells_y(); }
  bool in_grid(Cell c) const;

  // Throws ConfigError describing the first broken invariant.
  void validate() const;
};

/// Generates `count` devices placed uniformly over the area from `seed`.
std::vector<DeviceConfig> generate_devices(int count, double area_x, double area_y,
                                           const DeviceRanges& ranges,
                                           std::uint64_t seed);

/// Altitudes spread evenly over [80, 100] m, all starting from cell (0, 0).
std::vector<UavConfig> default_uavs(int count, double speed, double max_flight_time);

/// Full-size scenario (25 devices, 3 UAVs, 500 intervals).
EnvConfig full_scale_config(std::uint64_t seed);

/// Small scenario used for training runs on one CPU: 2 UAVs, 8 devices,
/// 10x10 cells, 50 intervals, Rician fading.
EnvConfig desk_scale_config(std::uint64_t seed);

/// Deterministic toy scenario inside the exhaustive solver's limits.
EnvConfig tiny_oracle_config();

std::string to_string(WeightMode mode);
WeightMode weight_mode_from_string(const std::string& s);

void to_json(nlohmann::json& j, const Cell& c);
void from_json(const nlohmann::json& j, Cell& c);
void to_json(nlohmann::json& j, const DeviceConfig& d);
void from_json(const nlohmann::json& j, DeviceConfig& d);
void to_json(nlohmann::json& j, const UavConfig& u);
void from_json(const nlohmann::json& j, UavConfig& u);
void to_json(nlohmann::json& j, const EnvConfig& cfg);
// Missing "devices"/"uavs" arrays are generated from rng_seed (see
// "device_ranges", "uav_speed", "uav_max_flight_time").
void from_json(const nlohmann::json& j, EnvConfig& cfg);

EnvConfig load_env_config(const std::string& path);
void save_env_config(const EnvConfig& cfg, const std::string& path);

}  // namespace uavaoi
