#pragma once

#include <random>

#include "uavaoi/config.hpp"
#include "uavaoi/env.hpp"
#include "uavaoi/problem.hpp"

namespace uavaoi::testing {

/// Small random scenario: 1-3 UAVs, 1-6 devices, 3x3 to 6x6 cells.
inline EnvConfig random_config(Rng& rng, bool pure_los = false) {
  std::uniform_int_distribution<int> nu(1, 3), ni(1, 6), cells(2, 5), horizon(3, 12);
  EnvConfig cfg;
  cfg.num_uavs = nu(rng);
  cfg.num_devices = ni(rng);
  cfg.grid_step = 100.0;
  cfg.area_x = cells(rng) * cfg.grid_step;
  cfg.area_y = cells(rng) * cfg.grid_step;
  cfg.horizon = horizon(rng);
  cfg.interval_len = 3e-3;
  cfg.pure_los = pure_los;
  cfg.noise_power = 1e-8;
  cfg.min_rate = 1.5e9;
  cfg.aoi_weight_gamma = std::uniform_real_distribution<double>(0.5, 1.0)(rng);
  DeviceRanges r;
  r.k_max = std::min(5, cfg.horizon);
  r.tx_power_min = 0.5e-3;
  cfg.devices = generate_devices(cfg.num_devices, cfg.area_x, cfg.area_y, r, rng());
  std::uniform_real_distribution<double> budget(10.0, 60.0);
  cfg.uavs = default_uavs(cfg.num_uavs, 15.0, budget(rng));
  std::uniform_int_distribution<int> sx(0, cfg.cells_x() - 1), sy(0, cfg.cells_y() - 1);
  for (auto& u : cfg.uavs) u.start_cell = {sx(rng), sy(rng)};
  return cfg;
}

inline JointAction random_action(const EnvConfig& cfg, Rng& rng) {
  std::uniform_int_distribution<int> move(0, kNumMoves - 1);
  std::bernoulli_distribution bit(0.5);
  JointAction a;
  a.per_uav.resize(cfg.num_uavs);
  for (auto& p : a.per_uav) {
    p.move = move_from_index(move(rng));
    p.assoc.resize(cfg.num_devices);
    for (auto& b : p.assoc) b = bit(rng) ? 1 : 0;
  }
  return a;
}

/// Full episode through the environment with uniformly random proposals.
inline TrajectoryRecord random_rollout(const EnvConfig& cfg, Rng& rng) {
  EnvState s = initial_state(cfg);
  auto traj = TrajectoryRecord::start(s);
  while (s.t < cfg.horizon) {
    auto r = step(s, random_action(cfg, rng), rng, cfg);
    traj.append(r);
    s = r.state;
  }
  return traj;
}

inline AssocMatrix no_grants(const EnvConfig& cfg) { return AssocMatrix(cfg.num_devices, cfg.num_uavs); }

/// One device at the origin, one UAV, unit interval, pure line of sight.
inline EnvConfig single_device_config(int k, int horizon, double gamma = 1.0) {
  EnvConfig cfg;
  cfg.num_devices = 1;
  cfg.num_uavs = 1;
  cfg.area_x = cfg.area_y = 200.0;
  cfg.grid_step = 100.0;
  cfg.horizon = horizon;
  cfg.interval_len = 1.0;
  cfg.pure_los = true;
  cfg.noise_power = 1e-8;
  cfg.min_rate = 1.0;
  cfg.aoi_weight_gamma = gamma;
  cfg.devices = {{0, 0.0, 0.0, k, 1.5e9, 1e-3}};
  cfg.uavs = default_uavs(1, 15.0, 1e6);
  return cfg;
}

}  // namespace uavaoi::testing
