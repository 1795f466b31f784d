#include "uavaoi/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "uavaoi/problem.hpp"

namespace uavaoi {

Cell apply_move(Cell c, Move m) {
  switch (m) {
    case Move::stay: return c;
    case Move::up: return {c.x, c.y + 1};
    case Move::down: return {c.x, c.y - 1};
    case Move::right: return {c.x + 1, c.y};
    case Move::left: return {c.x - 1, c.y};
  }
  return c;
}

int AssocMatrix::device_total(int i) const {
  int total = 0;
  for (int u = 0; u < uavs_; ++u) total += at(i, u);
  return total;
}

int AssocMatrix::count() const {
  int total = 0;
  for (auto b : bits_) total += b;
  return total;
}

EnvState initial_state(const EnvConfig& cfg) {
  EnvState s;
  s.t = 0;
  // Packet n = 0 of every device is due at t = 0 with age 0.
  s.device_buffers.assign(cfg.num_devices, std::vector<PacketAge>{PacketAge{0, 0, false}});
  for (const auto& uav : cfg.uavs) s.uav_cells.push_back(uav.start_cell);
  s.spent_flight.assign(cfg.num_uavs, 0.0);
  return s;
}

EnvState aoi_advance(const EnvState& state, const AssocMatrix& granted, const EnvConfig& cfg) {
  if (state.t >= cfg.horizon) throw std::logic_error("aoi_advance: state is terminal");
  if (granted.num_devices() != cfg.num_devices || granted.num_uavs() != cfg.num_uavs)
    throw ArbitrationError("aoi_advance: association matrix has wrong shape");

  EnvState next = state;
  next.t = state.t + 1;
  for (int i = 0; i < cfg.num_devices; ++i) {
    const int claims = granted.device_total(i);
    if (claims > 1)
      throw ArbitrationError("aoi_advance: device " + std::to_string(i) + " granted to " +
                             std::to_string(claims) + " UAVs");
    const bool collected_now = claims == 1;
    auto& buffer = next.device_buffers[i];
    for (auto& p : buffer) {
      if (collected_now || p.collected) {
        p.collected = true;
        p.age_steps = 0;
      } else {
        p.age_steps += 1;
      }
    }
    const int k = cfg.devices[i].gen_period_k;
    if (next.t % k == 0) {
      PacketAge fresh{next.t / k, collected_now ? 0 : 1, collected_now};
      buffer.push_back(fresh);
    }
  }
  return next;
}

double packet_weight(int n, int t, int k, const EnvConfig& cfg) {
  const int exponent = cfg.weight_mode == WeightMode::paper_literal ? t - n : t - n * k;
  return std::pow(cfg.aoi_weight_gamma, exponent);
}

double weighted_buffer_aoi(const std::vector<PacketAge>& buffer, int t, int k, const EnvConfig& cfg) {
  double sum = 0.0;
  for (const auto& p : buffer) {
    if (p.age_steps == 0) continue;
    sum += packet_weight(p.gen_index, t, k, cfg) * p.age(cfg.interval_len);
  }
  return sum;
}

double total_weighted_aoi(const EnvState& state, const EnvConfig& cfg) {
  double sum = 0.0;
  for (int i = 0; i < cfg.num_devices; ++i)
    sum += weighted_buffer_aoi(state.device_buffers[i], state.t, cfg.devices[i].gen_period_k, cfg);
  return sum;
}

double weighted_aoi_device(std::span<const std::vector<PacketAge>> history, int k, const EnvConfig& cfg) {
  double f = 0.0;
  for (std::size_t t = 1; t < history.size(); ++t)
    f += weighted_buffer_aoi(history[t], static_cast<int>(t), k, cfg);
  return f;
}

double distance(double dx, double dy, double altitude) {
  return std::sqrt(dx * dx + dy * dy + altitude * altitude);
}

double distance(Cell uav_cell, double altitude, const DeviceConfig& device, double grid_step) {
  return distance(uav_cell.x * grid_step - device.pos_x, uav_cell.y * grid_step - device.pos_y, altitude);
}

ChannelSample sample_channel(Rng& rng, double d, const EnvConfig& cfg) {
  if (!(d > 0.0)) throw std::domain_error("sample_channel: distance must be positive");
  ChannelSample s;
  s.distance = d;
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  s.los_phase = phase(rng);
  if (cfg.pure_los) {
    s.fading_power = 1.0;
    s.gain_sq = 1.0 / (d * d);
    return s;
  }
  // Circularly-symmetric complex Gaussian with unit total variance.
  std::normal_distribution<double> half(0.0, std::sqrt(0.5));
  s.nlos_re = half(rng);
  s.nlos_im = half(rng);
  const double los = std::sqrt(cfg.rician_factor / (cfg.rician_factor + 1.0));
  const double nlos = std::sqrt(1.0 / (cfg.rician_factor + 1.0));
  const double re = los * std::cos(s.los_phase) + nlos * s.nlos_re;
  const double im = los * std::sin(s.los_phase) + nlos * s.nlos_im;
  s.fading_power = re * re + im * im;
  s.gain_sq = s.fading_power / (d * d);
  return s;
}

namespace {

double fading_block_sum(const EnvConfig& cfg, double d, std::size_t begin, std::size_t end, std::uint64_t seed,
                        std::size_t block) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)};
  Rng rng(seq);
  double sum = 0.0;
  for (std::size_t k = begin; k < end; ++k) sum += sample_channel(rng, d, cfg).gain_sq * d * d;
  return sum;
}

}  // namespace

double mean_fading_power(const EnvConfig& cfg, double d, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw std::invalid_argument("mean_fading_power: no samples");
  const std::size_t blocks = (samples + kChannelBlock - 1) / kChannelBlock;
  std::vector<double> sums(blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (long b = 0; b < static_cast<long>(blocks); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kChannelBlock;
    sums[b] = fading_block_sum(cfg, d, lo, std::min(samples, lo + kChannelBlock), seed, static_cast<std::size_t>(b));
  }
  double total = 0.0;
  for (double s : sums) total += s;
  return total / static_cast<double>(samples);
}

double mean_fading_power_reference(const EnvConfig& cfg, double d, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw std::invalid_argument("mean_fading_power: no samples");
  double total = 0.0;
  for (std::size_t b = 0, lo = 0; lo < samples; ++b, lo += kChannelBlock)
    total += fading_block_sum(cfg, d, lo, std::min(samples, lo + kChannelBlock), seed, b);
  return total / static_cast<double>(samples);
}

double achievable_rate(const ChannelSample& sample, const DeviceConfig& device, const EnvConfig& cfg) {
  const double snr = device.tx_power * sample.gain_sq / cfg.noise_power;
  return device.bandwidth * std::log2(1.0 + snr);
}

ChannelMatrix sample_channels(Rng& rng, std::span<const Cell> uav_cells, const EnvConfig& cfg) {
  ChannelMatrix m;
  m.num_devices = cfg.num_devices;
  m.num_uavs = cfg.num_uavs;
  m.samples.reserve(static_cast<std::size_t>(cfg.num_devices) * cfg.num_uavs);
  for (int i = 0; i < cfg.num_devices; ++i) {
    for (int u = 0; u < cfg.num_uavs; ++u) {
      const double d = distance(uav_cells[u], cfg.uavs[u].altitude, cfg.devices[i], cfg.grid_step);
      auto s = sample_channel(rng, d, cfg);
      s.rate = achievable_rate(s, cfg.devices[i], cfg);
      m.samples.push_back(s);
    }
  }
  return m;
}

double flight_cost(Move move, const UavConfig& uav, const EnvConfig& cfg) {
  return move == Move::stay ? 0.0 : cfg.grid_step / uav.speed;
}

bool within_flight_budget(double used, double budget) { return used <= budget * (1.0 + 1e-9); }

bool move_feasible(const EnvState& state, int u, Move move, const EnvConfig& cfg) {
  if (move == Move::stay) return true;
  if (!cfg.in_grid(apply_move(state.uav_cells[u], move))) return false;
  const auto& uav = cfg.uavs[u];
  return within_flight_budget(state.spent_flight[u] + flight_cost(move, uav, cfg), uav.max_flight_time);
}

std::vector<Cell> resolve_moves(const JointAction& proposed, const EnvState& state, const EnvConfig& cfg) {
  std::vector<Cell> cells(cfg.num_uavs);
  for (int u = 0; u < cfg.num_uavs; ++u) {
    const Move m = proposed.per_uav[u].move;
    cells[u] = move_feasible(state, u, m, cfg) ? apply_move(state.uav_cells[u], m) : state.uav_cells[u];
  }
  return cells;
}

Arbitration arbitrate(const JointAction& proposed, const ChannelMatrix& channels, const EnvState& state,
                      const EnvConfig& cfg) {
  if (static_cast<int>(proposed.per_uav.size()) != cfg.num_uavs)
    throw std::invalid_argument("arbitrate: need one action per UAV");
  Arbitration out;
  out.granted = AssocMatrix(cfg.num_devices, cfg.num_uavs);
  out.moves.resize(cfg.num_uavs);
  for (int u = 0; u < cfg.num_uavs; ++u) {
    const Move m = proposed.per_uav[u].move;
    if (move_feasible(state, u, m, cfg)) {
      out.moves[u] = m;
    } else {
      out.moves[u] = Move::stay;
      ++out.move_violations;
    }
    if (static_cast<int>(proposed.per_uav[u].assoc.size()) != cfg.num_devices)
      throw std::invalid_argument("arbitrate: association vector length differs from I");
  }
  for (int i = 0; i < cfg.num_devices; ++i) {
    int winner = -1;
    int valid_claims = 0;
    for (int u = 0; u < cfg.num_uavs; ++u) {
      if (!proposed.per_uav[u].assoc[i]) continue;
      const double r = channels.rate(i, u);
      if (r < cfg.min_rate) {
        ++out.rate_rejections;
        continue;
      }
      ++valid_claims;
      // Strict comparison keeps the lower id on ties.
      if (winner < 0 || r > channels.rate(i, winner)) winner = u;
    }
    if (winner >= 0) {
      out.granted.at(i, winner) = 1;
      out.conflict_rejections += valid_claims - 1;
    }
  }
  return out;
}

StepResult step(const EnvState& state, const JointAction& proposed, Rng& rng, const EnvConfig& cfg) {
  if (state.t >= cfg.horizon) throw std::logic_error("step: episode already reached the horizon");
  if (static_cast<int>(proposed.per_uav.size()) != cfg.num_uavs)
    throw std::invalid_argument("step: need one action per UAV");

  const auto cells = resolve_moves(proposed, state, cfg);
  const auto channels = sample_channels(rng, cells, cfg);
  auto arb = arbitrate(proposed, channels, state, cfg);

  StepResult result;
  auto& out = result.outcome;
  out.per_uav_reward.resize(cfg.num_uavs);
  for (int u = 0; u < cfg.num_uavs; ++u) out.per_uav_reward[u] = per_uav_reward(u, arb.granted, state, cfg);

  result.state = aoi_advance(state, arb.granted, cfg);
  for (int u = 0; u < cfg.num_uavs; ++u) {
    result.state.uav_cells[u] = cells[u];
    result.state.spent_flight[u] += flight_cost(arb.moves[u], cfg.uavs[u], cfg);
  }

  out.aoi_snapshot = total_weighted_aoi(result.state, cfg);
  out.move_violations = arb.move_violations;
  out.rate_rejections = arb.rate_rejections;
  out.conflict_rejections = arb.conflict_rejections;
  out.violations = arb.violations();
  out.rates.reserve(channels.samples.size());
  for (const auto& s : channels.samples) out.rates.push_back(s.rate);
  out.moves = std::move(arb.moves);
  out.granted = std::move(arb.granted);
  return result;
}

Environment::Environment(EnvConfig cfg) : Environment(cfg, cfg.rng_seed) {}

Environment::Environment(EnvConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)), rng_(seed) {
  cfg_.validate();
  reset();
}

void Environment::reset() { state_ = initial_state(cfg_); }

StepOutcome Environment::step(const JointAction& action) {
  auto r = uavaoi::step(state_, action, rng_, cfg_);
  state_ = std::move(r.state);
  return std::move(r.outcome);
}

}  // namespace uavaoi
