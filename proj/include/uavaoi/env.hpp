#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "uavaoi/config.hpp"

namespace uavaoi {

using Rng = std::mt19937_64;

enum class Move : std::uint8_t { stay = 0, up = 1, down = 2, right = 3, left = 4 };
inline constexpr int kNumMoves = 5;

inline Move move_from_index(int m) { return static_cast<Move>(m); }
inline int move_index(Move m) { return static_cast<int>(m); }

// up/down change y, right/left change x.
Cell apply_move(Cell c, Move m);

struct PacketAge {
  int gen_index = 0;          // n; generated at interval n * k_i
  std::int64_t age_steps = 0; // age in units of interval_len
  bool collected = false;

  double age(double interval_len) const { return static_cast<double>(age_steps) * interval_len; }
  bool operator==(const PacketAge&) const = default;
};

struct EnvState {
  int t = 0;
  std::vector<std::vector<PacketAge>> device_buffers;
  std::vector<Cell> uav_cells;
  std::vector<double> spent_flight;

  bool operator==(const EnvState&) const = default;
};

/// Device-major boolean matrix alpha[i][u].
class AssocMatrix {
 public:
  AssocMatrix() = default;
  AssocMatrix(int num_devices, int num_uavs)
      : devices_(num_devices), uavs_(num_uavs), bits_(static_cast<std::size_t>(num_devices) * num_uavs, 0) {}

  int num_devices() const { return devices_; }
  int num_uavs() const { return uavs_; }
  std::uint8_t& at(int i, int u) { return bits_[static_cast<std::size_t>(i) * uavs_ + u]; }
  std::uint8_t at(int i, int u) const { return bits_[static_cast<std::size_t>(i) * uavs_ + u]; }
  int device_total(int i) const;
  int count() const;
  const std::vector<std::uint8_t>& raw() const { return bits_; }

  bool operator==(const AssocMatrix&) const = default;

 private:
  int devices_ = 0;
  int uavs_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct UavAction {
  Move move = Move::stay;
  std::vector<std::uint8_t> assoc;  // length I
};

struct JointAction {
  std::vector<UavAction> per_uav;
};

struct ChannelSample {
  double los_phase = 0.0;
  double nlos_re = 0.0;
  double nlos_im = 0.0;
  double distance = 0.0;
  double fading_power = 1.0;  // |h|^2 d^2
  double gain_sq = 0.0;       // |h|^2
  double rate = 0.0;
};

/// Channel realizations for every (device, UAV) pair of one interval.
struct ChannelMatrix {
  int num_devices = 0;
  int num_uavs = 0;
  std::vector<ChannelSample> samples;  // device-major

  const ChannelSample& at(int i, int u) const { return samples[static_cast<std::size_t>(i) * num_uavs + u]; }
  double rate(int i, int u) const { return at(i, u).rate; }
};

struct Arbitration {
  AssocMatrix granted;
  std::vector<Move> moves;  // executed moves after replacement by stay
  int move_violations = 0;
  int rate_rejections = 0;
  int conflict_rejections = 0;

  int violations() const { return move_violations + rate_rejections + conflict_rejections; }
};

struct StepOutcome {
  AssocMatrix granted;
  std::vector<double> per_uav_reward;
  double aoi_snapshot = 0.0;  // total weighted AoI at the new t
  int violations = 0;
  int move_violations = 0;
  int rate_rejections = 0;
  int conflict_rejections = 0;
  std::vector<double> rates;  // realized rate per (i, u), device-major
  std::vector<Move> moves;
};

struct StepResult {
  EnvState state;
  StepOutcome outcome;
};

class ArbitrationError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

EnvState initial_state(const EnvConfig& cfg);

/// One interval of the AoI recursion. Collection is sticky: a packet collected
/// at any interval since its generation keeps age 0.
EnvState aoi_advance(const EnvState& state, const AssocMatrix& granted, const EnvConfig& cfg);

double packet_weight(int n, int t, int k, const EnvConfig& cfg);

/// sum_n w^n[t] A^n[t] over one device buffer.
double weighted_buffer_aoi(const std::vector<PacketAge>& buffer, int t, int k, const EnvConfig& cfg);

/// Sum over all devices of weighted_buffer_aoi at state.t.
double total_weighted_aoi(const EnvState& state, const EnvConfig& cfg);

/// f_i: history[t] is the device buffer at interval t, t = 0..K.
double weighted_aoi_device(std::span<const std::vector<PacketAge>> history, int k, const EnvConfig& cfg);

double distance(double dx, double dy, double altitude);
double distance(Cell uav_cell, double altitude, const DeviceConfig& device, double grid_step);

/// Block Rician fading draw. Throws std::domain_error for d <= 0.
ChannelSample sample_channel(Rng& rng, double d, const EnvConfig& cfg);

/// Mean of |h|^2 d^2 over `samples` channel draws at distance d. Draws are
/// split into fixed blocks, each seeded from (seed, block index), and the
/// block sums are reduced in block order, so the result is independent of
/// the thread count.
double mean_fading_power(const EnvConfig& cfg, double d, std::size_t samples, std::uint64_t seed);

/// Same blocks, evaluated serially.
double mean_fading_power_reference(const EnvConfig& cfg, double d, std::size_t samples, std::uint64_t seed);

inline constexpr std::size_t kChannelBlock = 4096;

double achievable_rate(const ChannelSample& sample, const DeviceConfig& device, const EnvConfig& cfg);

ChannelMatrix sample_channels(Rng& rng, std::span<const Cell> uav_cells, const EnvConfig& cfg);

double flight_cost(Move move, const UavConfig& uav, const EnvConfig& cfg);

bool within_flight_budget(double used, double budget);

/// True when `move` keeps UAV u inside the grid and inside its flight budget.
bool move_feasible(const EnvState& state, int u, Move move, const EnvConfig& cfg);

/// Cells after applying the movement rules (infeasible moves become stay).
std::vector<Cell> resolve_moves(const JointAction& proposed, const EnvState& state, const EnvConfig& cfg);

/// Enforces bounds, flight budget, rate threshold and one-UAV-per-device.
/// `channels` must be realized at the post-move cells.
Arbitration arbitrate(const JointAction& proposed, const ChannelMatrix& channels, const EnvState& state,
                      const EnvConfig& cfg);

/// Full transition t -> t+1. Throws std::logic_error when state.t == K.
StepResult step(const EnvState& state, const JointAction& proposed, Rng& rng, const EnvConfig& cfg);

class Environment {
 public:
  explicit Environment(EnvConfig cfg);
  Environment(EnvConfig cfg, std::uint64_t seed);

  const EnvConfig& config() const { return cfg_; }
  const EnvState& state() const { return state_; }
  bool done() const { return state_.t >= cfg_.horizon; }

  void reset();
  StepOutcome step(const JointAction& action);

 private:
  EnvConfig cfg_;
  EnvState state_;
  Rng rng_;
};

}  // namespace uavaoi
