#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "uavaoi/env.hpp"

namespace uavaoi {

/// One episode: K+1 states and, for every interval t = 1..K, the granted
/// associations alpha[t], the per-UAV rewards r_u[t] and the realized rates.
struct TrajectoryRecord {
  std::vector<EnvState> states;
  std::vector<AssocMatrix> granted;
  std::vector<std::vector<double>> rewards;
  std::vector<std::vector<double>> rates;  // optional; device-major I*U per interval

  static TrajectoryRecord start(const EnvState& initial);
  void append(const StepResult& step);
  bool complete(const EnvConfig& cfg) const;
};

struct ObjectiveReport {
  double objective1 = 0.0;
  double objective2 = 0.0;
  std::vector<double> per_device_f;
  std::vector<double> per_uav_return;
};

/// Counts of association grants that actually moved data (device had at
/// least one uncollected packet at that interval).
struct CommunicationStats {
  int total = 0;
  int distinct_devices = 0;
  std::vector<int> per_device;
  std::vector<int> cumulative;  // running total after each interval t = 1..K
};

struct Violation {
  std::string constraint;  // "2b".."2g"
  int t = 0;
  int entity = 0;  // device for 2b/2c/2g, UAV for 2d/2e/2f
};

class IncompleteTrajectory : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// r_u[t] with t = prior.t + 1: sum_i alpha_iu[t] sum_n w^n[t] A_i^n[t-1].
double per_uav_reward(int u, const AssocMatrix& granted, const EnvState& prior, const EnvConfig& cfg);

double objective1(const TrajectoryRecord& traj, const EnvConfig& cfg);
double objective2(const TrajectoryRecord& traj, const EnvConfig& cfg);
ObjectiveReport evaluate_objectives(const TrajectoryRecord& traj, const EnvConfig& cfg);

CommunicationStats communication_stats(const TrajectoryRecord& traj, const EnvConfig& cfg);

/// Audits (2b)-(2g) at every interval. (2b) is checked only when rates were recorded.
std::vector<Violation> check_feasibility(const TrajectoryRecord& traj, const EnvConfig& cfg);

void to_json(nlohmann::json& j, const PacketAge& p);
void from_json(const nlohmann::json& j, PacketAge& p);
void to_json(nlohmann::json& j, const EnvState& s);
void from_json(const nlohmann::json& j, EnvState& s);
void to_json(nlohmann::json& j, const AssocMatrix& m);
void from_json(const nlohmann::json& j, AssocMatrix& m);
void to_json(nlohmann::json& j, const TrajectoryRecord& t);
void from_json(const nlohmann::json& j, TrajectoryRecord& t);
void to_json(nlohmann::json& j, const Violation& v);

TrajectoryRecord load_trajectory(const std::string& path);
void save_trajectory(const TrajectoryRecord& traj, const std::string& path);

}  // namespace uavaoi
