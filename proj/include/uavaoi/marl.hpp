#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "uavaoi/nn.hpp"
#include "uavaoi/policy_head.hpp"
#include "uavaoi/ppo.hpp"
#include "uavaoi/problem.hpp"

namespace uavaoi::marl {

enum class ObservationMode {
  paper_literal,  // own cell only
  augmented,      // own cell, t / K, remaining flight budget fraction
  local_history,  // augmented plus, per device, intervals since this UAV last collected it (/ K)
};
enum class CellEncoding { one_hot_cell, normalized_xy };

struct ObservationSpec {
  ObservationMode mode = ObservationMode::paper_literal;
  CellEncoding encoding = CellEncoding::one_hot_cell;
};

/// What one UAV remembers about its own past grants. Never written with
/// another agent's data.
struct AgentMemory {
  std::vector<int> last_collected;  // interval of the last own grant per device, -1 if none

  static AgentMemory fresh(int num_devices);
  void record(int u, const AssocMatrix& granted, int t);
};

int observation_width(const ObservationSpec& spec, const EnvConfig& cfg);

std::vector<double> build_observation(const EnvState& state, int u, const ObservationSpec& spec,
                                      const EnvConfig& cfg, const AgentMemory* memory = nullptr);

/// Concatenation of every agent's observation.
std::vector<double> build_global_state(const EnvState& state, const ObservationSpec& spec, const EnvConfig& cfg,
                                       const std::vector<AgentMemory>& memories);

MoveMask move_mask(const EnvState& state, int u, const EnvConfig& cfg);

enum class TrainMode { dec, centr_obj1, centr_obj2 };

std::string to_string(TrainMode m);
// Accepts "dec", "centr_obj1"/"centr-obj1", "centr_obj2"/"centr-obj2".
TrainMode train_mode_from_string(const std::string& s);
std::string to_string(ObservationMode m);
ObservationMode observation_mode_from_string(const std::string& s);
std::string to_string(CellEncoding e);
CellEncoding cell_encoding_from_string(const std::string& s);

/// Running second moment of the discounted return, used to rescale rewards
/// to unit order before GAE.
struct RewardScaler {
  double discount = 0.99;
  double running_return = 0.0;
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  double scale(double reward);
  void end_episode() { running_return = 0.0; }
  double std() const;
};

struct AgentBundle {
  int id = 0;
  nn::Mlp actor;
  nn::Mlp critic;
  nn::AdamState actor_opt;
  nn::AdamState critic_opt;
  ppo::RolloutBuffer buffer;
  RewardScaler scaler;
  Rng rng;  // action sampling and minibatch shuffling
  std::vector<ppo::UpdateDiagnostics> diagnostics;
};

struct TrainConfig {
  TrainMode mode = TrainMode::dec;
  ObservationSpec obs;
  ppo::PpoConfig ppo;
  std::vector<int> hidden = {64, 64};
  int episodes = 0;
  std::uint64_t seed = 0;
  bool normalize_rewards = true;
};

/// One row of the per-episode metrics CSV.
struct MetricsRecord {
  int episode = 0;
  TrainMode mode = TrainMode::dec;
  double objective1 = 0.0;
  double objective2 = 0.0;
  int communications = 0;
  int distinct_devices = 0;
  int violations = 0;
  std::int64_t scalars_exchanged = 0;  // inter-agent scalars sent during this episode
};

struct TrainResult {
  std::vector<AgentBundle> agents;
  std::vector<MetricsRecord> metrics;
  TrainConfig config;
};

/// Critic input width: own observation in dec mode, global state otherwise.
int critic_input_width(const TrainConfig& tc, const EnvConfig& cfg);

/// Freshly initialized bundles; agent u's streams derive only from (seed, u).
std::vector<AgentBundle> make_agents(const TrainConfig& tc, const EnvConfig& cfg);

/// PPO update of a single agent from its own buffer. Reads nothing but `agent`.
ppo::UpdateDiagnostics update_agent(AgentBundle& agent, const ppo::PpoConfig& cfg);

/// Runs `tc.episodes` full-horizon episodes from fresh agents.
TrainResult train(const EnvConfig& cfg, const TrainConfig& tc);

/// Continues training existing agents; episode numbering starts at `first_episode`.
std::vector<MetricsRecord> train_more(std::vector<AgentBundle>& agents, const EnvConfig& cfg, const TrainConfig& tc,
                                      int episodes, int first_episode = 0);

struct EvaluationEpisode {
  TrajectoryRecord trajectory;
  ObjectiveReport objectives;
  CommunicationStats communications;
  int violations = 0;
  int move_violations = 0;
};

/// Greedy decoding, no learning. Channel draws come from `seed`.
std::vector<EvaluationEpisode> evaluate(const std::vector<AgentBundle>& agents, const EnvConfig& cfg,
                                        const ObservationSpec& obs, int episodes, std::uint64_t seed);

/// Uniform over feasible moves, each association bit a fair coin.
std::vector<EvaluationEpisode> random_baseline(const EnvConfig& cfg, int episodes, std::uint64_t seed);

void write_metrics_csv(const std::vector<MetricsRecord>& records, const std::string& path);
std::vector<MetricsRecord> read_metrics_csv(const std::string& path);
void write_diagnostics_csv(const std::vector<ppo::UpdateDiagnostics>& diags, const std::string& path);

nlohmann::json agent_checkpoint(const AgentBundle& agent);
void load_agent_checkpoint(const nlohmann::json& j, AgentBundle& agent);

}  // namespace uavaoi::marl
