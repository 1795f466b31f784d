#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "uavaoi/nn.hpp"
#include "uavaoi/policy_head.hpp"

namespace uavaoi::ppo {

struct Transition {
  std::vector<double> observation;
  std::vector<double> critic_observation;  // empty: the critic reads `observation`
  MoveMask move_mask;
  int move = 0;
  std::vector<std::uint8_t> assoc;
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
};

struct PpoConfig {
  double clip_epsilon = 0.2;
  double discount = 0.99;  // RL discount, unrelated to the AoI weight gamma
  double gae_lambda = 0.95;
  int epochs_per_update = 4;
  int minibatch_size = 64;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double learning_rate = 3e-4;
  int rollout_length = 0;  // 0: one full episode per update

  void validate() const;
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// Generalized advantage estimates; `bootstrap_value` is V of the state after
/// the last transition (ignored when that transition is terminal).
GaeResult compute_gae(std::span<const Transition> transitions, double bootstrap_value, const PpoConfig& cfg);

/// Shifts to mean 0 and scales to unit population std (if the std is nonzero).
void normalize_advantages(std::vector<double>& adv);

class RolloutBuffer {
 public:
  void add(Transition t);
  void clear();
  std::size_t size() const { return transitions_.size(); }
  bool empty() const { return transitions_.empty(); }
  bool finalized() const { return finalized_; }

  /// Computes GAE targets and normalized advantages. Throws on an empty buffer.
  void finalize(double bootstrap_value, const PpoConfig& cfg);

  const std::vector<Transition>& transitions() const { return transitions_; }
  const std::vector<double>& advantages() const { return advantages_; }
  const std::vector<double>& returns() const { return returns_; }

 private:
  std::vector<Transition> transitions_;
  std::vector<double> advantages_;
  std::vector<double> returns_;
  bool finalized_ = false;
};

/// -mean(min(rho * A, clip(rho, 1 - eps, 1 + eps) * A)), rho = exp(new - old).
double clipped_policy_loss(std::span<const double> new_log_probs, std::span<const double> old_log_probs,
                           std::span<const double> advantages, double clip_epsilon);

double value_loss(std::span<const double> predicted, std::span<const double> targets);

struct UpdateDiagnostics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double mean_ratio = 1.0;
};

/// Fixed number of epochs over shuffled minibatches; loss is
/// policy + value_coef * value - entropy_coef * entropy.
UpdateDiagnostics ppo_update(nn::Mlp& actor, nn::Mlp& critic, const RolloutBuffer& buffer, const PpoConfig& cfg,
                             nn::AdamState& actor_opt, nn::AdamState& critic_opt, Rng& rng);

}  // namespace uavaoi::ppo
