#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "uavaoi/env.hpp"

namespace uavaoi {

// Added to the logit of every masked move.
inline constexpr double kMaskedLogit = -1e9;

/// Factorized action distribution: one categorical over moves and an
/// independent Bernoulli per device association bit. The actor's output
/// vector is [move logits | association logits].
struct PolicyHead {
  std::vector<double> move_logits;
  std::vector<double> assoc_logits;

  static PolicyHead from_output(std::span<const double> output, int num_moves);
  int num_moves() const { return static_cast<int>(move_logits.size()); }
  int num_bits() const { return static_cast<int>(assoc_logits.size()); }
};

using MoveMask = std::vector<std::uint8_t>;  // 1 = allowed

struct ActionSample {
  int move = 0;
  std::vector<std::uint8_t> bits;
  double log_prob = 0.0;
};

double log_sigmoid(double x);
double sigmoid(double x);

/// Move probabilities after masking.
std::vector<double> move_probabilities(const PolicyHead& head, const MoveMask& mask);

/// Categorical term plus the sum of Bernoulli terms.
double joint_log_prob(const PolicyHead& head, const MoveMask& mask, int move, std::span<const std::uint8_t> bits);
double entropy(const PolicyHead& head, const MoveMask& mask);

/// Throws std::logic_error if the mask allows no move.
ActionSample sample_action(const PolicyHead& head, const MoveMask& mask, Rng& rng);

/// argmax move, bit = (logit > 0).
ActionSample greedy_action(const PolicyHead& head, const MoveMask& mask);

/// d joint_log_prob / d output, laid out like the actor output.
void log_prob_gradient(const PolicyHead& head, const MoveMask& mask, int move, std::span<const std::uint8_t> bits,
                       std::span<double> grad);
/// d entropy / d output.
void entropy_gradient(const PolicyHead& head, const MoveMask& mask, std::span<double> grad);

}  // namespace uavaoi
