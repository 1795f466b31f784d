#include "uavaoi/policy_head.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uavaoi {

namespace {

double softplus(double y) { return std::max(y, 0.0) + std::log1p(std::exp(-std::fabs(y))); }

std::vector<double> masked_logits(const PolicyHead& head, const MoveMask& mask) {
  if (mask.size() != head.move_logits.size()) throw std::invalid_argument("policy head: mask length mismatch");
  std::vector<double> z(head.move_logits);
  bool any = false;
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (mask[j]) any = true;
    else z[j] += kMaskedLogit;
  }
  if (!any) throw std::logic_error("policy head: every move is masked");
  return z;
}

std::vector<double> log_softmax(const std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - mx);
  const double lse = mx + std::log(s);
  std::vector<double> out(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) out[j] = z[j] - lse;
  return out;
}

}  // namespace

PolicyHead PolicyHead::from_output(std::span<const double> output, int num_moves) {
  if (num_moves < 1 || static_cast<int>(output.size()) < num_moves)
    throw std::invalid_argument("policy head: output shorter than the move logits");
  PolicyHead h;
  h.move_logits.assign(output.begin(), output.begin() + num_moves);
  h.assoc_logits.assign(output.begin() + num_moves, output.end());
  return h;
}

double log_sigmoid(double x) { return -softplus(-x); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> move_probabilities(const PolicyHead& head, const MoveMask& mask) {
  auto lp = log_softmax(masked_logits(head, mask));
  for (auto& v : lp) v = std::exp(v);
  return lp;
}

double joint_log_prob(const PolicyHead& head, const MoveMask& mask, int move, std::span<const std::uint8_t> bits) {
  if (static_cast<int>(bits.size()) != head.num_bits()) throw std::invalid_argument("policy head: bit count mismatch");
  double lp = log_softmax(masked_logits(head, mask))[move];
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const double x = head.assoc_logits[i];
    lp += bits[i] ? log_sigmoid(x) : log_sigmoid(-x);
  }
  return lp;
}

double entropy(const PolicyHead& head, const MoveMask& mask) {
  const auto lp = log_softmax(masked_logits(head, mask));
  double h = 0.0;
  for (std::size_t j = 0; j < lp.size(); ++j) {
    const double p = std::exp(lp[j]);
    if (p > 0.0) h -= p * lp[j];
  }
  for (double x : head.assoc_logits) {
    const double s = sigmoid(x);
    h += s * softplus(-x) + (1.0 - s) * softplus(x);
  }
  return h;
}

ActionSample sample_action(const PolicyHead& head, const MoveMask& mask, Rng& rng) {
  const auto probs = move_probabilities(head, mask);
  ActionSample a;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r = unit(rng);
  double acc = 0.0;
  a.move = -1;
  int last_allowed = 0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (!mask[j]) continue;
    last_allowed = static_cast<int>(j);
    acc += probs[j];
    if (r < acc) {
      a.move = static_cast<int>(j);
      break;
    }
  }
  if (a.move < 0) a.move = last_allowed;
  a.bits.resize(head.assoc_logits.size());
  for (std::size_t i = 0; i < a.bits.size(); ++i) a.bits[i] = unit(rng) < sigmoid(head.assoc_logits[i]) ? 1 : 0;
  a.log_prob = joint_log_prob(head, mask, a.move, a.bits);
  return a;
}

ActionSample greedy_action(const PolicyHead& head, const MoveMask& mask) {
  const auto z = masked_logits(head, mask);
  ActionSample a;
  a.move = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
  a.bits.resize(head.assoc_logits.size());
  for (std::size_t i = 0; i < a.bits.size(); ++i) a.bits[i] = head.assoc_logits[i] > 0.0 ? 1 : 0;
  a.log_prob = joint_log_prob(head, mask, a.move, a.bits);
  return a;
}

void log_prob_gradient(const PolicyHead& head, const MoveMask& mask, int move, std::span<const std::uint8_t> bits,
                       std::span<double> grad) {
  const auto probs = move_probabilities(head, mask);
  const std::size_t m = probs.size();
  for (std::size_t j = 0; j < m; ++j) grad[j] = (static_cast<int>(j) == move ? 1.0 : 0.0) - probs[j];
  for (std::size_t i = 0; i < bits.size(); ++i) grad[m + i] = (bits[i] ? 1.0 : 0.0) - sigmoid(head.assoc_logits[i]);
}

void entropy_gradient(const PolicyHead& head, const MoveMask& mask, std::span<double> grad) {
  const auto lp = log_softmax(masked_logits(head, mask));
  const std::size_t m = lp.size();
  double h = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double p = std::exp(lp[j]);
    if (p > 0.0) h -= p * lp[j];
  }
  for (std::size_t j = 0; j < m; ++j) {
    const double p = std::exp(lp[j]);
    grad[j] = p > 0.0 ? -p * (lp[j] + h) : 0.0;
  }
  for (std::size_t i = 0; i < head.assoc_logits.size(); ++i) {
    const double x = head.assoc_logits[i];
    const double s = sigmoid(x);
    grad[m + i] = -x * s * (1.0 - s);
  }
}

}  // namespace uavaoi
