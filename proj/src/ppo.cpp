#include "uavaoi/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace uavaoi::ppo {

void PpoConfig::validate() const {
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw std::invalid_argument("ppo: clip_epsilon must be in (0, 1)");
  if (!(discount >= 0.0 && discount <= 1.0)) throw std::invalid_argument("ppo: discount must be in [0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw std::invalid_argument("ppo: gae_lambda must be in [0, 1]");
  if (epochs_per_update < 1 || minibatch_size < 1) throw std::invalid_argument("ppo: epochs and minibatch must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("ppo: learning_rate must be positive");
}

GaeResult compute_gae(std::span<const Transition> tr, double bootstrap_value, const PpoConfig& cfg) {
  if (tr.empty()) throw std::logic_error("compute_gae: empty buffer");
  const std::size_t n = tr.size();
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_adv = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double next_value = k + 1 < n ? tr[k + 1].value : bootstrap_value;
    const double live = tr[k].done ? 0.0 : 1.0;
    const double delta = tr[k].reward + cfg.discount * next_value * live - tr[k].value;
    next_adv = delta + cfg.discount * cfg.gae_lambda * live * next_adv;
    out.advantages[k] = next_adv;
    out.returns[k] = next_adv + tr[k].value;
  }
  return out;
}

void normalize_advantages(std::vector<double>& adv) {
  if (adv.empty()) return;
  const double n = static_cast<double>(adv.size());
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / n);
  for (double& a : adv) a -= mean;
  if (sd > 1e-12)
    for (double& a : adv) a /= sd;
}

void RolloutBuffer::add(Transition t) {
  transitions_.push_back(std::move(t));
  finalized_ = false;
}

void RolloutBuffer::clear() {
  transitions_.clear();
  advantages_.clear();
  returns_.clear();
  finalized_ = false;
}

void RolloutBuffer::finalize(double bootstrap_value, const PpoConfig& cfg) {
  auto g = compute_gae(transitions_, bootstrap_value, cfg);
  returns_ = std::move(g.returns);
  advantages_ = std::move(g.advantages);
  normalize_advantages(advantages_);
  finalized_ = true;
}

double clipped_policy_loss(std::span<const double> new_lp, std::span<const double> old_lp,
                           std::span<const double> adv, double eps) {
  if (new_lp.size() != old_lp.size() || new_lp.size() != adv.size())
    throw std::invalid_argument("clipped_policy_loss: length mismatch");
  if (new_lp.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < new_lp.size(); ++k) {
    const double rho = std::exp(new_lp[k] - old_lp[k]);
    sum += std::min(rho * adv[k], std::clamp(rho, 1.0 - eps, 1.0 + eps) * adv[k]);
  }
  return -sum / static_cast<double>(new_lp.size());
}

double value_loss(std::span<const double> predicted, std::span<const double> targets) {
  if (predicted.size() != targets.size()) throw std::invalid_argument("value_loss: length mismatch");
  if (predicted.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < predicted.size(); ++k) sum += (predicted[k] - targets[k]) * (predicted[k] - targets[k]);
  return sum / static_cast<double>(predicted.size());
}

UpdateDiagnostics ppo_update(nn::Mlp& actor, nn::Mlp& critic, const RolloutBuffer& buffer, const PpoConfig& cfg,
                             nn::AdamState& actor_opt, nn::AdamState& critic_opt, Rng& rng) {
  if (!buffer.finalized()) throw std::logic_error("ppo_update: buffer not finalized");
  const auto& tr = buffer.transitions();
  const auto& adv = buffer.advantages();
  const auto& ret = buffer.returns();
  const std::size_t n = tr.size();
  const int num_moves = actor.output_width() - static_cast<int>(tr.front().assoc.size());

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  UpdateDiagnostics diag;
  double sum_policy = 0.0, sum_value = 0.0, sum_entropy = 0.0, sum_ratio = 0.0;
  std::size_t clipped = 0, seen = 0;

  for (int epoch = 0; epoch < cfg.epochs_per_update; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += cfg.minibatch_size) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(cfg.minibatch_size));
      const std::size_t b = end - start;
      const double inv_b = 1.0 / static_cast<double>(b);

      std::vector<std::vector<double>> actor_in(b), critic_in(b);
      for (std::size_t k = 0; k < b; ++k) {
        const auto& t = tr[order[start + k]];
        actor_in[k] = t.observation;
        critic_in[k] = t.critic_observation.empty() ? t.observation : t.critic_observation;
      }

      std::vector<double> new_lp(b), ratio(b), ent(b), vpred(b);
      const auto actor_grad = nn::accumulate_gradients(
          actor, actor_in, [&](std::size_t k, std::span<const double> out, std::span<double> g) {
            const auto idx = order[start + k];
            const auto& t = tr[idx];
            const auto head = PolicyHead::from_output(out, num_moves);
            new_lp[k] = joint_log_prob(head, t.move_mask, t.move, t.assoc);
            ent[k] = entropy(head, t.move_mask);
            ratio[k] = std::exp(new_lp[k] - t.log_prob);
            const double a = adv[idx];
            const double unclipped = ratio[k] * a;
            const double clipped_obj = std::clamp(ratio[k], 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon) * a;
            std::vector<double> tmp(g.size(), 0.0);
            if (unclipped <= clipped_obj && a != 0.0) {
              log_prob_gradient(head, t.move_mask, t.move, t.assoc, tmp);
              for (std::size_t j = 0; j < g.size(); ++j) g[j] -= a * ratio[k] * tmp[j] * inv_b;
            }
            if (cfg.entropy_coef != 0.0) {
              entropy_gradient(head, t.move_mask, tmp);
              for (std::size_t j = 0; j < g.size(); ++j) g[j] -= cfg.entropy_coef * tmp[j] * inv_b;
            }
          });
      const auto critic_grad = nn::accumulate_gradients(
          critic, critic_in, [&](std::size_t k, std::span<const double> out, std::span<double> g) {
            const auto idx = order[start + k];
            vpred[k] = out[0];
            g[0] = cfg.value_coef * 2.0 * (out[0] - ret[idx]) * inv_b;
          });

      std::vector<double> old_lp(b), mb_adv(b), mb_ret(b);
      for (std::size_t k = 0; k < b; ++k) {
        old_lp[k] = tr[order[start + k]].log_prob;
        mb_adv[k] = adv[order[start + k]];
        mb_ret[k] = ret[order[start + k]];
      }
      const double pl = clipped_policy_loss(new_lp, old_lp, mb_adv, cfg.clip_epsilon);
      const double vl = value_loss(vpred, mb_ret);
      const double mean_ent = std::accumulate(ent.begin(), ent.end(), 0.0) * inv_b;
      const double total = pl + cfg.value_coef * vl - cfg.entropy_coef * mean_ent;
      if (!std::isfinite(total)) throw nn::NumericError("ppo_update: non-finite loss");

      sum_policy += pl * b;
      sum_value += vl * b;
      sum_entropy += mean_ent * b;
      for (double r : ratio) {
        sum_ratio += r;
        if (std::fabs(r - 1.0) > cfg.clip_epsilon) ++clipped;
      }
      seen += b;

      nn::adam_step(actor, actor_grad, actor_opt);
      nn::adam_step(critic, critic_grad, critic_opt);
    }
  }
  const double s = static_cast<double>(seen);
  diag.policy_loss = sum_policy / s;
  diag.value_loss = sum_value / s;
  diag.entropy = sum_entropy / s;
  diag.mean_ratio = sum_ratio / s;
  diag.clip_fraction = static_cast<double>(clipped) / s;
  return diag;
}

}  // namespace uavaoi::ppo
