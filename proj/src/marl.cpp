#include "uavaoi/marl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace uavaoi::marl {

namespace {

Rng seeded(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(index)};
  return Rng(seq);
}

constexpr std::uint64_t kEnvStream = 0xE1;
constexpr std::uint64_t kAgentStream = 0xA9;
constexpr std::uint64_t kInitStream = 0x17;

std::vector<nn::Activation> hidden_acts(std::size_t hidden_layers) {
  std::vector<nn::Activation> acts(hidden_layers, nn::Activation::tanh);
  acts.push_back(nn::Activation::identity);
  return acts;
}

std::vector<int> widths(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> w{in};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}

void encode_cell(Cell c, CellEncoding enc, const EnvConfig& cfg, std::vector<double>& out) {
  if (enc == CellEncoding::one_hot_cell) {
    const std::size_t base = out.size();
    out.resize(base + cfg.num_cells(), 0.0);
    out[base + static_cast<std::size_t>(c.y) * cfg.cells_x() + c.x] = 1.0;
  } else {
    out.push_back(cfg.cells_x() > 1 ? static_cast<double>(c.x) / (cfg.cells_x() - 1) : 0.0);
    out.push_back(cfg.cells_y() > 1 ? static_cast<double>(c.y) / (cfg.cells_y() - 1) : 0.0);
  }
}

EvaluationEpisode summarize(TrajectoryRecord traj, int violations, int move_violations, const EnvConfig& cfg) {
  EvaluationEpisode ep;
  ep.objectives = evaluate_objectives(traj, cfg);
  ep.communications = communication_stats(traj, cfg);
  ep.violations = violations;
  ep.move_violations = move_violations;
  ep.trajectory = std::move(traj);
  return ep;
}

}  // namespace

AgentMemory AgentMemory::fresh(int num_devices) { return AgentMemory{std::vector<int>(num_devices, -1)}; }

void AgentMemory::record(int u, const AssocMatrix& granted, int t) {
  for (int i = 0; i < granted.num_devices(); ++i)
    if (granted.at(i, u)) last_collected[i] = t;
}

int observation_width(const ObservationSpec& spec, const EnvConfig& cfg) {
  int w = spec.encoding == CellEncoding::one_hot_cell ? cfg.num_cells() : 2;
  if (spec.mode != ObservationMode::paper_literal) w += 2;
  if (spec.mode == ObservationMode::local_history) w += cfg.num_devices;
  return w;
}

std::vector<double> build_observation(const EnvState& state, int u, const ObservationSpec& spec,
                                      const EnvConfig& cfg, const AgentMemory* memory) {
  if (u < 0 || u >= cfg.num_uavs) throw std::out_of_range("build_observation: bad agent id");
  std::vector<double> obs;
  obs.reserve(observation_width(spec, cfg));
  encode_cell(state.uav_cells[u], spec.encoding, cfg, obs);
  if (spec.mode == ObservationMode::paper_literal) return obs;

  obs.push_back(static_cast<double>(state.t) / cfg.horizon);
  const double budget = cfg.uavs[u].max_flight_time;
  obs.push_back(budget > 0.0 ? std::clamp((budget - state.spent_flight[u]) / budget, 0.0, 1.0) : 0.0);
  if (spec.mode == ObservationMode::augmented) return obs;

  for (int i = 0; i < cfg.num_devices; ++i) {
    const int last = memory ? memory->last_collected[i] : -1;
    obs.push_back(last < 0 ? 1.0 : std::min(1.0, static_cast<double>(state.t - last) / cfg.horizon));
  }
  return obs;
}

std::vector<double> build_global_state(const EnvState& state, const ObservationSpec& spec, const EnvConfig& cfg,
                                       const std::vector<AgentMemory>& memories) {
  std::vector<double> s;
  for (int u = 0; u < cfg.num_uavs; ++u) {
    const auto o = build_observation(state, u, spec, cfg, memories.empty() ? nullptr : &memories[u]);
    s.insert(s.end(), o.begin(), o.end());
  }
  return s;
}

MoveMask move_mask(const EnvState& state, int u, const EnvConfig& cfg) {
  MoveMask m(kNumMoves, 0);
  for (int j = 0; j < kNumMoves; ++j) m[j] = move_feasible(state, u, move_from_index(j), cfg) ? 1 : 0;
  m[0] = 1;  // staying is always allowed
  return m;
}

std::string to_string(TrainMode m) {
  switch (m) {
    case TrainMode::dec: return "dec";
    case TrainMode::centr_obj1: return "centr_obj1";
    case TrainMode::centr_obj2: return "centr_obj2";
  }
  return "dec";
}

TrainMode train_mode_from_string(const std::string& s) {
  if (s == "dec") return TrainMode::dec;
  if (s == "centr_obj1" || s == "centr-obj1") return TrainMode::centr_obj1;
  if (s == "centr_obj2" || s == "centr-obj2") return TrainMode::centr_obj2;
  throw ConfigError("unknown mode '" + s + "'");
}

std::string to_string(ObservationMode m) {
  switch (m) {
    case ObservationMode::paper_literal: return "paper_literal";
    case ObservationMode::augmented: return "augmented";
    case ObservationMode::local_history: return "local_history";
  }
  return "paper_literal";
}

ObservationMode observation_mode_from_string(const std::string& s) {
  if (s == "paper_literal") return ObservationMode::paper_literal;
  if (s == "augmented") return ObservationMode::augmented;
  if (s == "local_history") return ObservationMode::local_history;
  throw ConfigError("unknown observation mode '" + s + "'");
}

std::string to_string(CellEncoding e) { return e == CellEncoding::one_hot_cell ? "one_hot_cell" : "normalized_xy"; }

CellEncoding cell_encoding_from_string(const std::string& s) {
  if (s == "one_hot_cell") return CellEncoding::one_hot_cell;
  if (s == "normalized_xy") return CellEncoding::normalized_xy;
  throw ConfigError("unknown cell encoding '" + s + "'");
}

double RewardScaler::scale(double reward) {
  running_return = running_return * discount + reward;
  count += 1.0;
  const double d = running_return - mean;
  mean += d / count;
  m2 += d * (running_return - mean);
  const double sd = std();
  return sd > 1e-12 ? reward / sd : reward;
}

double RewardScaler::std() const { return count > 1.0 ? std::sqrt(m2 / count) : 0.0; }

int critic_input_width(const TrainConfig& tc, const EnvConfig& cfg) {
  const int w = observation_width(tc.obs, cfg);
  return tc.mode == TrainMode::dec ? w : w * cfg.num_uavs;
}

std::vector<AgentBundle> make_agents(const TrainConfig& tc, const EnvConfig& cfg) {
  tc.ppo.validate();
  const int obs_w = observation_width(tc.obs, cfg);
  const int critic_w = critic_input_width(tc, cfg);
  const auto acts = hidden_acts(tc.hidden.size());
  std::vector<AgentBundle> agents(cfg.num_uavs);
  for (int u = 0; u < cfg.num_uavs; ++u) {
    auto& a = agents[u];
    a.id = u;
    Rng init = seeded(tc.seed, kInitStream, u);
    a.actor = nn::Mlp(widths(obs_w, tc.hidden, kNumMoves + cfg.num_devices), acts, init);
    a.critic = nn::Mlp(widths(critic_w, tc.hidden, 1), acts, init);
    a.actor_opt = nn::AdamState::for_net(a.actor, tc.ppo.learning_rate);
    a.critic_opt = nn::AdamState::for_net(a.critic, tc.ppo.learning_rate);
    a.scaler.discount = tc.ppo.discount;
    a.rng = seeded(tc.seed, kAgentStream, u);
  }
  return agents;
}

ppo::UpdateDiagnostics update_agent(AgentBundle& agent, const ppo::PpoConfig& cfg) {
  agent.buffer.finalize(0.0, cfg);
  const auto d = ppo::ppo_update(agent.actor, agent.critic, agent.buffer, cfg, agent.actor_opt, agent.critic_opt,
                                 agent.rng);
  agent.diagnostics.push_back(d);
  agent.buffer.clear();
  return d;
}

std::vector<MetricsRecord> train_more(std::vector<AgentBundle>& agents, const EnvConfig& cfg, const TrainConfig& tc,
                                      int episodes, int first_episode) {
  const int U = cfg.num_uavs;
  if (static_cast<int>(agents.size()) != U) throw ConfigError("train: agent count differs from num_uavs");
  const int obs_w = observation_width(tc.obs, cfg);
  const int critic_w = critic_input_width(tc, cfg);
  for (const auto& a : agents) {
    if (a.actor.input_width() != obs_w || a.actor.output_width() != kNumMoves + cfg.num_devices)
      throw ConfigError("train: actor shape does not match the observation spec");
    if (a.critic.input_width() != critic_w || a.critic.output_width() != 1)
      throw ConfigError("train: critic shape does not match the training mode");
  }
  const bool central = tc.mode != TrainMode::dec;

  Rng env_rng = seeded(tc.seed, kEnvStream, static_cast<std::uint64_t>(first_episode));
  std::vector<MetricsRecord> metrics;
  metrics.reserve(episodes);

  for (int ep = 0; ep < episodes; ++ep) {
    EnvState state = initial_state(cfg);
    auto traj = TrajectoryRecord::start(state);
    std::vector<AgentMemory> memories(U, AgentMemory::fresh(cfg.num_devices));
    MetricsRecord rec;
    rec.episode = first_episode + ep;
    rec.mode = tc.mode;

    while (state.t < cfg.horizon) {
      std::vector<double> global;
      if (central) {
        global = build_global_state(state, tc.obs, cfg, memories);
        rec.scalars_exchanged += static_cast<std::int64_t>(U) * static_cast<std::int64_t>(global.size());
      }
      JointAction joint;
      joint.per_uav.resize(U);
      std::vector<ppo::Transition> pending(U);
      for (int u = 0; u < U; ++u) {
        auto& agent = agents[u];
        auto& tr = pending[u];
        tr.observation = build_observation(state, u, tc.obs, cfg, &memories[u]);
        tr.move_mask = move_mask(state, u, cfg);
        const auto tape = nn::forward(agent.actor, tr.observation);
        const auto head = PolicyHead::from_output(tape.output(), kNumMoves);
        const auto a = sample_action(head, tr.move_mask, agent.rng);
        tr.move = a.move;
        tr.assoc = a.bits;
        tr.log_prob = a.log_prob;
        if (central) tr.critic_observation = global;
        const auto& critic_in = central ? tr.critic_observation : tr.observation;
        tr.value = nn::forward(agent.critic, critic_in).output()[0];
        joint.per_uav[u] = UavAction{move_from_index(a.move), a.bits};
      }

      auto result = step(state, joint, env_rng, cfg);
      const auto& out = result.outcome;
      rec.violations += out.violations;
      for (int u = 0; u < U; ++u) {
        auto& tr = pending[u];
        double r = tc.mode == TrainMode::centr_obj1 ? -out.aoi_snapshot : out.per_uav_reward[u];
        if (tc.normalize_rewards) r = agents[u].scaler.scale(r);
        tr.reward = r;
        tr.done = result.state.t >= cfg.horizon;
        memories[u].record(u, out.granted, result.state.t);
        agents[u].buffer.add(std::move(tr));
      }
      traj.append(result);
      state = std::move(result.state);
    }

    for (auto& agent : agents) {
      agent.scaler.end_episode();
      update_agent(agent, tc.ppo);
    }

    rec.objective1 = objective1(traj, cfg);
    rec.objective2 = objective2(traj, cfg);
    const auto comm = communication_stats(traj, cfg);
    rec.communications = comm.total;
    rec.distinct_devices = comm.distinct_devices;
    metrics.push_back(rec);
  }
  return metrics;
}

TrainResult train(const EnvConfig& cfg, const TrainConfig& tc) {
  cfg.validate();
  TrainResult res;
  res.config = tc;
  res.agents = make_agents(tc, cfg);
  res.metrics = train_more(res.agents, cfg, tc, tc.episodes, 0);
  return res;
}

std::vector<EvaluationEpisode> evaluate(const std::vector<AgentBundle>& agents, const EnvConfig& cfg,
                                        const ObservationSpec& obs, int episodes, std::uint64_t seed) {
  const int U = cfg.num_uavs;
  if (static_cast<int>(agents.size()) != U) throw ConfigError("evaluate: agent count differs from num_uavs");
  Rng env_rng = seeded(seed, kEnvStream, 0xEFA1);
  std::vector<EvaluationEpisode> out;
  for (int ep = 0; ep < episodes; ++ep) {
    EnvState state = initial_state(cfg);
    auto traj = TrajectoryRecord::start(state);
    std::vector<AgentMemory> memories(U, AgentMemory::fresh(cfg.num_devices));
    int violations = 0, move_violations = 0;
    while (state.t < cfg.horizon) {
      JointAction joint;
      joint.per_uav.resize(U);
      for (int u = 0; u < U; ++u) {
        const auto o = build_observation(state, u, obs, cfg, &memories[u]);
        const auto tape = nn::forward(agents[u].actor, o);
        const auto a = greedy_action(PolicyHead::from_output(tape.output(), kNumMoves), move_mask(state, u, cfg));
        joint.per_uav[u] = UavAction{move_from_index(a.move), a.bits};
      }
      auto result = step(state, joint, env_rng, cfg);
      violations += result.outcome.violations;
      move_violations += result.outcome.move_violations;
      for (int u = 0; u < U; ++u) memories[u].record(u, result.outcome.granted, result.state.t);
      traj.append(result);
      state = std::move(result.state);
    }
    out.push_back(summarize(std::move(traj), violations, move_violations, cfg));
  }
  return out;
}

std::vector<EvaluationEpisode> random_baseline(const EnvConfig& cfg, int episodes, std::uint64_t seed) {
  Rng env_rng = seeded(seed, kEnvStream, 0xBA5E);
  Rng act_rng = seeded(seed, kAgentStream, 0xBA5E);
  std::bernoulli_distribution coin(0.5);
  std::vector<EvaluationEpisode> out;
  for (int ep = 0; ep < episodes; ++ep) {
    EnvState state = initial_state(cfg);
    auto traj = TrajectoryRecord::start(state);
    int violations = 0, move_violations = 0;
    while (state.t < cfg.horizon) {
      JointAction joint;
      joint.per_uav.resize(cfg.num_uavs);
      for (int u = 0; u < cfg.num_uavs; ++u) {
        const auto mask = move_mask(state, u, cfg);
        std::vector<int> allowed;
        for (int j = 0; j < kNumMoves; ++j)
          if (mask[j]) allowed.push_back(j);
        std::uniform_int_distribution<std::size_t> pick(0, allowed.size() - 1);
        auto& a = joint.per_uav[u];
        a.move = move_from_index(allowed[pick(act_rng)]);
        a.assoc.resize(cfg.num_devices);
        for (auto& b : a.assoc) b = coin(act_rng) ? 1 : 0;
      }
      auto result = step(state, joint, env_rng, cfg);
      violations += result.outcome.violations;
      move_violations += result.outcome.move_violations;
      traj.append(result);
      state = std::move(result.state);
    }
    out.push_back(summarize(std::move(traj), violations, move_violations, cfg));
  }
  return out;
}

void write_metrics_csv(const std::vector<MetricsRecord>& records, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "episode,mode,objective1,objective2,communications,distinct_devices,violations,scalars_exchanged\n";
  f.precision(17);
  for (const auto& r : records)
    f << r.episode << ',' << to_string(r.mode) << ',' << r.objective1 << ',' << r.objective2 << ','
      << r.communications << ',' << r.distinct_devices << ',' << r.violations << ',' << r.scalars_exchanged << '\n';
}

std::vector<MetricsRecord> read_metrics_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::string line;
  std::getline(f, line);
  std::vector<MetricsRecord> out;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> cols;
    while (std::getline(ss, field, ',')) cols.push_back(field);
    if (cols.size() != 8) throw std::runtime_error("malformed metrics row in " + path);
    MetricsRecord r;
    r.episode = std::stoi(cols[0]);
    r.mode = train_mode_from_string(cols[1]);
    r.objective1 = std::stod(cols[2]);
    r.objective2 = std::stod(cols[3]);
    r.communications = std::stoi(cols[4]);
    r.distinct_devices = std::stoi(cols[5]);
    r.violations = std::stoi(cols[6]);
    r.scalars_exchanged = std::stoll(cols[7]);
    out.push_back(r);
  }
  return out;
}

void write_diagnostics_csv(const std::vector<ppo::UpdateDiagnostics>& diags, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "update,policy_loss,value_loss,entropy,clip_fraction,mean_ratio\n";
  f.precision(17);
  for (std::size_t k = 0; k < diags.size(); ++k) {
    const auto& d = diags[k];
    f << k << ',' << d.policy_loss << ',' << d.value_loss << ',' << d.entropy << ',' << d.clip_fraction << ','
      << d.mean_ratio << '\n';
  }
}

nlohmann::json agent_checkpoint(const AgentBundle& agent) {
  return {{"id", agent.id},
          {"actor", nn::checkpoint_json(agent.actor, agent.actor_opt)},
          {"critic", nn::checkpoint_json(agent.critic, agent.critic_opt)}};
}

void load_agent_checkpoint(const nlohmann::json& j, AgentBundle& agent) {
  agent.id = j.at("id").get<int>();
  nn::load_checkpoint(j.at("actor"), agent.actor, agent.actor_opt);
  nn::load_checkpoint(j.at("critic"), agent.critic, agent.critic_opt);
}

}  // namespace uavaoi::marl
