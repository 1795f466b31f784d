// One PASS/FAIL line per criterion followed by indented details. Optional
// arguments select a subset, e.g. `acceptance 7 12`.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>

#include "support.hpp"
#include "uavaoi/experiments.hpp"
#include "uavaoi/oracle.hpp"

using namespace uavaoi;
using uavaoi::testing::random_action;
using uavaoi::testing::random_config;
using uavaoi::testing::random_rollout;

namespace {

// Desk-scale training settings shared by criteria 8-12.
constexpr int kDeskEpisodes = 2000;
constexpr int kDeskEvalEpisodes = 5;
constexpr int kBaselineEpisodes = 200;
const std::vector<std::uint64_t> kSeeds = {0, 1, 2};
const marl::ObservationSpec kDeskObs{marl::ObservationMode::augmented, marl::CellEncoding::one_hot_cell};

// Oracle-proximity settings (criterion 7).
constexpr int kTinyEpisodes = 2000;
const marl::ObservationSpec kTinyObs{marl::ObservationMode::augmented, marl::CellEncoding::one_hot_cell};

struct Outcome {
  bool pass = false;
  std::vector<std::string> details;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Every trajectory produced anywhere in this run goes through the audit.
struct Audit {
  long trajectories = 0;
  long violations = 0;
  std::string first;

  void check(const TrajectoryRecord& tr, const EnvConfig& cfg) {
    ++trajectories;
    const auto v = check_feasibility(tr, cfg);
    if (!v.empty() && first.empty()) first = fmt("%s at t=%d entity=%d", v[0].constraint.c_str(), v[0].t, v[0].entity);
    violations += static_cast<long>(v.size());
  }
} audit;

// Packet age from the schedule alone: zero once collected at any interval in
// [max(nk, 1), t], otherwise t - max(nk, 1) + 1 intervals.
std::int64_t closed_form_age(int n, int k, int t, const std::vector<std::uint8_t>& collected_at) {
  const int enter = std::max(n * k, 1);
  for (int l = enter; l <= t; ++l)
    if (collected_at[l]) return 0;
  return t - enter + 1;
}

Outcome aoi_exactness() {
  Rng rng(101);
  long checked = 0, mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto cfg = random_config(rng);
    std::bernoulli_distribution coin(std::uniform_real_distribution<double>(0.0, 0.6)(rng));
    std::vector<std::vector<std::uint8_t>> sched(cfg.num_devices, std::vector<std::uint8_t>(cfg.horizon + 1, 0));
    EnvState s = initial_state(cfg);
    for (int t = 1; t <= cfg.horizon; ++t) {
      AssocMatrix g(cfg.num_devices, cfg.num_uavs);
      for (int i = 0; i < cfg.num_devices; ++i)
        if (coin(rng)) {
          g.at(i, static_cast<int>(rng() % cfg.num_uavs)) = 1;
          sched[i][t] = 1;
        }
      s = aoi_advance(s, g, cfg);
      for (int i = 0; i < cfg.num_devices; ++i) {
        const int k = cfg.devices[i].gen_period_k;
        const auto& buf = s.device_buffers[i];
        if (static_cast<int>(buf.size()) != t / k + 1) ++mismatches;
        for (const auto& p : buf) {
          ++checked;
          if (p.age_steps != closed_form_age(p.gen_index, k, t, sched[i])) ++mismatches;
        }
      }
    }
  }
  return {mismatches == 0, {fmt("%ld packet ages compared over 1000 schedules, %ld mismatches", checked, mismatches)}};
}

Outcome decomposition() {
  Rng rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto cfg = random_config(rng);
    const auto tr = random_rollout(cfg, rng);
    audit.check(tr, cfg);
    double sum = 0.0;
    for (const auto& rs : tr.rewards)
      for (double r : rs) sum += r;
    const double o2 = objective2(tr, cfg);
    const double rel = o2 == 0.0 ? std::fabs(sum) : std::fabs(o2 - sum) / std::fabs(o2);
    worst = std::max(worst, rel);
  }
  return {worst < 1e-9, {fmt("max relative error %.3g over 100 trajectories", worst)}};
}

Outcome channel_statistics() {
  Outcome out;
  out.pass = true;
  for (double phi : {0.0, 1.0, 10.0}) {
    auto cfg = desk_scale_config(0);
    cfg.rician_factor = phi;
    const double m = mean_fading_power(cfg, 137.0, 100000, 77);
    out.pass = out.pass && m >= 0.98 && m <= 1.02;
    out.details.push_back(fmt("phi=%g: mean |h|^2 d^2 = %.5f", phi, m));
  }
  auto cfg = desk_scale_config(0);
  cfg.pure_los = true;
  Rng rng(3);
  bool exact = true;
  for (double d : {80.0, 100.0, 141.4213562373095, 523.7}) {
    const auto s = sample_channel(rng, d, cfg);
    exact = exact && std::sqrt(s.gain_sq) * d == 1.0 && s.fading_power == 1.0;
  }
  out.pass = out.pass && exact;
  out.details.push_back(std::string("pure line of sight |h| d == 1: ") + (exact ? "exact" : "NOT exact"));
  return out;
}

Outcome gradient_fidelity() {
  Rng rng(404);
  double worst = 0.0;
  const double h = 1e-5;
  for (int net_i = 0; net_i < 20; ++net_i) {
    std::uniform_int_distribution<int> width(1, 8), depth(1, 3);
    std::vector<int> widths{width(rng)};
    std::vector<nn::Activation> acts;
    const int layers = depth(rng);
    for (int l = 0; l < layers; ++l) {
      widths.push_back(width(rng));
      acts.push_back(l + 1 == layers ? nn::Activation::identity : nn::Activation::tanh);
    }
    const nn::Mlp net(widths, acts, rng);
    std::normal_distribution<double> g;
    std::vector<double> x(widths.front()), c(widths.back());
    for (auto& v : x) v = g(rng);
    for (auto& v : c) v = g(rng);
    // loss = sum_j c_j y_j + 0.5 y_j^2
    auto loss = [&](const nn::Mlp& m) {
      const auto tape = nn::forward(m, x);
      double s = 0.0;
      for (std::size_t j = 0; j < c.size(); ++j) s += c[j] * tape.output()[j] + 0.5 * tape.output()[j] * tape.output()[j];
      return s;
    };
    const auto tape = nn::forward(net, x);
    std::vector<double> og(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) og[j] = c[j] + tape.output()[j];
    const auto analytic = nn::backward(net, tape, og).flatten();
    const auto params = net.flatten();
    auto probe = net;
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto q = params;
      q[p] = params[p] + h;
      probe.assign(q);
      const double fp = loss(probe);
      q[p] = params[p] - h;
      probe.assign(q);
      const double fm = loss(probe);
      const double numeric = (fp - fm) / (2 * h);
      const double scale = std::max({std::fabs(analytic[p]), std::fabs(numeric), 1e-6});
      worst = std::max(worst, std::fabs(analytic[p] - numeric) / scale);
    }
  }
  return {worst < 1e-4, {fmt("max relative error %.3g over 20 networks", worst)}};
}

Outcome ppo_bandit() {
  Outcome out;
  int converged = 0;
  for (std::uint64_t seed : kSeeds) {
    Rng rng(seed * 7919 + 1);
    nn::Mlp actor({1, 16, 2}, {nn::Activation::tanh, nn::Activation::identity}, rng);
    nn::Mlp critic({1, 16, 1}, {nn::Activation::tanh, nn::Activation::identity}, rng);
    ppo::PpoConfig cfg;
    cfg.learning_rate = 3e-3;
    auto aopt = nn::AdamState::for_net(actor, cfg.learning_rate);
    auto copt = nn::AdamState::for_net(critic, cfg.learning_rate);
    const std::vector<double> obs{1.0};
    const MoveMask mask(2, 1);
    std::normal_distribution<double> noise(0.0, 0.1);
    int at = -1;
    double p_best = 0.0;
    for (int update = 1; update <= 200; ++update) {
      ppo::RolloutBuffer buf;
      for (int i = 0; i < 32; ++i) {
        const auto head = PolicyHead::from_output(nn::forward(actor, obs).output(), 2);
        const auto a = sample_action(head, mask, rng);
        ppo::Transition t;
        t.observation = obs;
        t.move_mask = mask;
        t.move = a.move;
        t.log_prob = a.log_prob;
        t.reward = (a.move == 1 ? 0.7 : 0.3) + noise(rng);
        t.value = nn::forward(critic, obs).output()[0];
        t.done = true;
        buf.add(t);
      }
      buf.finalize(0.0, cfg);
      ppo::ppo_update(actor, critic, buf, cfg, aopt, copt, rng);
      p_best = move_probabilities(PolicyHead::from_output(nn::forward(actor, obs).output(), 2), mask)[1];
      if (p_best > 0.95) {
        at = update;
        break;
      }
    }
    if (at > 0) ++converged;
    out.details.push_back(at > 0 ? fmt("seed %llu: P(better arm) > 0.95 after %d updates", (unsigned long long)seed, at)
                                 : fmt("seed %llu: P(better arm) = %.3f after 200 updates", (unsigned long long)seed, p_best));
  }
  out.pass = converged == 3;
  return out;
}

Outcome oracle_proximity() {
  Outcome out;
  const auto cfg = tiny_oracle_config();
  const auto t0 = std::chrono::steady_clock::now();
  const auto best = solve_exact(OracleInstance(cfg), OracleTarget::obj2_max);
  audit.check(best.trajectory, cfg);
  audit.check(solve_exact(OracleInstance(cfg), OracleTarget::obj1_min).trajectory, cfg);
  out.details.push_back(fmt("objective2 optimum %.6f (%llu nodes)", best.objective2,
                            (unsigned long long)best.nodes_explored));
  int hits = 0;
  for (std::uint64_t seed : kSeeds) {
    marl::TrainConfig tc;
    tc.mode = marl::TrainMode::dec;
    tc.obs = kTinyObs;
    tc.episodes = kTinyEpisodes;
    tc.seed = seed;
    const auto res = marl::train(cfg, tc);
    const auto ev = marl::evaluate(res.agents, cfg, tc.obs, 1, seed);
    audit.check(ev.front().trajectory, cfg);
    const double got = ev.front().objectives.objective2;
    const double frac = got / best.objective2;
    if (frac >= 0.9) ++hits;
    out.details.push_back(fmt("seed %llu: greedy objective2 %.6f = %.1f%% of optimum", (unsigned long long)seed, got,
                              100.0 * frac));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.details.push_back(fmt("runtime %.1f s", secs));
  out.pass = hits >= 2 && secs < 300.0;
  return out;
}

struct DeskRun {
  experiments::ExperimentConfig cfg;
  experiments::ExperimentResult res;
  std::map<std::uint64_t, double> random_obj1;

  const experiments::CellResult& cell(marl::TrainMode m, std::uint64_t seed) const {
    for (const auto& c : res.cells)
      if (c.mode == m && c.seed == seed) return c;
    throw std::logic_error("missing cell");
  }
};

const std::vector<marl::TrainMode> kModes = {marl::TrainMode::dec, marl::TrainMode::centr_obj1,
                                             marl::TrainMode::centr_obj2};

DeskRun run_desk() {
  DeskRun d;
  d.cfg.desk_scale = true;
  d.cfg.modes = kModes;
  d.cfg.seeds = kSeeds;
  d.cfg.episodes = kDeskEpisodes;
  d.cfg.eval_episodes = kDeskEvalEpisodes;
  d.cfg.obs = kDeskObs;
  const auto t0 = std::chrono::steady_clock::now();
  d.res = experiments::run_experiment(d.cfg);
  std::printf("  desk-scale experiment: 3 modes x 3 seeds x %d episodes in %.0f s\n", kDeskEpisodes,
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  for (const auto& c : d.res.cells)
    for (const auto& e : c.evaluation) audit.check(e.trajectory, c.env);
  for (std::uint64_t seed : kSeeds) {
    const auto env = desk_scale_config(seed);
    double s = 0.0;
    for (const auto& e : marl::random_baseline(env, kBaselineEpisodes, seed)) {
      s += e.objectives.objective1;
      audit.check(e.trajectory, env);
    }
    d.random_obj1[seed] = s / kBaselineEpisodes;
    const auto greedy = greedy_baseline(env, seed);
    audit.check(greedy, env);
  }
  return d;
}

double final_window_obj1(const experiments::CellResult& c) {
  const int w = experiments::final_window(static_cast<int>(c.metrics.size()));
  double s = 0.0;
  for (std::size_t e = c.metrics.size() - w; e < c.metrics.size(); ++e) s += c.metrics[e].objective1;
  return s / w;
}

Outcome learning_effect(const DeskRun& d) {
  Outcome out;
  int seeds_ok = 0;
  for (std::uint64_t seed : kSeeds) {
    bool all = true;
    std::string line = fmt("seed %llu (random %.4f):", (unsigned long long)seed, d.random_obj1.at(seed));
    for (auto m : kModes) {
      const double r = final_window_obj1(d.cell(m, seed)) / d.random_obj1.at(seed);
      all = all && r <= 0.6;
      line += fmt(" %s %.2f", marl::to_string(m).c_str(), r);
    }
    if (all) ++seeds_ok;
    out.details.push_back(line + (all ? "" : "  <- above 0.60"));
  }
  out.pass = seeds_ok >= 2;
  return out;
}

Outcome scheme_parity(const DeskRun& d) {
  double dec = 0.0, c1 = 0.0;
  for (std::uint64_t seed : kSeeds) {
    dec += final_window_obj1(d.cell(marl::TrainMode::dec, seed)) / kSeeds.size();
    c1 += final_window_obj1(d.cell(marl::TrainMode::centr_obj1, seed)) / kSeeds.size();
  }
  const double gap = std::fabs(dec - c1) / c1;
  return {gap <= 0.25, {fmt("final-window objective1: dec %.4f, centr_obj1 %.4f, gap %.1f%%", dec, c1, 100 * gap)}};
}

Outcome coverage(const DeskRun& d) {
  Outcome out;
  bool all = true;
  for (auto m : kModes) {
    std::string line = marl::to_string(m) + ": min distinct over evaluation episodes per seed";
    for (std::uint64_t seed : kSeeds) {
      const auto& c = d.cell(m, seed);
      int lo = c.env.num_devices;
      for (const auto& e : c.evaluation) lo = std::min(lo, e.communications.distinct_devices);
      all = all && lo == c.env.num_devices;
      line += fmt(" %d/%d", lo, c.env.num_devices);
    }
    out.details.push_back(line);
  }
  out.pass = all;
  return out;
}

Outcome frequency_effect(const DeskRun& d) {
  Outcome out;
  bool all = true;
  for (auto m : kModes) {
    int negative = 0;
    std::string line = marl::to_string(m) + ": spearman(k, communications)";
    for (std::uint64_t seed : kSeeds) {
      const auto& c = d.cell(m, seed);
      std::vector<double> k, comms(c.env.num_devices, 0.0);
      for (const auto& dev : c.env.devices) k.push_back(dev.gen_period_k);
      for (const auto& e : c.evaluation)
        for (int i = 0; i < c.env.num_devices; ++i) comms[i] += e.communications.per_device[i];
      const double rho = experiments::spearman(k, comms);
      if (rho < 0.0) ++negative;
      line += fmt(" %.3f", rho);
    }
    all = all && negative >= 2;
    out.details.push_back(line);
  }
  out.pass = all;
  return out;
}

Outcome overhead(const DeskRun& d) {
  Outcome out;
  bool exact = true;
  for (const auto& c : d.res.cells) {
    const std::int64_t U = c.env.num_uavs, K = c.env.horizon;
    const std::int64_t state_dim = U * marl::observation_width(d.cfg.obs, c.env);
    const std::int64_t expected = c.mode == marl::TrainMode::dec ? 0 : U * K * state_dim * d.cfg.episodes;
    std::int64_t total = 0;
    for (const auto& m : c.metrics) total += m.scalars_exchanged;
    exact = exact && total == expected;
    if (c.seed == 0)
      out.details.push_back(fmt("%s: %lld scalars over %d episodes (closed form %lld)", marl::to_string(c.mode).c_str(),
                                (long long)total, d.cfg.episodes, (long long)expected));
  }
  out.pass = exact;
  return out;
}

Outcome constraint_audit() {
  // Fresh random rollouts on the desk scenario on top of everything above.
  Rng rng(303);
  for (std::uint64_t seed : kSeeds) {
    const auto cfg = desk_scale_config(seed);
    for (int e = 0; e < 50; ++e) audit.check(random_rollout(cfg, rng), cfg);
  }
  for (int trial = 0; trial < 200; ++trial) {
    const auto cfg = random_config(rng);
    audit.check(random_rollout(cfg, rng), cfg);
  }
  Outcome out{audit.violations == 0,
              {fmt("%ld trajectories audited, %ld violations", audit.trajectories, audit.violations)}};
  if (!audit.first.empty()) out.details.push_back("first: " + audit.first);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> want;
  for (int a = 1; a < argc; ++a) want.insert(std::atoi(argv[a]));
  auto on = [&](int c) { return want.empty() || want.count(c) > 0; };

  static const char* names[] = {"",
                                "AoI exactness",
                                "objective decomposition",
                                "constraint audit",
                                "channel statistics",
                                "gradient fidelity",
                                "PPO sanity",
                                "oracle proximity",
                                "learning effect",
                                "scheme parity",
                                "coverage",
                                "frequency effect",
                                "communication overhead"};
  std::map<int, Outcome> results;
  auto record = [&](int c, Outcome o) {
    std::printf("%s %d %s\n", o.pass ? "PASS" : "FAIL", c, names[c]);
    for (const auto& line : o.details) std::printf("  %s\n", line.c_str());
    std::fflush(stdout);
    results[c] = std::move(o);
  };

  try {
    if (on(1)) record(1, aoi_exactness());
    if (on(2)) record(2, decomposition());
    if (on(4)) record(4, channel_statistics());
    if (on(5)) record(5, gradient_fidelity());
    if (on(6)) record(6, ppo_bandit());
    if (on(7)) record(7, oracle_proximity());
    if (on(8) || on(9) || on(10) || on(11) || on(12) || on(3)) {
      const auto desk = run_desk();
      if (on(8)) record(8, learning_effect(desk));
      if (on(9)) record(9, scheme_parity(desk));
      if (on(10)) record(10, coverage(desk));
      if (on(11)) record(11, frequency_effect(desk));
      if (on(12)) record(12, overhead(desk));
    }
    if (on(3)) record(3, constraint_audit());
  } catch (const std::exception& e) {
    std::printf("FAIL aborted: %s\n", e.what());
    return 1;
  }

  int failed = 0;
  for (const auto& [c, o] : results) failed += o.pass ? 0 : 1;
  std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failed, results.size());
  return failed == 0 ? 0 : 1;
}
