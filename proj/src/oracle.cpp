#include "uavaoi/oracle.hpp"

#include <atomic>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <unordered_map>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace uavaoi {

OracleInstance::OracleInstance(EnvConfig c, std::uint64_t budget) : cfg(std::move(c)), node_budget(budget) {
  cfg.validate();
  if (cfg.num_uavs > 2) throw OracleInstanceError("oracle instance: at most 2 UAVs");
  if (cfg.num_cells() > 9) throw OracleInstanceError("oracle instance: at most 9 grid cells");
  if (cfg.horizon > 5) throw OracleInstanceError("oracle instance: horizon at most 5");
  if (cfg.num_devices > 3) throw OracleInstanceError("oracle instance: at most 3 devices");
  if (!cfg.pure_los) throw OracleInstanceError("oracle instance: channel must be pure line of sight");
}

const char* to_string(OracleTarget target) {
  return target == OracleTarget::obj1_min ? "obj1_min" : "obj2_max";
}

namespace {

struct JointChoice {
  std::vector<Move> moves;
  AssocMatrix granted;
};

class Search {
 public:
  Search(const EnvConfig& cfg, OracleTarget target, std::uint64_t budget, std::atomic<std::uint64_t>& nodes,
         bool memoize)
      : cfg_(cfg), target_(target), budget_(budget), nodes_(nodes), memoize_(memoize) {}

  std::vector<JointChoice> children(const EnvState& s) const {
    std::vector<std::vector<Move>> feasible(cfg_.num_uavs);
    for (int u = 0; u < cfg_.num_uavs; ++u)
      for (int m = 0; m < kNumMoves; ++m)
        if (move_feasible(s, u, move_from_index(m), cfg_)) feasible[u].push_back(move_from_index(m));

    std::vector<JointChoice> out;
    std::vector<std::size_t> mi(cfg_.num_uavs, 0);
    Rng unused(0);
    while (true) {
      std::vector<Move> moves(cfg_.num_uavs);
      std::vector<Cell> cells(cfg_.num_uavs);
      for (int u = 0; u < cfg_.num_uavs; ++u) {
        moves[u] = feasible[u][mi[u]];
        cells[u] = apply_move(s.uav_cells[u], moves[u]);
      }
      const auto channels = sample_channels(unused, cells, cfg_);
      // Option 0 = not collected, otherwise the index of a UAV in range.
      std::vector<std::vector<int>> options(cfg_.num_devices);
      for (int i = 0; i < cfg_.num_devices; ++i) {
        options[i].push_back(-1);
        for (int u = 0; u < cfg_.num_uavs; ++u)
          if (channels.rate(i, u) >= cfg_.min_rate) options[i].push_back(u);
      }
      std::vector<std::size_t> oi(cfg_.num_devices, 0);
      while (true) {
        JointChoice c{moves, AssocMatrix(cfg_.num_devices, cfg_.num_uavs)};
        for (int i = 0; i < cfg_.num_devices; ++i)
          if (options[i][oi[i]] >= 0) c.granted.at(i, options[i][oi[i]]) = 1;
        out.push_back(std::move(c));
        if (!advance(oi, options)) break;
      }
      if (!advance(mi, feasible)) break;
    }
    return out;
  }

  EnvState apply(const EnvState& s, const JointChoice& c) const {
    EnvState next = aoi_advance(s, c.granted, cfg_);
    for (int u = 0; u < cfg_.num_uavs; ++u) {
      next.uav_cells[u] = apply_move(s.uav_cells[u], c.moves[u]);
      next.spent_flight[u] += flight_cost(c.moves[u], cfg_.uavs[u], cfg_);
    }
    return next;
  }

  double step_score(const EnvState& prior, const JointChoice& c, const EnvState& next) const {
    if (target_ == OracleTarget::obj1_min) return -total_weighted_aoi(next, cfg_);
    double r = 0.0;
    for (int u = 0; u < cfg_.num_uavs; ++u) r += per_uav_reward(u, c.granted, prior, cfg_);
    return r;
  }

  // Best achievable score from s to the horizon.
  double value(const EnvState& s) {
    if (s.t >= cfg_.horizon) return 0.0;
    std::string key;
    if (memoize_) {
      key = encode(s);
      if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    }
    if (counting_ && nodes_.fetch_add(1, std::memory_order_relaxed) + 1 > budget_)
      throw OracleBudgetExceeded("oracle: instance too large for node budget " + std::to_string(budget_));
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& c : children(s)) {
      const EnvState next = apply(s, c);
      best = std::max(best, step_score(s, c, next) + value(next));
    }
    if (memoize_) memo_.emplace(std::move(key), best);
    return best;
  }

  // Walks down from s, picking the first child that attains value(s).
  std::vector<JointChoice> best_path(EnvState s) {
    counting_ = false;
    std::vector<JointChoice> path;
    while (s.t < cfg_.horizon) {
      const double target = value(s);
      bool found = false;
      for (auto& c : children(s)) {
        EnvState next = apply(s, c);
        if (step_score(s, c, next) + value(next) == target) {
          path.push_back(std::move(c));
          s = std::move(next);
          found = true;
          break;
        }
      }
      if (!found) throw std::logic_error("oracle: failed to reconstruct optimal path");
    }
    counting_ = true;
    return path;
  }

 private:
  template <class T>
  static bool advance(std::vector<std::size_t>& idx, const std::vector<std::vector<T>>& radix) {
    for (std::size_t d = 0; d < idx.size(); ++d) {
      if (++idx[d] < radix[d].size()) return true;
      idx[d] = 0;
    }
    return false;
  }

  static std::string encode(const EnvState& s) {
    std::string k;
    auto put = [&k](const auto& v) { k.append(reinterpret_cast<const char*>(&v), sizeof(v)); };
    put(s.t);
    for (const auto& c : s.uav_cells) {
      put(c.x);
      put(c.y);
    }
    for (double f : s.spent_flight) put(f);
    for (const auto& buf : s.device_buffers) {
      put(buf.size());
      for (const auto& p : buf) {
        put(p.age_steps);
        put(p.collected);
      }
    }
    return k;
  }

  const EnvConfig& cfg_;
  OracleTarget target_;
  std::uint64_t budget_;
  std::atomic<std::uint64_t>& nodes_;
  bool memoize_;
  bool counting_ = true;
  std::unordered_map<std::string, double> memo_;
};

OracleSolution finish(const OracleInstance& inst, OracleTarget target, const std::vector<JointChoice>& path,
                      std::uint64_t nodes) {
  const auto& cfg = inst.cfg;
  OracleSolution sol;
  sol.target = target;
  sol.nodes_explored = nodes;
  Rng rng(cfg.rng_seed);
  EnvState s = initial_state(cfg);
  sol.trajectory = TrajectoryRecord::start(s);
  for (const auto& c : path) {
    JointAction a;
    for (int u = 0; u < cfg.num_uavs; ++u) {
      UavAction ua{c.moves[u], std::vector<std::uint8_t>(cfg.num_devices, 0)};
      for (int i = 0; i < cfg.num_devices; ++i) ua.assoc[i] = c.granted.at(i, u);
      a.per_uav.push_back(std::move(ua));
    }
    auto r = step(s, a, rng, cfg);
    sol.trajectory.append(r);
    sol.moves.push_back(c.moves);
    s = std::move(r.state);
  }
  sol.objective1 = objective1(sol.trajectory, cfg);
  sol.objective2 = objective2(sol.trajectory, cfg);
  return sol;
}

}  // namespace

OracleSolution solve_exact(const OracleInstance& inst, OracleTarget target) {
  const auto& cfg = inst.cfg;
  std::atomic<std::uint64_t> nodes{1};
  const EnvState root = initial_state(cfg);
  Search root_search(cfg, target, inst.node_budget, nodes, true);
  const auto first = root_search.children(root);
  const auto n = static_cast<long>(first.size());
  std::vector<double> scores(first.size(), -std::numeric_limits<double>::infinity());
  std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic, 1)
  for (long b = 0; b < n; ++b) {
    try {
      Search local(cfg, target, inst.node_budget, nodes, true);
      const EnvState next = local.apply(root, first[b]);
      scores[b] = local.step_score(root, first[b], next) + local.value(next);
    } catch (...) {
#pragma omp critical(oracle_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  std::size_t best = 0;
  for (std::size_t b = 1; b < scores.size(); ++b)
    if (scores[b] > scores[best]) best = b;

  Search replay(cfg, target, inst.node_budget, nodes, true);
  std::vector<JointChoice> path{first[best]};
  const auto rest = replay.best_path(replay.apply(root, first[best]));
  path.insert(path.end(), rest.begin(), rest.end());
  return finish(inst, target, path, nodes.load());
}

OracleSolution solve_exact_reference(const OracleInstance& inst, OracleTarget target) {
  std::atomic<std::uint64_t> nodes{0};
  Search search(inst.cfg, target, inst.node_budget, nodes, false);
  const EnvState root = initial_state(inst.cfg);
  search.value(root);
  const auto explored = nodes.load();
  const auto path = search.best_path(root);
  return finish(inst, target, path, explored);
}

TrajectoryRecord greedy_baseline(const EnvConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  EnvState s = initial_state(cfg);
  auto traj = TrajectoryRecord::start(s);
  while (s.t < cfg.horizon) {
    JointAction a;
    std::vector<int> taken;
    for (int u = 0; u < cfg.num_uavs; ++u) {
      int target = -1;
      double best = 0.0;
      for (int i = 0; i < cfg.num_devices; ++i) {
        if (std::find(taken.begin(), taken.end(), i) != taken.end()) continue;
        const double w = weighted_buffer_aoi(s.device_buffers[i], s.t, cfg.devices[i].gen_period_k, cfg);
        if (w > best) {
          best = w;
          target = i;
        }
      }
      UavAction ua{Move::stay, std::vector<std::uint8_t>(cfg.num_devices, 0)};
      if (target >= 0) {
        taken.push_back(target);
        const auto& d = cfg.devices[target];
        const int tx = std::clamp(static_cast<int>(std::lround(d.pos_x / cfg.grid_step)), 0, cfg.cells_x() - 1);
        const int ty = std::clamp(static_cast<int>(std::lround(d.pos_y / cfg.grid_step)), 0, cfg.cells_y() - 1);
        const Cell c = s.uav_cells[u];
        const int dx = tx - c.x, dy = ty - c.y;
        Move m = Move::stay;
        if (dx != 0 && std::abs(dx) >= std::abs(dy)) m = dx > 0 ? Move::right : Move::left;
        else if (dy != 0) m = dy > 0 ? Move::up : Move::down;
        if (move_feasible(s, u, m, cfg)) ua.move = m;
      }
      for (int i = 0; i < cfg.num_devices; ++i) {
        bool pending = (s.t + 1) % cfg.devices[i].gen_period_k == 0;
        for (const auto& p : s.device_buffers[i]) pending = pending || !p.collected;
        ua.assoc[i] = pending ? 1 : 0;
      }
      a.per_uav.push_back(std::move(ua));
    }
    auto r = step(s, a, rng, cfg);
    traj.append(r);
    s = std::move(r.state);
  }
  return traj;
}

void to_json(nlohmann::json& j, const OracleSolution& s) {
  nlohmann::json moves = nlohmann::json::array();
  for (const auto& row : s.moves) {
    nlohmann::json r = nlohmann::json::array();
    for (Move m : row) r.push_back(move_index(m));
    moves.push_back(std::move(r));
  }
  j = {{"target", to_string(s.target)},
       {"objective1", s.objective1},
       {"objective2", s.objective2},
       {"nodes_explored", s.nodes_explored},
       {"moves", moves},
       {"trajectory", s.trajectory}};
}

}  // namespace uavaoi
