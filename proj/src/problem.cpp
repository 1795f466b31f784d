#include "uavaoi/problem.hpp"

#include <cmath>
#include <fstream>

namespace uavaoi {

TrajectoryRecord TrajectoryRecord::start(const EnvState& initial) {
  TrajectoryRecord r;
  r.states.push_back(initial);
  return r;
}

void TrajectoryRecord::append(const StepResult& step) {
  states.push_back(step.state);
  granted.push_back(step.outcome.granted);
  rewards.push_back(step.outcome.per_uav_reward);
  rates.push_back(step.outcome.rates);
}

bool TrajectoryRecord::complete(const EnvConfig& cfg) const {
  const auto k = static_cast<std::size_t>(cfg.horizon);
  return states.size() == k + 1 && granted.size() == k && rewards.size() == k;
}

namespace {

void require_complete(const TrajectoryRecord& traj, const EnvConfig& cfg, const char* who) {
  if (!traj.complete(cfg))
    throw IncompleteTrajectory(std::string(who) + ": trajectory does not cover all " +
                               std::to_string(cfg.horizon) + " intervals");
}

// Whether device i still holds data to send at interval t (prior = state t-1).
bool has_pending_data(const EnvState& prior, int i, const EnvConfig& cfg) {
  for (const auto& p : prior.device_buffers[i])
    if (!p.collected) return true;
  return (prior.t + 1) % cfg.devices[i].gen_period_k == 0;
}

}  // namespace

double per_uav_reward(int u, const AssocMatrix& granted, const EnvState& prior, const EnvConfig& cfg) {
  const int t = prior.t + 1;
  double r = 0.0;
  for (int i = 0; i < cfg.num_devices; ++i) {
    if (!granted.at(i, u)) continue;
    r += weighted_buffer_aoi(prior.device_buffers[i], t, cfg.devices[i].gen_period_k, cfg);
  }
  return r;
}

double objective1(const TrajectoryRecord& traj, const EnvConfig& cfg) {
  require_complete(traj, cfg, "objective1");
  double sum = 0.0;
  for (int t = 1; t <= cfg.horizon; ++t) sum += total_weighted_aoi(traj.states[t], cfg);
  return sum;
}

double objective2(const TrajectoryRecord& traj, const EnvConfig& cfg) {
  require_complete(traj, cfg, "objective2");
  double sum = 0.0;
  for (int t = 1; t <= cfg.horizon; ++t)
    for (int u = 0; u < cfg.num_uavs; ++u) sum += per_uav_reward(u, traj.granted[t - 1], traj.states[t - 1], cfg);
  return sum;
}

ObjectiveReport evaluate_objectives(const TrajectoryRecord& traj, const EnvConfig& cfg) {
  require_complete(traj, cfg, "evaluate_objectives");
  ObjectiveReport rep;
  rep.per_device_f.assign(cfg.num_devices, 0.0);
  for (int i = 0; i < cfg.num_devices; ++i) {
    std::vector<std::vector<PacketAge>> history;
    history.reserve(traj.states.size());
    for (const auto& s : traj.states) history.push_back(s.device_buffers[i]);
    rep.per_device_f[i] = weighted_aoi_device(history, cfg.devices[i].gen_period_k, cfg);
  }
  rep.per_uav_return.assign(cfg.num_uavs, 0.0);
  for (int t = 1; t <= cfg.horizon; ++t)
    for (int u = 0; u < cfg.num_uavs; ++u)
      rep.per_uav_return[u] += per_uav_reward(u, traj.granted[t - 1], traj.states[t - 1], cfg);
  rep.objective1 = objective1(traj, cfg);
  rep.objective2 = 0.0;
  for (double r : rep.per_uav_return) rep.objective2 += r;
  return rep;
}

CommunicationStats communication_stats(const TrajectoryRecord& traj, const EnvConfig& cfg) {
  CommunicationStats st;
  st.per_device.assign(cfg.num_devices, 0);
  for (std::size_t t = 0; t < traj.granted.size(); ++t) {
    const auto& prior = traj.states[t];
    for (int i = 0; i < cfg.num_devices; ++i) {
      if (traj.granted[t].device_total(i) > 0 && has_pending_data(prior, i, cfg)) {
        ++st.per_device[i];
        ++st.total;
      }
    }
    st.cumulative.push_back(st.total);
  }
  for (int c : st.per_device) st.distinct_devices += c > 0 ? 1 : 0;
  return st;
}

std::vector<Violation> check_feasibility(const TrajectoryRecord& traj, const EnvConfig& cfg) {
  std::vector<Violation> out;
  for (std::size_t s = 0; s < traj.granted.size(); ++s) {
    const int t = static_cast<int>(s) + 1;
    const auto& g = traj.granted[s];
    const bool have_rates = s < traj.rates.size() && !traj.rates[s].empty();
    for (int i = 0; i < cfg.num_devices; ++i) {
      int total = 0;
      for (int u = 0; u < cfg.num_uavs; ++u) {
        const auto bit = g.at(i, u);
        if (bit > 1) out.push_back({"2g", t, i});
        total += bit != 0 ? 1 : 0;
        if (bit && have_rates && traj.rates[s][static_cast<std::size_t>(i) * cfg.num_uavs + u] < cfg.min_rate)
          out.push_back({"2b", t, i});
      }
      if (total > 1) out.push_back({"2c", t, i});
    }
  }
  for (int u = 0; u < cfg.num_uavs; ++u) {
    double flight = 0.0;
    bool out_x = false, out_y = false;
    for (std::size_t s = 0; s < traj.states.size(); ++s) {
      const Cell c = traj.states[s].uav_cells[u];
      const double x = c.x * cfg.grid_step, y = c.y * cfg.grid_step;
      if (!out_x && (x < 0.0 || x > cfg.area_x + 1e-9)) {
        out.push_back({"2e", static_cast<int>(s), u});
        out_x = true;
      }
      if (!out_y && (y < 0.0 || y > cfg.area_y + 1e-9)) {
        out.push_back({"2f", static_cast<int>(s), u});
        out_y = true;
      }
      if (s > 0) {
        const Cell p = traj.states[s - 1].uav_cells[u];
        flight += std::hypot((c.x - p.x) * cfg.grid_step, (c.y - p.y) * cfg.grid_step) / cfg.uavs[u].speed;
      }
    }
    if (!within_flight_budget(flight, cfg.uavs[u].max_flight_time))
      out.push_back({"2d", static_cast<int>(traj.states.size()) - 1, u});
  }
  return out;
}

void to_json(nlohmann::json& j, const PacketAge& p) {
  j = nlohmann::json::array({p.gen_index, p.age_steps, p.collected});
}

void from_json(const nlohmann::json& j, PacketAge& p) {
  p.gen_index = j.at(0).get<int>();
  p.age_steps = j.at(1).get<std::int64_t>();
  p.collected = j.at(2).get<bool>();
}

void to_json(nlohmann::json& j, const EnvState& s) {
  j = {{"t", s.t},
       {"device_buffers", s.device_buffers},
       {"uav_cells", s.uav_cells},
       {"spent_flight", s.spent_flight}};
}

void from_json(const nlohmann::json& j, EnvState& s) {
  j.at("t").get_to(s.t);
  j.at("device_buffers").get_to(s.device_buffers);
  j.at("uav_cells").get_to(s.uav_cells);
  j.at("spent_flight").get_to(s.spent_flight);
}

void to_json(nlohmann::json& j, const AssocMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.num_devices(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int u = 0; u < m.num_uavs(); ++u) row.push_back(m.at(i, u));
    rows.push_back(std::move(row));
  }
  j = {{"num_devices", m.num_devices()}, {"num_uavs", m.num_uavs()}, {"alpha", rows}};
}

void from_json(const nlohmann::json& j, AssocMatrix& m) {
  m = AssocMatrix(j.at("num_devices").get<int>(), j.at("num_uavs").get<int>());
  const auto& rows = j.at("alpha");
  for (int i = 0; i < m.num_devices(); ++i)
    for (int u = 0; u < m.num_uavs(); ++u) m.at(i, u) = rows.at(i).at(u).get<std::uint8_t>();
}

void to_json(nlohmann::json& j, const TrajectoryRecord& t) {
  j = {{"states", t.states}, {"granted", t.granted}, {"rewards", t.rewards}, {"rates", t.rates}};
}

void from_json(const nlohmann::json& j, TrajectoryRecord& t) {
  j.at("states").get_to(t.states);
  j.at("granted").get_to(t.granted);
  j.at("rewards").get_to(t.rewards);
  t.rates = j.value("rates", std::vector<std::vector<double>>{});
}

void to_json(nlohmann::json& j, const Violation& v) {
  j = {{"constraint", v.constraint}, {"t", v.t}, {"entity", v.entity}};
}

TrajectoryRecord load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory '" + path + "'");
  nlohmann::json j;
  in >> j;
  return j.get<TrajectoryRecord>();
}

void save_trajectory(const TrajectoryRecord& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << nlohmann::json(traj).dump() << '\n';
}

}  // namespace uavaoi
