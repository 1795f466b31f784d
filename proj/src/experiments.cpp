#include "uavaoi/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace uavaoi::experiments {

namespace fs = std::filesystem;

namespace {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd r;
  if (v.empty()) return r;
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.std = std::sqrt(ss / static_cast<double>(v.size()));
  return r;
}

std::string cell_tag(marl::TrainMode mode, std::uint64_t seed) {
  return marl::to_string(mode) + "_seed" + std::to_string(seed);
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t s = 0; s < idx.size();) {
    std::size_t e = s;
    while (e + 1 < idx.size() && v[idx[e + 1]] == v[idx[s]]) ++e;
    const double avg = 0.5 * static_cast<double>(s + e) + 1.0;
    for (std::size_t k = s; k <= e; ++k) r[idx[k]] = avg;
    s = e + 1;
  }
  return r;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (modes.empty()) throw ConfigError("experiment: at least one mode is required");
  if (seeds.empty()) throw ConfigError("experiment: at least one seed is required");
  if (episodes < 0) throw ConfigError("experiment: episodes must be >= 0");
  if (eval_episodes < 1) throw ConfigError("experiment: eval_episodes must be >= 1");
  if (!desk_scale && scenario_path.empty()) throw ConfigError("experiment: scenario path or desk_scale required");
  ppo.validate();
}

EnvConfig scenario_for_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  EnvConfig env = cfg.desk_scale ? desk_scale_config(seed) : load_env_config(cfg.scenario_path);
  env.validate();
  return env;
}

CellResult run_cell(const ExperimentConfig& cfg, marl::TrainMode mode, std::uint64_t seed) {
  CellResult cell;
  cell.mode = mode;
  cell.seed = seed;
  cell.env = scenario_for_seed(cfg, seed);
  marl::TrainConfig tc;
  tc.mode = mode;
  tc.obs = cfg.obs;
  tc.ppo = cfg.ppo;
  tc.hidden = cfg.hidden;
  tc.episodes = cfg.episodes;
  tc.seed = seed;
  auto trained = marl::train(cell.env, tc);
  cell.metrics = std::move(trained.metrics);
  for (const auto& a : trained.agents) {
    cell.diagnostics.push_back(a.diagnostics);
    cell.checkpoints.push_back(marl::agent_checkpoint(a));
  }
  cell.evaluation = marl::evaluate(trained.agents, cell.env, cfg.obs, cfg.eval_episodes, seed);
  return cell;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult res;
  const std::size_t n = cfg.modes.size() * cfg.seeds.size();
  res.cells.resize(n);
  std::vector<std::exception_ptr> errors(n);

  const auto run = [&](std::size_t k) {
    try {
      res.cells[k] = run_cell(cfg, cfg.modes[k / cfg.seeds.size()], cfg.seeds[k % cfg.seeds.size()]);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };
  if (cfg.parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long k = 0; k < static_cast<long>(n); ++k) run(static_cast<std::size_t>(k));
  } else {
    for (std::size_t k = 0; k < n; ++k) run(k);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  res.figures = build_figures(res.cells);
  std::map<marl::TrainMode, std::vector<std::vector<marl::MetricsRecord>>> runs;
  for (const auto& c : res.cells) runs[c.mode].push_back(c.metrics);
  res.comparison = compare_schemes(runs);
  if (!cfg.out_dir.empty()) write_outputs(res, cfg);
  return res;
}

int final_window(int episodes) { return std::max(1, episodes / 10); }

std::vector<FigureData> build_figures(const std::vector<CellResult>& cells) {
  std::vector<marl::TrainMode> modes;
  for (const auto& c : cells)
    if (std::find(modes.begin(), modes.end(), c.mode) == modes.end()) modes.push_back(c.mode);

  const auto cells_of = [&](marl::TrainMode m) {
    std::vector<const CellResult*> out;
    for (const auto& c : cells)
      if (c.mode == m) out.push_back(&c);
    return out;
  };

  // Per-episode training series aggregated over seeds.
  const auto episode_series = [&](marl::TrainMode m, const std::string& name, auto value) {
    FigureSeries s;
    s.name = name;
    const auto cs = cells_of(m);
    const std::size_t episodes = cs.empty() ? 0 : cs.front()->metrics.size();
    for (std::size_t e = 0; e < episodes; ++e) {
      std::vector<double> v;
      for (const auto* c : cs) v.push_back(value(c->metrics[e]));
      const auto ms = mean_std(v);
      s.x.push_back(static_cast<double>(cs.front()->metrics[e].episode));
      s.mean.push_back(ms.mean);
      s.std.push_back(ms.std);
    }
    return s;
  };

  FigureData fig2{"fig2_aoi_over_episodes", "episode", "objective1", {}};
  FigureData fig3{"fig3_communications", "x", "communications", {}};
  FigureData fig4{"fig4_distinct_served", "episode", "distinct_devices", {}};
  FigureData fig5{"fig5_comms_vs_gen_period", "gen_period", "communications_per_device", {}};
  FigureData fig6{"fig6_trajectories", "x_m", "y_m", {}};

  for (const auto m : modes) {
    const auto name = marl::to_string(m);
    const auto cs = cells_of(m);
    fig2.series.push_back(episode_series(m, name, [](const marl::MetricsRecord& r) { return r.objective1; }));
    fig3.series.push_back(episode_series(m, name, [](const marl::MetricsRecord& r) { return r.communications; }));
    fig4.series.push_back(episode_series(m, name, [](const marl::MetricsRecord& r) { return r.distinct_devices; }));

    // Within-episode cumulative communications of the final policy.
    FigureSeries cum;
    cum.name = name + "/within_episode";
    std::vector<std::vector<double>> by_t;
    for (const auto* c : cs)
      for (const auto& ev : c->evaluation) {
        const auto& cc = ev.communications.cumulative;
        if (by_t.size() < cc.size()) by_t.resize(cc.size());
        for (std::size_t t = 0; t < cc.size(); ++t) by_t[t].push_back(cc[t]);
      }
    for (std::size_t t = 0; t < by_t.size(); ++t) {
      const auto ms = mean_std(by_t[t]);
      cum.x.push_back(static_cast<double>(t + 1));
      cum.mean.push_back(ms.mean);
      cum.std.push_back(ms.std);
    }
    fig3.series.push_back(cum);

    FigureSeries served;
    served.name = name + "/final_policy";
    std::vector<double> distinct;
    for (const auto* c : cs)
      for (const auto& ev : c->evaluation) distinct.push_back(ev.communications.distinct_devices);
    if (!distinct.empty()) {
      const auto ms = mean_std(distinct);
      served.x.push_back(cs.front()->metrics.empty() ? 0.0 : static_cast<double>(cs.front()->metrics.size()));
      served.mean.push_back(ms.mean);
      served.std.push_back(ms.std);
    }
    fig4.series.push_back(served);

    // Communications per device (mean over evaluation episodes), grouped by k_i.
    std::map<int, std::vector<double>> by_k;
    for (const auto* c : cs) {
      if (c->evaluation.empty()) continue;
      for (int i = 0; i < c->env.num_devices; ++i) {
        double sum = 0.0;
        for (const auto& ev : c->evaluation) sum += ev.communications.per_device[i];
        by_k[c->env.devices[i].gen_period_k].push_back(sum / static_cast<double>(c->evaluation.size()));
      }
    }
    FigureSeries f5;
    f5.name = name;
    for (const auto& [k, v] : by_k) {
      const auto ms = mean_std(v);
      f5.x.push_back(k);
      f5.mean.push_back(ms.mean);
      f5.std.push_back(ms.std);
    }
    fig5.series.push_back(f5);

    // First evaluation episode of the first seed.
    if (!cs.empty() && !cs.front()->evaluation.empty()) {
      const auto* c = cs.front();
      const auto& traj = c->evaluation.front().trajectory;
      for (int u = 0; u < c->env.num_uavs; ++u) {
        FigureSeries p;
        p.name = name + "/uav" + std::to_string(u);
        for (const auto& st : traj.states) {
          p.x.push_back(st.uav_cells[u].x * c->env.grid_step);
          p.mean.push_back(st.uav_cells[u].y * c->env.grid_step);
          p.std.push_back(0.0);
        }
        fig6.series.push_back(p);
      }
    }
  }
  return {fig2, fig3, fig4, fig5, fig6};
}

Comparison compare_schemes(const std::map<marl::TrainMode, std::vector<std::vector<marl::MetricsRecord>>>& runs) {
  Comparison cmp;
  std::size_t episodes = std::numeric_limits<std::size_t>::max();
  for (const auto& [mode, seeds] : runs)
    for (const auto& m : seeds) {
      if (episodes == std::numeric_limits<std::size_t>::max()) episodes = m.size();
      if (m.size() != episodes) throw std::invalid_argument("compare_schemes: episode counts differ");
    }
  for (const auto& [mode, seeds] : runs) {
    SummaryRow row;
    row.mode = mode;
    row.seeds = static_cast<int>(seeds.size());
    std::vector<double> o1, o2, comm, dist, scal;
    for (const auto& m : seeds) {
      const int w = m.empty() ? 0 : final_window(static_cast<int>(m.size()));
      double a = 0, b = 0, c = 0, d = 0, s = 0;
      for (std::size_t e = m.size() - w; e < m.size(); ++e) {
        a += m[e].objective1;
        b += m[e].objective2;
        c += m[e].communications;
        d += m[e].distinct_devices;
      }
      for (const auto& r : m) s += static_cast<double>(r.scalars_exchanged);
      const double inv = w > 0 ? 1.0 / w : 0.0;
      o1.push_back(a * inv);
      o2.push_back(b * inv);
      comm.push_back(c * inv);
      dist.push_back(d * inv);
      scal.push_back(s);
    }
    const auto set = [](const std::vector<double>& v, double& mean, double& sd) {
      const auto ms = mean_std(v);
      mean = ms.mean;
      sd = ms.std;
    };
    set(o1, row.objective1_mean, row.objective1_std);
    set(o2, row.objective2_mean, row.objective2_std);
    set(comm, row.communications_mean, row.communications_std);
    set(dist, row.distinct_mean, row.distinct_std);
    set(scal, row.scalars_exchanged_mean, row.scalars_exchanged_std);
    cmp.rows.push_back(row);
  }
  const auto find = [&](marl::TrainMode m) -> const SummaryRow* {
    for (const auto& r : cmp.rows)
      if (r.mode == m) return &r;
    return nullptr;
  };
  const auto* c1 = find(marl::TrainMode::centr_obj1);
  const auto* c2 = find(marl::TrainMode::centr_obj2);
  const auto* dc = find(marl::TrainMode::dec);
  if (c1 && c2 && dc) {
    cmp.ordering_available = true;
    cmp.ordering_holds = c1->objective1_mean <= c2->objective1_mean && c2->objective1_mean <= dc->objective1_mean;
  }
  return cmp;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("spearman: length mismatch");
  if (a.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto ra = ranks(a), rb = ranks(b);
  const auto ma = mean_std(ra), mb = mean_std(rb);
  if (ma.std == 0.0 || mb.std == 0.0) return std::numeric_limits<double>::quiet_NaN();
  double cov = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) cov += (ra[k] - ma.mean) * (rb[k] - mb.mean);
  cov /= static_cast<double>(a.size());
  return cov / (ma.std * mb.std);
}

std::string render_trajectories(const TrajectoryRecord& traj, const EnvConfig& cfg) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  static const char* dashes[] = {"none", "12,6", "4,4", "16,4,4,4", "2,6", "8,8"};
  const double w = cfg.area_x, h = cfg.area_y;
  const double pad = 0.05 * std::max(w, h);
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << fmt(-pad) << ' ' << fmt(-pad) << ' '
      << fmt(w + 2 * pad) << ' ' << fmt(h + 2 * pad) << "\" width=\"640\" height=\"640\">\n";
  // Flip y so that the scenario origin is at the bottom left.
  svg << "<g transform=\"matrix(1 0 0 -1 0 " << fmt(h) << ")\">\n";
  svg << "<rect x=\"0.00\" y=\"0.00\" width=\"" << fmt(w) << "\" height=\"" << fmt(h)
      << "\" fill=\"none\" stroke=\"#999\"/>\n";
  const double r = 0.012 * std::max(w, h);
  for (const auto& d : cfg.devices)
    svg << "<circle class=\"device\" cx=\"" << fmt(d.pos_x) << "\" cy=\"" << fmt(d.pos_y) << "\" r=\"" << fmt(r)
        << "\" fill=\"#555\"><title>device " << d.id << " k=" << d.gen_period_k << "</title></circle>\n";
  for (int u = 0; u < cfg.num_uavs; ++u) {
    const char* color = colors[u % 6];
    svg << "<polyline class=\"uav\" data-uav=\"" << u << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"" << fmt(0.6 * r) << "\" stroke-dasharray=\"" << dashes[u % 6] << "\" points=\"";
    for (std::size_t t = 0; t < traj.states.size(); ++t) {
      const auto c = traj.states[t].uav_cells[u];
      svg << (t ? " " : "") << fmt(c.x * cfg.grid_step) << ',' << fmt(c.y * cfg.grid_step);
    }
    svg << "\"/>\n";
    if (!traj.states.empty()) {
      const auto c = traj.states.front().uav_cells[u];
      svg << "<rect class=\"start\" x=\"" << fmt(c.x * cfg.grid_step - r) << "\" y=\"" << fmt(c.y * cfg.grid_step - r)
          << "\" width=\"" << fmt(2 * r) << "\" height=\"" << fmt(2 * r) << "\" fill=\"" << color << "\"/>\n";
    }
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

void write_figure_csv(const FigureData& fig, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "series," << fig.x_name << ',' << fig.y_name << "_mean," << fig.y_name << "_std\n";
  f.precision(17);
  for (const auto& s : fig.series)
    for (std::size_t k = 0; k < s.x.size(); ++k) f << s.name << ',' << s.x[k] << ',' << s.mean[k] << ',' << s.std[k] << '\n';
}

void write_comparison_csv(const Comparison& cmp, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "mode,seeds,objective1_mean,objective1_std,objective2_mean,objective2_std,communications_mean,"
       "communications_std,distinct_mean,distinct_std,scalars_exchanged_mean,scalars_exchanged_std\n";
  f.precision(17);
  for (const auto& r : cmp.rows)
    f << marl::to_string(r.mode) << ',' << r.seeds << ',' << r.objective1_mean << ',' << r.objective1_std << ','
      << r.objective2_mean << ',' << r.objective2_std << ',' << r.communications_mean << ',' << r.communications_std
      << ',' << r.distinct_mean << ',' << r.distinct_std << ',' << r.scalars_exchanged_mean << ','
      << r.scalars_exchanged_std << '\n';
  if (cmp.ordering_available)
    f << "# ordering centr_obj1 <= centr_obj2 <= dec: " << (cmp.ordering_holds ? "true" : "false") << '\n';
}

void write_outputs(const ExperimentResult& res, const ExperimentConfig& cfg) {
  const fs::path root(cfg.out_dir);
  std::error_code ec;
  for (const char* sub : {"metrics", "checkpoints", "traj", "figures"}) {
    fs::create_directories(root / sub, ec);
    if (ec) throw std::runtime_error("cannot create " + (root / sub).string() + ": " + ec.message());
  }
  for (const auto& c : res.cells) {
    const auto tag = cell_tag(c.mode, c.seed);
    marl::write_metrics_csv(c.metrics, (root / "metrics" / (tag + ".csv")).string());
    for (std::size_t u = 0; u < c.diagnostics.size(); ++u) {
      const auto agent = tag + "_uav" + std::to_string(u);
      marl::write_diagnostics_csv(c.diagnostics[u], (root / "metrics" / ("ppo_" + agent + ".csv")).string());
      std::ofstream ck(root / "checkpoints" / (agent + ".json"));
      if (!ck) throw std::runtime_error("cannot write checkpoint for " + agent);
      ck << c.checkpoints[u].dump(1) << '\n';
    }
    for (std::size_t e = 0; e < c.evaluation.size(); ++e)
      save_trajectory(c.evaluation[e].trajectory, (root / "traj" / (tag + "_eval" + std::to_string(e) + ".json")).string());
    save_env_config(c.env, (root / "traj" / (tag + "_scenario.json")).string());
  }
  for (const auto& fig : res.figures) write_figure_csv(fig, (root / "figures" / (fig.name + ".csv")).string());
  if (!res.cells.empty() && !res.cells.front().evaluation.empty()) {
    std::ofstream svg(root / "figures" / "fig6_trajectories.svg");
    svg << render_trajectories(res.cells.front().evaluation.front().trajectory, res.cells.front().env);
  }
  write_comparison_csv(res.comparison, (root / "summary.csv").string());
}

}  // namespace uavaoi::experiments
