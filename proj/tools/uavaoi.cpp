#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "uavaoi/experiments.hpp"
#include "uavaoi/oracle.hpp"

using namespace uavaoi;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string scenario;
  bool desk_scale = false;
  std::uint64_t seed = 0;
  std::string out = "out";
  std::string obs = "paper_literal";
  std::string encoding = "one_hot_cell";
};

void add_scenario(CLI::App* app, Common& c) {
  app->add_option("--scenario", c.scenario, "Scenario JSON file");
  app->add_flag("--desk-scale", c.desk_scale, "Use the built-in desk-scale scenario for the seed");
}

void add_obs(CLI::App* app, Common& c) {
  app->add_option("--obs", c.obs, "paper_literal | augmented | local_history");
  app->add_option("--encoding", c.encoding, "one_hot_cell | normalized_xy");
}

EnvConfig scenario(const Common& c) {
  if (c.desk_scale) return desk_scale_config(c.seed);
  if (c.scenario.empty()) throw ConfigError("either --scenario or --desk-scale is required");
  auto cfg = load_env_config(c.scenario);
  cfg.validate();
  return cfg;
}

marl::ObservationSpec obs_spec(const Common& c) {
  return {marl::observation_mode_from_string(c.obs), marl::cell_encoding_from_string(c.encoding)};
}

void print_eval(const std::vector<marl::EvaluationEpisode>& eps) {
  for (std::size_t e = 0; e < eps.size(); ++e) {
    const auto& ev = eps[e];
    std::cout << "episode " << e << " objective1=" << ev.objectives.objective1
              << " objective2=" << ev.objectives.objective2 << " communications=" << ev.communications.total
              << " distinct_devices=" << ev.communications.distinct_devices << " violations=" << ev.violations
              << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-UAV weighted age-of-information simulator and MAPPO trainer"};
  app.require_subcommand(1);

  Common c;
  std::string mode = "dec";
  int episodes = 100;
  int eval_episodes = 5;

  auto* train = app.add_subcommand("train", "Train one scheme and write metrics, checkpoints and an evaluation trajectory");
  add_scenario(train, c);
  add_obs(train, c);
  train->add_option("--mode", mode, "dec | centr-obj1 | centr-obj2");
  train->add_option("--episodes", episodes, "Training episodes");
  train->add_option("--seed", c.seed, "Seed");
  train->add_option("--out", c.out, "Output directory");

  std::string checkpoints;
  auto* eval = app.add_subcommand("eval", "Greedy evaluation of saved checkpoints");
  add_scenario(eval, c);
  add_obs(eval, c);
  eval->add_option("--checkpoints", checkpoints, "Directory with uav<u>.json checkpoints")->required();
  eval->add_option("--episodes", eval_episodes, "Evaluation episodes");
  eval->add_option("--seed", c.seed, "Seed for channel draws");
  eval->add_option("--out", c.out, "Output directory for trajectories");

  std::string target = "obj2";
  auto* oracle = app.add_subcommand("oracle", "Exact optimum of a tiny instance");
  add_scenario(oracle, c);
  oracle->add_option("--target", target, "obj1 | obj2");
  oracle->add_option("--out", c.out, "Output directory");

  std::vector<std::string> modes = {"dec", "centr-obj1", "centr-obj2"};
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  bool serial = false;
  auto* experiment = app.add_subcommand("experiment", "All (mode, seed) cells plus figure data");
  add_scenario(experiment, c);
  add_obs(experiment, c);
  experiment->add_option("--mode", modes, "Modes (repeatable)");
  experiment->add_option("--seed", seeds, "Seeds (repeatable)");
  experiment->add_option("--episodes", episodes, "Training episodes per cell");
  experiment->add_option("--eval-episodes", eval_episodes, "Greedy evaluation episodes per cell");
  experiment->add_option("--out", c.out, "Output directory");
  experiment->add_flag("--serial", serial, "Run cells one after another");

  std::string traj_path, svg_out = "trajectories.svg";
  auto* render = app.add_subcommand("render", "SVG overhead plot of a trajectory");
  add_scenario(render, c);
  render->add_option("--traj", traj_path, "Trajectory JSON")->required();
  render->add_option("--seed", c.seed, "Seed (with --desk-scale)");
  render->add_option("--out", svg_out, "SVG path");

  std::string preset = "desk";
  auto* scen = app.add_subcommand("scenario", "Write a built-in scenario as JSON");
  scen->add_option("--preset", preset, "desk | full_scale | tiny");
  scen->add_option("--seed", c.seed, "Seed");
  scen->add_option("--out", c.out, "JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*train) {
      const auto cfg = scenario(c);
      marl::TrainConfig tc;
      tc.mode = marl::train_mode_from_string(mode);
      tc.obs = obs_spec(c);
      tc.episodes = episodes;
      tc.seed = c.seed;
      auto res = marl::train(cfg, tc);
      const fs::path out(c.out);
      fs::create_directories(out / "metrics");
      fs::create_directories(out / "checkpoints");
      fs::create_directories(out / "traj");
      marl::write_metrics_csv(res.metrics, (out / "metrics" / "episodes.csv").string());
      for (const auto& a : res.agents) {
        const auto name = "uav" + std::to_string(a.id);
        marl::write_diagnostics_csv(a.diagnostics, (out / "metrics" / ("ppo_" + name + ".csv")).string());
        std::ofstream(out / "checkpoints" / (name + ".json")) << marl::agent_checkpoint(a).dump(1) << '\n';
      }
      save_env_config(cfg, (out / "scenario.json").string());
      const auto ev = marl::evaluate(res.agents, cfg, tc.obs, 1, c.seed);
      save_trajectory(ev.front().trajectory, (out / "traj" / "eval.json").string());
      print_eval(ev);
    } else if (*eval) {
      const auto cfg = scenario(c);
      marl::TrainConfig tc;
      tc.obs = obs_spec(c);
      auto agents = marl::make_agents(tc, cfg);
      for (auto& a : agents) {
        std::ifstream f(fs::path(checkpoints) / ("uav" + std::to_string(a.id) + ".json"));
        if (!f) throw std::runtime_error("missing checkpoint for uav" + std::to_string(a.id));
        marl::load_agent_checkpoint(nlohmann::json::parse(f), a);
      }
      const auto ev = marl::evaluate(agents, cfg, tc.obs, eval_episodes, c.seed);
      fs::create_directories(c.out);
      for (std::size_t e = 0; e < ev.size(); ++e)
        save_trajectory(ev[e].trajectory, (fs::path(c.out) / ("eval" + std::to_string(e) + ".json")).string());
      print_eval(ev);
    } else if (*oracle) {
      const auto cfg = c.scenario.empty() && !c.desk_scale ? tiny_oracle_config() : scenario(c);
      const auto t = target == "obj1" ? OracleTarget::obj1_min : OracleTarget::obj2_max;
      if (target != "obj1" && target != "obj2") throw ConfigError("--target must be obj1 or obj2");
      const auto sol = solve_exact(OracleInstance(cfg), t);
      fs::create_directories(c.out);
      nlohmann::json j = sol;
      std::ofstream(fs::path(c.out) / "oracle.json") << j.dump(1) << '\n';
      std::cout << "optimum " << to_string(t) << " = " << sol.optimum() << " (objective1=" << sol.objective1
                << ", objective2=" << sol.objective2 << ", nodes=" << sol.nodes_explored << ")\n";
    } else if (*experiment) {
      experiments::ExperimentConfig ec;
      ec.scenario_path = c.scenario;
      ec.desk_scale = c.desk_scale;
      ec.modes.clear();
      for (const auto& m : modes) ec.modes.push_back(marl::train_mode_from_string(m));
      ec.seeds = seeds;
      ec.episodes = episodes;
      ec.eval_episodes = eval_episodes;
      ec.out_dir = c.out;
      ec.obs = obs_spec(c);
      ec.parallel = !serial;
      const auto res = experiments::run_experiment(ec);
      for (const auto& r : res.comparison.rows)
        std::cout << marl::to_string(r.mode) << " objective1=" << r.objective1_mean << " +- " << r.objective1_std
                  << " communications=" << r.communications_mean << " distinct=" << r.distinct_mean
                  << " scalars_exchanged=" << r.scalars_exchanged_mean << '\n';
      if (res.comparison.ordering_available)
        std::cout << "ordering centr_obj1 <= centr_obj2 <= dec: " << (res.comparison.ordering_holds ? "true" : "false")
                  << '\n';
    } else if (*render) {
      const auto cfg = scenario(c);
      const auto traj = load_trajectory(traj_path);
      std::ofstream f(svg_out);
      if (!f) throw std::runtime_error("cannot write " + svg_out);
      f << experiments::render_trajectories(traj, cfg);
    } else if (*scen) {
      EnvConfig cfg;
      if (preset == "desk") cfg = desk_scale_config(c.seed);
      else if (preset == "full_scale") cfg = full_scale_config(c.seed);
      else if (preset == "tiny") cfg = tiny_oracle_config();
      else throw ConfigError("unknown preset '" + preset + "'");
      save_env_config(cfg, c.out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
