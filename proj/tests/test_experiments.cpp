#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "uavaoi/experiments.hpp"

using namespace uavaoi;
using namespace uavaoi::experiments;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

ExperimentConfig small(const std::string& out) {
  ExperimentConfig c;
  c.desk_scale = true;
  c.modes = {marl::TrainMode::dec, marl::TrainMode::centr_obj1, marl::TrainMode::centr_obj2};
  c.seeds = {0, 1};
  c.episodes = 10;
  c.eval_episodes = 2;
  c.hidden = {16, 16};
  c.out_dir = out;
  return c;
}

marl::MetricsRecord rec(int e, double o1) {
  marl::MetricsRecord r;
  r.episode = e;
  r.objective1 = o1;
  return r;
}

}  // namespace

TEST(Experiment, WritesFiguresAndIsReproducible) {
  const auto root = fs::temp_directory_path() / "uavaoi_exp_test";
  fs::remove_all(root);
  const auto res = run_experiment(small((root / "a").string()));
  run_experiment(small((root / "b").string()));

  ASSERT_EQ(res.cells.size(), 6u);
  for (const char* name : {"fig2_aoi_over_episodes", "fig3_communications", "fig4_distinct_served",
                           "fig5_comms_vs_gen_period", "fig6_trajectories"}) {
    const auto p = root / "a" / "figures" / (std::string(name) + ".csv");
    ASSERT_TRUE(fs::exists(p)) << p;
    EXPECT_EQ(slurp(p), slurp(root / "b" / "figures" / (std::string(name) + ".csv"))) << name;
  }
  EXPECT_EQ(slurp(root / "a" / "summary.csv"), slurp(root / "b" / "summary.csv"));
  EXPECT_TRUE(fs::exists(root / "a" / "figures" / "fig6_trajectories.svg"));
  EXPECT_TRUE(fs::exists(root / "a" / "metrics" / "centr_obj2_seed1.csv"));

  const auto& fig2 = res.figures.front();
  EXPECT_EQ(fig2.name, "fig2_aoi_over_episodes");
  ASSERT_EQ(fig2.series.size(), 3u);
  for (const auto& s : fig2.series) {
    EXPECT_EQ(s.x.size(), 10u);
    EXPECT_EQ(s.mean.size(), 10u);
    for (double v : s.std) EXPECT_GE(v, 0.0);
  }
  EXPECT_TRUE(res.comparison.ordering_available);
  EXPECT_EQ(res.comparison.rows.size(), 3u);
  fs::remove_all(root);
}

TEST(Experiment, SerialAndParallelCellsAgree) {
  auto c = small("");
  c.modes = {marl::TrainMode::dec, marl::TrainMode::centr_obj1};
  c.episodes = 4;
  const auto par = run_experiment(c);
  c.parallel = false;
  const auto ser = run_experiment(c);
  ASSERT_EQ(par.cells.size(), ser.cells.size());
  for (std::size_t i = 0; i < par.cells.size(); ++i) {
    EXPECT_EQ(par.cells[i].mode, ser.cells[i].mode);
    EXPECT_EQ(par.cells[i].seed, ser.cells[i].seed);
    for (std::size_t e = 0; e < par.cells[i].metrics.size(); ++e)
      EXPECT_EQ(par.cells[i].metrics[e].objective1, ser.cells[i].metrics[e].objective1);
    EXPECT_EQ(par.cells[i].checkpoints, ser.cells[i].checkpoints);
  }
}

TEST(Experiment, ConfigValidation) {
  ExperimentConfig c;
  EXPECT_THROW(c.validate(), ConfigError);  // no scenario
  c.desk_scale = true;
  EXPECT_NO_THROW(c.validate());
  c.seeds.clear();
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.desk_scale = true;
  c.eval_episodes = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Experiment, FinalWindow) {
  EXPECT_EQ(final_window(1), 1);
  EXPECT_EQ(final_window(9), 1);
  EXPECT_EQ(final_window(2000), 200);
}

TEST(Comparison, SingleModeHasNoOrdering) {
  std::map<marl::TrainMode, std::vector<std::vector<marl::MetricsRecord>>> runs;
  runs[marl::TrainMode::dec] = {{rec(0, 3.0), rec(1, 1.0)}, {rec(0, 5.0), rec(1, 3.0)}};
  const auto c = compare_schemes(runs);
  ASSERT_EQ(c.rows.size(), 1u);
  EXPECT_FALSE(c.ordering_available);
  EXPECT_EQ(c.rows[0].seeds, 2);
  EXPECT_DOUBLE_EQ(c.rows[0].objective1_mean, 2.0);  // final window is the last episode
  EXPECT_DOUBLE_EQ(c.rows[0].objective1_std, 1.0);
}

TEST(Comparison, OrderingCheck) {
  std::map<marl::TrainMode, std::vector<std::vector<marl::MetricsRecord>>> runs;
  runs[marl::TrainMode::centr_obj1] = {{rec(0, 1.0)}};
  runs[marl::TrainMode::centr_obj2] = {{rec(0, 2.0)}};
  runs[marl::TrainMode::dec] = {{rec(0, 3.0)}};
  EXPECT_TRUE(compare_schemes(runs).ordering_holds);
  runs[marl::TrainMode::dec] = {{rec(0, 1.5)}};
  const auto c = compare_schemes(runs);
  EXPECT_TRUE(c.ordering_available);
  EXPECT_FALSE(c.ordering_holds);
}

TEST(Comparison, MismatchedEpisodeCountsRejected) {
  std::map<marl::TrainMode, std::vector<std::vector<marl::MetricsRecord>>> runs;
  runs[marl::TrainMode::dec] = {{rec(0, 1.0), rec(1, 1.0)}, {rec(0, 1.0)}};
  EXPECT_THROW(compare_schemes(runs), std::invalid_argument);
}

TEST(Spearman, Examples) {
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0);
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3}, {1, 9, 4}), 0.5);
  // Ties take the average rank: ranks (1.5, 1.5, 3) vs (1, 2, 3).
  EXPECT_NEAR(spearman({5, 5, 7}, {1, 2, 3}), 0.8660254037844386, 1e-12);
  EXPECT_TRUE(std::isnan(spearman({1, 1, 1}, {1, 2, 3})));
  EXPECT_TRUE(std::isnan(spearman({1}, {2})));
}

TEST(Render, PolylinesStayInsideTheArea) {
  const auto cfg = desk_scale_config(0);
  const auto base = marl::random_baseline(cfg, 1, 3).front().trajectory;
  const auto svg = render_trajectories(base, cfg);
  const std::regex poly("points=\"([^\"]*)\"");
  int lines = 0;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), poly); it != std::sregex_iterator(); ++it) {
    ++lines;
    std::istringstream pts((*it)[1].str());
    std::string pair;
    int n = 0;
    while (pts >> pair) {
      ++n;
      const auto comma = pair.find(',');
      const double x = std::stod(pair.substr(0, comma)), y = std::stod(pair.substr(comma + 1));
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, cfg.area_x);
      EXPECT_GE(y, 0.0);
      EXPECT_LE(y, cfg.area_y);
    }
    EXPECT_EQ(n, cfg.horizon + 1);
  }
  EXPECT_EQ(lines, cfg.num_uavs);
  std::size_t circles = 0;
  for (std::size_t p = svg.find("class=\"device\""); p != std::string::npos; p = svg.find("class=\"device\"", p + 1))
    ++circles;
  EXPECT_EQ(circles, static_cast<std::size_t>(cfg.num_devices));
}
