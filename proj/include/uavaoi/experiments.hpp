#pragma once

#include <map>
#include <string>
#include <vector>

#include "uavaoi/marl.hpp"

namespace uavaoi::experiments {

struct ExperimentConfig {
  std::string scenario_path;  // ignored when desk_scale is set
  bool desk_scale = false;    // scenario regenerated per seed with desk_scale_config(seed)
  std::vector<marl::TrainMode> modes = {marl::TrainMode::dec};
  int episodes = 0;
  std::vector<std::uint64_t> seeds = {0};
  std::string out_dir;
  marl::ObservationSpec obs;
  ppo::PpoConfig ppo;
  std::vector<int> hidden = {64, 64};
  int eval_episodes = 5;
  bool parallel = true;  // run (mode, seed) cells concurrently

  void validate() const;
};

/// Everything produced by one (mode, seed) cell.
struct CellResult {
  marl::TrainMode mode = marl::TrainMode::dec;
  std::uint64_t seed = 0;
  EnvConfig env;
  std::vector<marl::MetricsRecord> metrics;
  std::vector<std::vector<ppo::UpdateDiagnostics>> diagnostics;  // per agent
  std::vector<nlohmann::json> checkpoints;                       // per agent
  std::vector<marl::EvaluationEpisode> evaluation;
};

struct FigureSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> std;
};

struct FigureData {
  std::string name;
  std::string x_name = "x";
  std::string y_name = "y";
  std::vector<FigureSeries> series;
};

struct SummaryRow {
  marl::TrainMode mode = marl::TrainMode::dec;
  int seeds = 0;
  double objective1_mean = 0.0, objective1_std = 0.0;
  double objective2_mean = 0.0, objective2_std = 0.0;
  double communications_mean = 0.0, communications_std = 0.0;
  double distinct_mean = 0.0, distinct_std = 0.0;
  double scalars_exchanged_mean = 0.0, scalars_exchanged_std = 0.0;  // summed over all episodes
};

struct Comparison {
  std::vector<SummaryRow> rows;
  bool ordering_available = false;  // all three modes present
  bool ordering_holds = false;      // centr_obj1 <= centr_obj2 <= dec on final objective1
};

struct ExperimentResult {
  std::vector<CellResult> cells;  // mode-major, then seed
  std::vector<FigureData> figures;
  Comparison comparison;
};

EnvConfig scenario_for_seed(const ExperimentConfig& cfg, std::uint64_t seed);

CellResult run_cell(const ExperimentConfig& cfg, marl::TrainMode mode, std::uint64_t seed);

/// Trains and evaluates every (mode, seed) cell, then aggregates. Writes files
/// only when cfg.out_dir is non-empty.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Number of episodes in the final averaging window (last 10%, at least one).
int final_window(int episodes);

std::vector<FigureData> build_figures(const std::vector<CellResult>& cells);

/// `runs[mode]` holds one metrics series per seed. Throws std::invalid_argument
/// if the episode counts differ.
Comparison compare_schemes(const std::map<marl::TrainMode, std::vector<std::vector<marl::MetricsRecord>>>& runs);

/// Spearman rank correlation with average ranks for ties. NaN if either side is constant.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

/// Overhead plot in scenario meters: device markers, one polyline per UAV, start markers.
std::string render_trajectories(const TrajectoryRecord& traj, const EnvConfig& cfg);

void write_figure_csv(const FigureData& fig, const std::string& path);
void write_comparison_csv(const Comparison& cmp, const std::string& path);
void write_outputs(const ExperimentResult& res, const ExperimentConfig& cfg);

}  // namespace uavaoi::experiments
