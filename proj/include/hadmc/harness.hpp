#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hadmc/training.hpp"

namespace hadmc {

struct SweepConfig {
  std::vector<int> kappa1_values;  // product grid unless `points` is set
  std::vector<int> kappa2_values;
  std::vector<std::pair<int, int>> points;
  int samples = 10000;
  long n_pi = 20000;
  int b_pi = 1024;
  long buffer = 10000;
  int histogram_bins = 100;

  /// Grid points in row-major (kappa1, kappa2) order.
  std::vector<std::pair<int, int>> grid() const;
};

SweepConfig default_sweep_config();

struct ExperimentConfig {
  ScenarioConfig scenario;
  ModelConfig model;
  TrainConfig train;
  SweepConfig sweep;
  std::string output_dir;
};

/// Strict parse. `desk_scale` swaps the training defaults for the desk-scale
/// ones before the file's own keys apply.
ExperimentConfig experiment_config_from_json(const nlohmann::json& doc, bool desk_scale);
nlohmann::json experiment_config_to_json(const ExperimentConfig& c);

/// "SA1".."SR4" -> type and (n, m). Throws ParseError otherwise.
void apply_scenario_tag(ScenarioConfig& c, const std::string& tag);

struct ComparisonRow {
  std::string model;
  std::string scenario;
  int deployment_id = 0;
  double objective = 0.0;  // 0 for a failed episode
  double completion_time = 0.0;
  double completion_rate = 0.0;
  double t_obs = 0.0;
  double t_chg = 0.0;
  double t_wait = 0.0;
  double t_fly = 0.0;
};

struct NamedController {
  std::string name;
  std::shared_ptr<const Controller> controller;
};

/// One episode per (model, deployment).
std::vector<ComparisonRow> run_comparison(const std::vector<NamedController>& models,
                                          const std::vector<DeploymentSpec>& deployments, const std::string& scenario,
                                          const EpisodeOptions& options);

std::string comparison_to_csv(const std::vector<ComparisonRow>& rows);
std::vector<ComparisonRow> comparison_from_csv(const std::string& text);

struct ComparisonSummary {
  std::string model;
  std::string scenario;
  int deployments = 0;
  double mean_objective = 0.0;
  double std_objective = 0.0;
  double mean_completion_time = 0.0;  // completed episodes only
  double completion_rate = 0.0;
  double t_obs = 0.0;
  double t_chg = 0.0;
  double t_wait = 0.0;
  double t_fly = 0.0;
};

/// Groups by (model, scenario) in first-appearance order.
std::vector<ComparisonSummary> summarize(const std::vector<ComparisonRow>& rows);
std::string summary_to_csv(const std::vector<ComparisonSummary>& rows);

/// Population variance of the normalized frequencies of `counts`.
double frequency_variance(const std::vector<long>& counts);

/// Rounds to four decimal places.
double quantize4(double v);

struct SweepPoint {
  int kappa1 = 0;
  int kappa2 = 0;
  double discrete_variance = 0.0;
  double continuous_variance = 0.0;
};

/// Occupancy variances of one trained codec for `samples` uniform latents.
SweepPoint codec_output_variance(const ActionCodec<float>& codec, int samples, int bins, std::uint64_t seed);

/// Trains a fresh decoder per grid point on a shared random-policy buffer
/// and measures the output-occupancy variances.
std::vector<SweepPoint> latent_dim_sweep(const ScenarioConfig& scenario, const ModelConfig& model,
                                         const TrainConfig& train, const SweepConfig& sweep, std::uint64_t seed);

std::string sweep_to_csv(const std::vector<SweepPoint>& points);
std::vector<SweepPoint> sweep_from_csv(const std::string& text);

/// Writes plot-ready JSON bundles under `dir/bundles`. Throws ParseError
/// listing absent inputs.
std::vector<std::filesystem::path> make_report(const std::filesystem::path& dir);

}  // namespace hadmc
