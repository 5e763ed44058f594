#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bads/run_config.hpp"
#include "bads/train_log.hpp"

namespace bads {

Scenario build_scenario(const RunConfig& cfg);

// Fills n_t / n_m from the scenario, resolves sigma_per_nt, caps meta batch size.
SgldConfig resolve_sgld(const RunConfig& cfg, const Scenario& scenario);

ModelParams initial_params(const RunConfig& cfg, const Scenario& scenario);

struct RunResult {
  Scenario scenario;
  ModelParams params;                // per checkpoint policy
  ModelParams initial;
  TrainLog log;
  std::optional<WeightState> weights;  // BADS methods only
  std::vector<double> final_weights;   // per train example; empty for baselines
};

/// Trains one configuration. BADS methods take a Langevin step on theta and on
/// the weights each iteration, both from the same (theta, w); baselines run
/// plain SGD. When cfg.out_dir is set, writes log.csv, timing.csv,
/// weights_final.csv, model_final.json, config_echo and the SVG plots.
/// A DivergenceError is rethrown after the partial log is written.
RunResult run_experiment(const RunConfig& cfg);

// Per-tag mean of the final weights over the train split.
std::map<int, double> final_tag_means(const RunResult& result);

struct SweepRow {
  std::string value;
  std::optional<double> test_acc;
  std::optional<double> test_loss;
  std::optional<double> meta_loss;
  std::map<int, std::optional<double>> tag_weight;
};

/// One run per value of `axis` (a config key). All runs share the template's
/// seeds, so differences come from the axis alone. Writes <out>/<value>/...
/// and <out>/summary.csv when out_dir is set.
std::vector<SweepRow> sweep(const RunConfig& base, const std::string& axis,
                            const std::vector<std::string>& values);

void write_model_json(const ModelParams& params, const std::filesystem::path& file);
ModelParams read_model_json(const std::filesystem::path& file);

/// accuracy.svg (test accuracy vs step) and weights.svg (per-tag minibatch
/// mean weight vs step). Returns the files written.
std::vector<std::filesystem::path> export_plots(const TrainLog& log,
                                                const std::filesystem::path& out_dir);

}  // namespace bads
