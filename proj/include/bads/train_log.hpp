#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bads/nn.hpp"
#include "bads/scenario.hpp"

namespace bads {

struct EvalResult {
  double accuracy = 0.0;
  double mean_loss = 0.0;
};

/// Argmax accuracy and mean loss of `params` on a labelled split.
EvalResult evaluate(const ModelParams& params, const Split& split);

/// One logged step. Quantities a method does not produce stay empty, so every
/// method writes the same columns.
struct LogRow {
  std::size_t step = 0;
  std::optional<double> train_loss_weighted;
  std::optional<double> train_loss;
  std::optional<double> meta_loss;
  std::optional<double> test_acc;
  std::optional<double> test_loss;
  std::optional<double> w_bar;
  std::optional<double> w_sum_est;
  std::map<int, std::optional<double>> batch_weight;  // per-tag mean over the minibatch
  std::map<int, std::optional<double>> all_weight;    // per-tag mean over the train split
  double wall_ms = 0.0;
};

struct TrainLog {
  std::map<int, std::string> tag_legend;
  std::vector<LogRow> rows;
};

// log.csv holds everything except wall-clock time, which goes to timing.csv,
// so repeated runs of one config produce identical log files.
void write_log_csv(const TrainLog& log, const std::filesystem::path& file);
void write_timing_csv(const TrainLog& log, const std::filesystem::path& file);
TrainLog read_log_csv(const std::filesystem::path& file);

// Per-tag means of `values` over the rows selected by ids (tags indexed by id).
std::map<int, std::optional<double>> tag_means(const std::map<int, std::string>& legend,
                                               std::span<const int> tags,
                                               std::span<const std::size_t> ids,
                                               std::span<const double> values);

}  // namespace bads

namespace bads {

// Fills test accuracy/loss and full meta-set loss.
void fill_eval(LogRow& row, const ModelParams& params, const Scenario& scenario);

}  // namespace bads
