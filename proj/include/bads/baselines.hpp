#pragma once

#include <functional>
#include <string>
#include <utility>

#include "bads/batching.hpp"
#include "bads/engine.hpp"
#include "bads/scenario.hpp"
#include "bads/train_log.hpp"

namespace bads {

enum class BaselineKind { Mixing, MetaOnly, RandomSelect, DuplicateMeta };

BaselineKind parse_baseline_kind(const std::string& name);
std::string to_string(BaselineKind kind);

/// The dataset a baseline trains on, and an epoch-shuffled stream over it.
///   Mixing         train + meta
///   MetaOnly       meta
///   RandomSelect   floor(N_t * beta) random train rows (fixed per seed) + meta
///   DuplicateMeta  meta repeated, last copy truncated, to exactly N_t rows
struct BaselineStream {
  Split data;
  BatchStream batches;

  Batch next() { return data.batch(batches.next()); }
};

BaselineStream build_baseline_stream(BaselineKind kind, const Scenario& scenario,
                                     const SgldConfig& cfg, const Rng& rng);

// theta <- theta - lr * (grad mean(loss) + weight_decay * theta)
ModelParams sgd_step(const ModelParams& params, const Batch& batch, double lr,
                     double weight_decay, double* mean_loss = nullptr);

struct BaselineOptions {
  double lr = 0.1;
  std::size_t eval_every = 100;
  std::size_t log_every = 1;
  // Called at every evaluation row, including the final one.
  std::function<void(const ModelParams&, const LogRow&)> on_eval;
};

/// Plain SGD over the baseline stream for cfg.steps steps; no noise, no weights.
/// The decay passed to sgd_step is cfg.weight_decay / (dataset size).
/// Rows are appended to `log` as they are produced, so a DivergenceError
/// leaves the partial log in place.
ModelParams train_baseline(BaselineKind kind, const Scenario& scenario, ModelParams init,
                           const SgldConfig& cfg, const BaselineOptions& options, const Rng& rng,
                           TrainLog& log);
std::pair<ModelParams, TrainLog> train_baseline(BaselineKind kind, const Scenario& scenario,
                                                ModelParams init, const SgldConfig& cfg,
                                                const BaselineOptions& options, const Rng& rng);

}  // namespace bads
