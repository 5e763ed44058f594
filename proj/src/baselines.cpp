#include "bads/baselines.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace bads {
namespace {

void append_rows(Split& dst, const Split& src, std::span<const std::size_t> ids) {
  std::vector<double> values(dst.features.values().begin(), dst.features.values().end());
  for (std::size_t i : ids) {
    auto row = src.features.row(i);
    values.insert(values.end(), row.begin(), row.end());
    dst.labels.push_back(src.labels[i]);
    dst.tags.push_back(src.tags[i]);
  }
  dst.features = Matrix(dst.labels.size(), src.features.cols(), std::move(values));
}

}  // namespace

BaselineKind parse_baseline_kind(const std::string& name) {
  if (name == "mixing") return BaselineKind::Mixing;
  if (name == "meta_only") return BaselineKind::MetaOnly;
  if (name == "random_select") return BaselineKind::RandomSelect;
  if (name == "duplicate_meta") return BaselineKind::DuplicateMeta;
  throw ValidationError(fmt::format(
      "unknown baseline '{}' (mixing, meta_only, random_select, duplicate_meta)", name));
}

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::Mixing: return "mixing";
    case BaselineKind::MetaOnly: return "meta_only";
    case BaselineKind::RandomSelect: return "random_select";
    case BaselineKind::DuplicateMeta: return "duplicate_meta";
  }
  return "?";
}

BaselineStream build_baseline_stream(BaselineKind kind, const Scenario& scenario,
                                     const SgldConfig& cfg, const Rng& rng) {
  const std::size_t n_t = scenario.train.size();
  const std::size_t n_m = scenario.meta.size();
  Split data{Matrix(0, scenario.train.features.cols()), {}, {}};
  switch (kind) {
    case BaselineKind::Mixing:
      append_rows(data, scenario.train, iota_ids(n_t));
      append_rows(data, scenario.meta, iota_ids(n_m));
      break;
    case BaselineKind::MetaOnly:
      append_rows(data, scenario.meta, iota_ids(n_m));
      break;
    case BaselineKind::RandomSelect: {
      SgldConfig sized = cfg;
      sized.n_t = n_t;
      const auto k = static_cast<std::size_t>(sized.target_count());
      std::vector<std::size_t> pool = iota_ids(n_t);
      Rng subset = rng.substream(streams::kSubset);
      for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + subset.below(n_t - i)]);
      pool.resize(k);
      append_rows(data, scenario.train, pool);
      append_rows(data, scenario.meta, iota_ids(n_m));
      break;
    }
    case BaselineKind::DuplicateMeta: {
      std::vector<std::size_t> ids;
      ids.reserve(n_t);
      while (ids.size() < n_t) ids.push_back(ids.size() % n_m);
      append_rows(data, scenario.meta, ids);
      break;
    }
  }
  const std::size_t batch = std::min(cfg.batch_t, data.size());
  BatchStream stream(iota_ids(data.size()), batch, rng.substream(streams::kTrainShuffle));
  return BaselineStream{std::move(data), std::move(stream)};
}

ModelParams sgd_step(const ModelParams& params, const Batch& batch, double lr,
                     double weight_decay, double* mean_loss) {
  const ForwardTrace trace = forward(params, batch.features);
  const std::vector<double> ones(batch.size(), 1.0);
  const Gradients g = batch_backward(params, trace, ones, batch);
  if (!all_finite(g.params)) throw DivergenceError("non-finite SGD gradient");
  ModelParams next = params;
  if (weight_decay > 0.0) axpy(-lr * weight_decay, params, next);
  axpy(-lr, g.params, next);
  if (mean_loss != nullptr) {
    const std::vector<double> losses = batch_losses(trace, batch);
    *mean_loss = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
    if (!std::isfinite(*mean_loss)) throw DivergenceError("non-finite training loss");
  }
  return next;
}

ModelParams train_baseline(BaselineKind kind, const Scenario& scenario, ModelParams init,
                           const SgldConfig& cfg, const BaselineOptions& options, const Rng& rng,
                           TrainLog& log) {
  if (!(options.lr > 0.0)) throw ValidationError("baseline learning rate must be > 0");
  BaselineStream stream = build_baseline_stream(kind, scenario, cfg, rng);
  // The theta prior is over the whole dataset; per-example SGD sees it divided by N.
  const double decay = cfg.weight_decay / static_cast<double>(stream.data.size());
  log = TrainLog{scenario.tag_legend, {}};
  ModelParams params = std::move(init);
  const auto start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };
  auto blank_row = [&](std::size_t step) {
    LogRow row;
    row.step = step;
    for (const auto& [tag, name] : scenario.tag_legend) {
      row.batch_weight[tag] = std::nullopt;
      row.all_weight[tag] = std::nullopt;
    }
    return row;
  };

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const bool eval = options.eval_every > 0 && step % options.eval_every == 0;
    const bool logged = eval || (options.log_every > 0 && step % options.log_every == 0);
    LogRow row = blank_row(step);
    if (eval) {
      fill_eval(row, params, scenario);
      if (options.on_eval) options.on_eval(params, row);
    }
    double loss = 0.0;
    try {
      params = sgd_step(params, stream.next(), options.lr, decay, &loss);
    } catch (const DivergenceError& e) {
      throw DivergenceError(fmt::format("{} at step {}", e.what(), step));
    }
    if (logged) {
      row.train_loss = loss;
      row.wall_ms = elapsed_ms();
      log.rows.push_back(std::move(row));
    }
  }
  LogRow last = blank_row(cfg.steps);
  fill_eval(last, params, scenario);
  if (options.on_eval) options.on_eval(params, last);
  last.wall_ms = elapsed_ms();
  log.rows.push_back(std::move(last));
  return params;
}

std::pair<ModelParams, TrainLog> train_baseline(BaselineKind kind, const Scenario& scenario,
                                                ModelParams init, const SgldConfig& cfg,
                                                const BaselineOptions& options, const Rng& rng) {
  TrainLog log;
  ModelParams params = train_baseline(kind, scenario, std::move(init), cfg, options, rng, log);
  return {std::move(params), std::move(log)};
}

}  // namespace bads
