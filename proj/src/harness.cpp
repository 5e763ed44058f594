#include "bads/harness.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>

#include <fmt/format.h>
#include <json.hpp>

#include "bads/baselines.hpp"
#include "bads/batching.hpp"

namespace bads {
namespace {

using Clock = std::chrono::steady_clock;

BaselineKind baseline_of(Method m) {
  switch (m) {
    case Method::Mixing: return BaselineKind::Mixing;
    case Method::MetaOnly: return BaselineKind::MetaOnly;
    case Method::RandomSelect: return BaselineKind::RandomSelect;
    case Method::DuplicateMeta: return BaselineKind::DuplicateMeta;
    default: break;
  }
  throw ValidationError("not a baseline method");
}

// Weights of every train example under the current state.
std::vector<double> all_train_weights(const ModelParams& params, const WeightState& weights,
                                      const Split& train) {
  const Batch batch = train.all();
  if (!weights.is_net()) return std::get<ScalarWeights>(weights.repr).w;
  const ForwardTrace trace = forward(params, batch.features);
  return weights_for_batch(weights, make_weight_query(weights, batch, trace));
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

LogRow blank_row(std::size_t step, const std::map<int, std::string>& legend) {
  LogRow row;
  row.step = step;
  for (const auto& [tag, name] : legend) {
    row.batch_weight[tag] = std::nullopt;
    row.all_weight[tag] = std::nullopt;
  }
  return row;
}

// Keeps the parameters with the lowest meta loss seen at evaluation rows.
struct BestTracker {
  double best_loss = std::numeric_limits<double>::infinity();
  std::optional<ModelParams> best;

  void offer(const ModelParams& params, const LogRow& row) {
    if (row.meta_loss && *row.meta_loss < best_loss) {
      best_loss = *row.meta_loss;
      best = params;
    }
  }
};

void write_weights_csv(const RunResult& r, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  out << "id,tag,weight\n";
  for (std::size_t i = 0; i < r.scenario.train.size(); ++i) {
    out << i << ',' << r.scenario.train.tags[i] << ',';
    if (!r.final_weights.empty()) out << fmt::format("{:.10g}", r.final_weights[i]);
    out << '\n';
  }
}

void write_artifacts(const RunConfig& cfg, const RunResult& r) {
  if (cfg.out_dir.empty()) return;
  std::filesystem::create_directories(cfg.out_dir);
  write_log_csv(r.log, cfg.out_dir / "log.csv");
  write_timing_csv(r.log, cfg.out_dir / "timing.csv");
  write_weights_csv(r, cfg.out_dir / "weights_final.csv");
  write_model_json(r.params, cfg.out_dir / "model_final.json");
  std::ofstream(cfg.out_dir / "config_echo", std::ios::binary) << echo_config(cfg);
  if (!r.log.rows.empty()) export_plots(r.log, cfg.out_dir);
}

void run_bads(const RunConfig& cfg, const SgldConfig& sgld, const Rng& root, RunResult& r,
              BestTracker& best) {
  const Scenario& sc = r.scenario;
  const std::size_t n_t = sc.train.size();
  WeightState ws = cfg.method == Method::BadsScalar
                       ? make_scalar_weights(n_t, cfg.init_weight, sgld.s_avg)
                       : make_weight_net(cfg.hidden.back(), sc.num_classes, cfg.weight_net_labels,
                                         cfg.init_weight, sgld.s_avg);
  BatchStream train_stream(iota_ids(n_t), sgld.batch_t, root.substream(streams::kTrainShuffle));
  BatchStream meta_stream(iota_ids(sc.meta.size()), sgld.batch_m,
                          root.substream(streams::kMetaShuffle));
  Rng theta_rng = root.substream(streams::kThetaNoise);
  Rng w_rng = root.substream(streams::kWeightNoise);
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double, std::milli>(Clock::now() - start).count(); };

  auto eval_into = [&](LogRow& row) {
    fill_eval(row, r.params, sc);
    const std::vector<double> w = all_train_weights(r.params, ws, sc.train);
    const std::vector<std::size_t> ids = iota_ids(n_t);
    row.all_weight = tag_means(sc.tag_legend, sc.train.tags, ids, w);
    best.offer(r.params, row);
  };

  for (std::size_t step = 0; step < sgld.steps; ++step) {
    const bool eval = cfg.eval_every > 0 && step % cfg.eval_every == 0;
    const bool logged = eval || (cfg.log_every > 0 && step % cfg.log_every == 0);
    LogRow row = blank_row(step, sc.tag_legend);
    if (eval) eval_into(row);

    const Batch train_batch = sc.train.batch(train_stream.next());
    const Batch meta_batch = sc.meta.batch(meta_stream.next());
    StepStats stats;
    ModelParams next_params;
    WeightState next_weights;
    try {
      next_params = sgld_step_theta(r.params, ws, train_batch, meta_batch, sgld, theta_rng, &stats);
      next_weights = sgld_step_w(r.params, ws, train_batch, sgld, w_rng);
    } catch (const DivergenceError& e) {
      r.weights = ws;
      throw DivergenceError(fmt::format("{} at step {}", e.what(), step));
    }

    if (logged) {
      std::vector<double> weighted(stats.train_losses.size());
      for (std::size_t i = 0; i < weighted.size(); ++i) {
        weighted[i] = stats.batch_weights[i] * stats.train_losses[i];
      }
      row.train_loss = mean_of(stats.train_losses);
      row.train_loss_weighted = mean_of(weighted);
      row.w_bar = ws.average.value;
      row.w_sum_est = std::accumulate(stats.batch_weights.begin(), stats.batch_weights.end(), 0.0) +
                      static_cast<double>(n_t - train_batch.size()) * ws.average.value;
      row.batch_weight = tag_means(sc.tag_legend, sc.train.tags, train_batch.ids, stats.batch_weights);
      row.wall_ms = elapsed();
      r.log.rows.push_back(std::move(row));
    }
    r.params = std::move(next_params);
    ws = std::move(next_weights);
  }
  LogRow last = blank_row(sgld.steps, sc.tag_legend);
  eval_into(last);
  last.w_bar = ws.average.value;
  last.wall_ms = elapsed();
  r.log.rows.push_back(std::move(last));
  r.final_weights = all_train_weights(r.params, ws, sc.train);
  r.weights = std::move(ws);
}

}  // namespace

Scenario build_scenario(const RunConfig& cfg) {
  const auto& s = cfg.scenario;
  if (s.generator == "file") {
    if (s.path.empty()) throw ValidationError("scenario.path is required for generator = file");
    return read_scenario(s.path);
  }
  if (s.generator == "imbalanced") {
    ImbalanceSpec spec = s.imbalanced;
    spec.seed = cfg.scenario_seed();
    return gen_imbalanced(spec);
  }
  if (s.generator == "label_noise") {
    LabelNoiseSpec spec = s.label_noise;
    spec.seed = cfg.scenario_seed();
    return gen_label_noise(spec);
  }
  if (s.generator == "domain_mixture") {
    DomainSpec spec = s.domain;
    spec.seed = cfg.scenario_seed();
    return gen_domain_mixture(spec);
  }
  throw ValidationError(fmt::format("unknown scenario generator '{}'", s.generator));
}

SgldConfig resolve_sgld(const RunConfig& cfg, const Scenario& scenario) {
  SgldConfig s = cfg.sgld;
  s.n_t = scenario.train.size();
  s.n_m = scenario.meta.size();
  s.batch_m = std::min(s.batch_m, s.n_m);
  s.seed = cfg.seed;
  if (cfg.sigma_per_nt) s.sigma = *cfg.sigma_per_nt * static_cast<double>(s.n_t);
  s.validate();
  return s;
}

ModelParams initial_params(const RunConfig& cfg, const Scenario& scenario) {
  MlpSpec spec;
  spec.input_width = scenario.train.features.cols();
  spec.hidden = cfg.hidden;
  spec.activation = cfg.activation;
  spec.loss = scenario.binary ? LossKind::Logistic : LossKind::SoftmaxCrossEntropy;
  spec.output_width = scenario.binary ? 1 : scenario.num_classes;
  Rng init = Rng(cfg.seed).substream(streams::kInit);
  return init_mlp(spec, init);
}

RunResult run_experiment(const RunConfig& cfg) {
  if (cfg.hidden.empty()) throw ValidationError("model.hidden needs at least one layer");
  RunResult r;
  r.scenario = build_scenario(cfg);
  const SgldConfig sgld = resolve_sgld(cfg, r.scenario);
  const Rng root(cfg.seed);
  r.initial = initial_params(cfg, r.scenario);
  r.params = r.initial;
  r.log.tag_legend = r.scenario.tag_legend;
  BestTracker best;
  try {
    if (is_bads(cfg.method)) {
      run_bads(cfg, sgld, root, r, best);
    } else {
      BaselineOptions opts{cfg.baseline_lr, cfg.eval_every, cfg.log_every, {}};
      opts.on_eval = [&](const ModelParams& p, const LogRow& row) { best.offer(p, row); };
      r.params = train_baseline(baseline_of(cfg.method), r.scenario, r.initial, sgld, opts, root, r.log);
    }
  } catch (const DivergenceError&) {
    write_artifacts(cfg, r);
    throw;
  }
  if (cfg.checkpoint == CheckpointPolicy::BestOnValidation && best.best) r.params = *best.best;
  write_artifacts(cfg, r);
  return r;
}

std::map<int, double> final_tag_means(const RunResult& result) {
  std::map<int, double> out;
  if (result.final_weights.empty()) return out;
  const auto ids = iota_ids(result.scenario.train.size());
  for (const auto& [tag, v] : tag_means(result.scenario.tag_legend, result.scenario.train.tags, ids,
                                        result.final_weights)) {
    if (v) out[tag] = *v;
  }
  return out;
}

std::vector<SweepRow> sweep(const RunConfig& base, const std::string& axis,
                            const std::vector<std::string>& values) {
  if (values.empty()) throw ValidationError("sweep needs at least one value");
  {
    RunConfig probe = base;  // validates the axis name and every value up front
    for (const auto& v : values) apply_setting(probe, axis, v);
  }
  std::vector<SweepRow> rows(values.size());
  std::map<int, std::string> legend;
  std::vector<std::exception_ptr> errors(values.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < values.size(); ++i) {
    try {
      RunConfig cfg = base;
      apply_setting(cfg, axis, values[i]);
      if (!base.out_dir.empty()) cfg.out_dir = base.out_dir / fmt::format("{}={}", axis, values[i]);
      const RunResult r = run_experiment(cfg);
      const LogRow& last = r.log.rows.back();
      rows[i] = SweepRow{values[i], last.test_acc, last.test_loss, last.meta_loss, last.all_weight};
#pragma omp critical
      legend = r.scenario.tag_legend;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  if (!base.out_dir.empty()) {
    std::filesystem::create_directories(base.out_dir);
    std::ofstream out(base.out_dir / "summary.csv", std::ios::binary);
    out << axis << ",test_acc,test_loss,meta_loss";
    for (const auto& [tag, name] : legend) out << ",w_" << name;
    out << '\n';
    auto cell = [](const std::optional<double>& v) {
      return v ? fmt::format("{:.10g}", *v) : std::string();
    };
    for (const SweepRow& row : rows) {
      out << row.value << ',' << cell(row.test_acc) << ',' << cell(row.test_loss) << ','
          << cell(row.meta_loss);
      for (const auto& [tag, name] : legend) {
        auto it = row.tag_weight.find(tag);
        out << ',' << (it == row.tag_weight.end() ? std::string() : cell(it->second));
      }
      out << '\n';
    }
  }
  return rows;
}

void write_model_json(const ModelParams& params, const std::filesystem::path& file) {
  nlohmann::ordered_json j;
  j["loss"] = params.loss == LossKind::Logistic ? "logistic"
              : params.loss == LossKind::Gaussian ? "gaussian"
                                                  : "softmax";
  nlohmann::ordered_json acts = nlohmann::ordered_json::array();
  for (Activation a : params.activations) acts.push_back(to_string(a));
  j["activations"] = acts;
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const Layer& l : params.layers) {
    nlohmann::ordered_json lj;
    lj["in"] = l.in_width();
    lj["out"] = l.out_width();
    lj["weight"] = std::vector<double>(l.weight.values().begin(), l.weight.values().end());
    lj["bias"] = std::vector<double>(l.bias.values().begin(), l.bias.values().end());
    layers.push_back(lj);
  }
  j["layers"] = layers;
  std::ofstream(file, std::ios::binary) << j.dump() << '\n';
}

ModelParams read_model_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError(fmt::format("cannot read {}", file.string()));
  ModelParams p;
  try {
    const auto j = nlohmann::json::parse(in);
    const std::string loss = j.at("loss").get<std::string>();
    p.loss = loss == "logistic" ? LossKind::Logistic
             : loss == "gaussian" ? LossKind::Gaussian
                                  : LossKind::SoftmaxCrossEntropy;
    for (const auto& a : j.at("activations")) p.activations.push_back(parse_activation(a.get<std::string>()));
    for (const auto& lj : j.at("layers")) {
      const auto in_w = lj.at("in").get<std::size_t>();
      const auto out_w = lj.at("out").get<std::size_t>();
      p.layers.push_back(Layer{Matrix(in_w, out_w, lj.at("weight").get<std::vector<double>>()),
                               Matrix(1, out_w, lj.at("bias").get<std::vector<double>>())});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("bad model file {}: {}", file.string(), e.what()));
  }
  p.validate();
  return p;
}

}  // namespace bads
