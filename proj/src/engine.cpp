#include "bads/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace bads {
namespace {

void check_finite(std::span<const double> values, const char* term) {
  for (double v : values) {
    if (!std::isfinite(v)) throw DivergenceError(fmt::format("non-finite {}", term));
  }
}

void check_finite(const ModelParams& p, const char* term) {
  if (!all_finite(p)) throw DivergenceError(fmt::format("non-finite {}", term));
}

void add_noise(ModelParams& p, double scale, Rng& rng) {
  for (Layer& l : p.layers) {
    for (double& v : l.weight.values()) v += scale * rng.normal();
    for (double& v : l.bias.values()) v += scale * rng.normal();
  }
}

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

void SgldConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ValidationError("sgld config: " + msg); };
  if (!(eta > 0.0)) fail("eta must be > 0");
  if (!(eta_w > 0.0)) fail("eta_w must be > 0");
  if (!(sigma > 0.0)) fail("sigma must be > 0");
  if (!(beta > 0.0 && beta <= 1.0)) fail("beta must lie in (0, 1]");
  if (rho_theta_t < 0.0 || rho_theta_m < 0.0 || rho_w_t < 0.0) fail("rho constants must be >= 0");
  if (weight_decay < 0.0) fail("weight_decay must be >= 0");
  if (s_avg < 1) fail("s_avg must be >= 1");
  if (batch_t < 1 || batch_m < 1) fail("batch sizes must be >= 1");
  if (batch_t > n_t) fail(fmt::format("batch_t {} exceeds n_t {}", batch_t, n_t));
  if (batch_m > n_m) fail(fmt::format("batch_m {} exceeds n_m {}", batch_m, n_m));
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) fail("noise_scale must be >= 0");
}

double SgldConfig::target_count() const {
  // The slack absorbs decimal-to-binary error in beta (0.29 * 100 is 28.999...).
  return std::floor(static_cast<double>(n_t) * beta + 1e-9);
}

std::vector<double> batch_losses(const ForwardTrace& trace, const Batch& batch) {
  if (trace.loss == LossKind::Gaussian) return per_example_losses(trace, batch.targets);
  return per_example_losses(trace, batch.labels);
}

Gradients batch_backward(const ModelParams& params, const ForwardTrace& trace,
                         std::span<const double> weights, const Batch& batch) {
  if (trace.loss == LossKind::Gaussian) return backward(params, trace, weights, batch.targets);
  return backward(params, trace, weights, batch.labels);
}

WeightQuery make_weight_query(const WeightState& state, const Batch& batch,
                              const ForwardTrace& trace) {
  WeightQuery q{batch.ids, {}, std::nullopt};
  if (const auto* net = std::get_if<WeightNet>(&state.repr)) {
    q.embeddings = trace.embedding();
    if (net->use_labels) q.label_onehot = one_hot(batch.labels, net->num_classes);
  }
  return q;
}

ModelParams log_prior_theta_grad(const ModelParams& params, double weight_decay) {
  ModelParams g = zeros_like(params);
  axpy(-weight_decay, params, g);
  return g;
}

std::vector<double> sparsity_prior_grad(std::span<const double> batch_weights, double w_bar,
                                        const SgldConfig& cfg) {
  const double batch_sum = std::accumulate(batch_weights.begin(), batch_weights.end(), 0.0);
  const double off_batch = static_cast<double>(cfg.n_t) - static_cast<double>(batch_weights.size());
  const double total = batch_sum + off_batch * w_bar;
  const double g = -(total - cfg.target_count()) / (cfg.sigma * cfg.sigma);
  return std::vector<double>(batch_weights.size(), g);
}

WeightState update_running_avg(WeightState state, std::span<const double> batch_weights) {
  if (batch_weights.empty()) throw ValidationError("running average needs a nonempty batch");
  state.average.push(mean(batch_weights));
  return state;
}

ModelParams sgld_step_theta(const ModelParams& params, const WeightState& weights,
                            const Batch& train_batch, const Batch& meta_batch,
                            const SgldConfig& cfg, Rng& rng, StepStats* stats) {
  const double half_eta = 0.5 * cfg.eta;

  const ForwardTrace train_trace = forward(params, train_batch.features);
  std::vector<double> w = weights_for_batch(weights, make_weight_query(weights, train_batch, train_trace));
  const Gradients train_grad = batch_backward(params, train_trace, w, train_batch);
  check_finite(train_grad.params, "weighted train-loss gradient");

  const ForwardTrace meta_trace = forward(params, meta_batch.features);
  const std::vector<double> ones(meta_batch.size(), 1.0);
  const Gradients meta_grad = batch_backward(params, meta_trace, ones, meta_batch);
  check_finite(meta_grad.params, "meta-loss gradient");

  ModelParams next = params;
  axpy(half_eta, log_prior_theta_grad(params, cfg.weight_decay), next);
  axpy(-half_eta * cfg.rho_theta_t * static_cast<double>(cfg.n_t), train_grad.params, next);
  axpy(-half_eta * cfg.rho_theta_m * static_cast<double>(cfg.n_m), meta_grad.params, next);
  if (cfg.noise_scale > 0.0) add_noise(next, cfg.noise_scale * std::sqrt(cfg.eta), rng);
  check_finite(next, "backbone parameters after update");

  if (stats != nullptr) {
    stats->train_losses = batch_losses(train_trace, train_batch);
    stats->batch_weights = std::move(w);
    stats->meta_loss = mean(batch_losses(meta_trace, meta_batch));
  }
  return next;
}

WeightState sgld_step_w(const ModelParams& params, const WeightState& weights,
                        const Batch& train_batch, const SgldConfig& cfg, Rng& rng,
                        StepStats* stats) {
  const std::size_t n = train_batch.size();
  if (n == 0) throw ValidationError("weight step needs a nonempty batch");
  const double half_eta = 0.5 * cfg.eta_w;
  const double noise = cfg.noise_scale * std::sqrt(cfg.eta_w);
  const double loss_scale = cfg.rho_w_t * static_cast<double>(cfg.n_t) / static_cast<double>(n);

  const ForwardTrace trace = forward(params, train_batch.features);
  const std::vector<double> losses = batch_losses(trace, train_batch);
  check_finite(losses, "train loss");
  const WeightQuery query = make_weight_query(weights, train_batch, trace);
  const std::vector<double> w = weights_for_batch(weights, query);
  const std::vector<double> prior = sparsity_prior_grad(w, weights.average.value, cfg);

  // d/dw_i of the weight log-posterior restricted to the batch.
  std::vector<double> drift(n);
  for (std::size_t i = 0; i < n; ++i) drift[i] = prior[i] - loss_scale * losses[i];
  check_finite(drift, "weight drift");

  WeightState next = weights;
  std::vector<double> updated(n);
  if (auto* scalar = std::get_if<ScalarWeights>(&next.repr)) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = w[i] + half_eta * drift[i];
      if (noise > 0.0) v += noise * rng.normal();
      updated[i] = std::clamp(v, 0.0, 1.0);
      scalar->w[train_batch.ids[i]] = updated[i];
    }
  } else {
    auto& net = std::get<WeightNet>(next.repr);
    const Matrix u = weight_net_inputs(net, query);
    Matrix grad_w(net.affine.in_width(), 1);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double g = drift[i] * w[i] * (1.0 - w[i]);
      auto row = u.row(i);
      for (std::size_t k = 0; k < row.size(); ++k) grad_w(k, 0) += g * row[k];
      grad_b += g;
    }
    for (std::size_t k = 0; k < grad_w.rows(); ++k) {
      net.affine.weight(k, 0) += half_eta * grad_w(k, 0);
      if (noise > 0.0) net.affine.weight(k, 0) += noise * rng.normal();
    }
    net.affine.bias(0, 0) += half_eta * grad_b;
    if (noise > 0.0) net.affine.bias(0, 0) += noise * rng.normal();
    if (!net.affine.weight.all_finite() || !std::isfinite(net.affine.bias(0, 0))) {
      throw DivergenceError("non-finite weight-network parameters after update");
    }
    updated = weights_for_batch(next, query);
  }

  if (stats != nullptr) {
    stats->train_losses = losses;
    stats->batch_weights = w;
  }
  return update_running_avg(std::move(next), updated);
}

double assemble_log_posterior(const ModelParams& params, const WeightState& weights,
                              const Batch& train, const Batch& meta, const SgldConfig& cfg) {
  double total_weight = 0.0;
  double weighted_train = 0.0;
  if (train.size() > 0) {
    const ForwardTrace trace = forward(params, train.features);
    const std::vector<double> losses = batch_losses(trace, train);
    const std::vector<double> w = weights_for_batch(weights, make_weight_query(weights, train, trace));
    for (std::size_t i = 0; i < w.size(); ++i) weighted_train += w[i] * losses[i];
    if (const auto* scalar = std::get_if<ScalarWeights>(&weights.repr)) {
      total_weight = std::accumulate(scalar->w.begin(), scalar->w.end(), 0.0);
    } else {
      total_weight = std::accumulate(w.begin(), w.end(), 0.0);
    }
  }
  double meta_total = 0.0;
  if (meta.size() > 0) {
    const std::vector<double> losses = batch_losses(forward(params, meta.features), meta);
    meta_total = std::accumulate(losses.begin(), losses.end(), 0.0);
  }
  const double gap = total_weight - cfg.target_count();
  const double log_pw = -gap * gap / (2.0 * cfg.sigma * cfg.sigma);
  const double log_ptheta = -0.5 * cfg.weight_decay * squared_norm(params);
  return log_pw + log_ptheta - weighted_train - meta_total;
}

}  // namespace bads
