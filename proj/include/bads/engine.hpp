#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bads/nn.hpp"
#include "bads/rng.hpp"
#include "bads/weight_model.hpp"

namespace bads {

/// Step sizes, priors and impact constants of the joint Langevin sampler over
/// backbone parameters and example weights.
struct SgldConfig {
  double eta = 1e-3;           // backbone step size
  double eta_w = 1e-3;         // weight (or weight-network) step size
  double sigma = 1.0;          // width of the Gaussian penalty on sum(w)
  double beta = 0.05;          // target selected fraction
  double rho_theta_t = 1.0;
  double rho_theta_m = 1.0;
  double rho_w_t = 1.0;
  double weight_decay = 0.0;   // precision of the zero-mean Gaussian prior on theta
  std::size_t n_t = 0;
  std::size_t n_m = 0;
  std::size_t batch_t = 1;
  std::size_t batch_m = 1;
  std::size_t s_avg = 10;
  double noise_scale = 1.0;    // multiplies the sqrt(eta) noise; 0 is deterministic
  std::size_t steps = 0;
  std::uint64_t seed = 0;

  void validate() const;
  // floor(n_t * beta): the number of examples the prior aims to select.
  double target_count() const;
};

/// A minibatch. `ids` index rows of the split it came from; classification
/// uses `labels`, a gaussian head uses `targets`.
struct Batch {
  Matrix features;
  std::vector<int> labels;
  std::vector<double> targets;
  std::vector<std::size_t> ids;

  std::size_t size() const { return features.rows(); }
};

std::vector<double> batch_losses(const ForwardTrace& trace, const Batch& batch);
Gradients batch_backward(const ModelParams& params, const ForwardTrace& trace,
                         std::span<const double> weights, const Batch& batch);

// Query for the weights of `batch`, using the embeddings in `trace`.
WeightQuery make_weight_query(const WeightState& state, const Batch& batch,
                              const ForwardTrace& trace);

/// Gradient of log p(theta) = -(lambda / 2) * |theta|^2.
ModelParams log_prior_theta_grad(const ModelParams& params, double weight_decay);

/// d/dw_i of -(S - floor(N_t beta))^2 / (2 sigma^2) with
/// S = sum_{batch} w + (N_t - |B|) * w_bar and w_bar held constant.
/// Every batch member gets the same value.
std::vector<double> sparsity_prior_grad(std::span<const double> batch_weights, double w_bar,
                                        const SgldConfig& cfg);

WeightState update_running_avg(WeightState state, std::span<const double> batch_weights);

struct StepStats {
  std::vector<double> train_losses;   // per example, at the pre-step parameters
  std::vector<double> batch_weights;  // weights used for those losses
  double meta_loss = 0.0;             // mean over the meta batch
};

/// theta <- theta + (eta/2) [grad log p(theta) - rho_t N_t grad mean(w l)
///                           - rho_m N_m grad mean(l_meta)] + noise_scale sqrt(eta) eps
ModelParams sgld_step_theta(const ModelParams& params, const WeightState& weights,
                            const Batch& train_batch, const Batch& meta_batch,
                            const SgldConfig& cfg, Rng& rng, StepStats* stats = nullptr);

/// Langevin step on the weights of the batch members (scalar variant) or on
/// the weight-network parameters, followed by a running-average update.
/// Scalar weights are clamped to [0, 1] after the noise is added.
WeightState sgld_step_w(const ModelParams& params, const WeightState& weights,
                        const Batch& train_batch, const SgldConfig& cfg, Rng& rng,
                        StepStats* stats = nullptr);

/// log p(w) + log p(theta) - sum_i w_i l_i - sum_j l_j, up to a constant, on
/// the full train and meta sets. The weight sum is exact here (no running
/// average). Meant for small data: tests and the posterior lab.
double assemble_log_posterior(const ModelParams& params, const WeightState& weights,
                              const Batch& train, const Batch& meta, const SgldConfig& cfg);

}  // namespace bads
