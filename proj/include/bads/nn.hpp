#pragma once

#include <span>
#include <string>
#include <vector>

#include "bads/matrix.hpp"
#include "bads/rng.hpp"

namespace bads {

enum class Activation { Relu, Sigmoid, Tanh };

// Output head. Logistic uses one logit and labels {0, 1}; Gaussian is the
// unit-variance squared loss (t - y)^2 / 2 on one real-valued output.
enum class LossKind { SoftmaxCrossEntropy, Logistic, Gaussian };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

/// Fully connected layer: y = x * weight + bias, weight is in x out, bias 1 x out.
struct Layer {
  Matrix weight;
  Matrix bias;

  std::size_t in_width() const { return weight.rows(); }
  std::size_t out_width() const { return weight.cols(); }
  friend bool operator==(const Layer&, const Layer&) = default;
};

/// Backbone parameters. `activations[k]` follows hidden layer k; the last
/// layer emits raw logits.
struct ModelParams {
  std::vector<Layer> layers;
  std::vector<Activation> activations;
  LossKind loss = LossKind::SoftmaxCrossEntropy;

  std::size_t input_width() const { return layers.front().in_width(); }
  std::size_t output_width() const { return layers.back().out_width(); }
  // Number of label values accepted by the loss (2 for a single logistic logit).
  std::size_t num_classes() const;
  // Throws ShapeError on incompatible adjacent layers.
  void validate() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct MlpSpec {
  std::size_t input_width = 0;
  std::vector<std::size_t> hidden;
  std::size_t output_width = 0;
  Activation activation = Activation::Tanh;
  LossKind loss = LossKind::SoftmaxCrossEntropy;
};

// He-scaled normal weights (std sqrt(2 / fan_in)), zero biases.
ModelParams init_mlp(const MlpSpec& spec, Rng& rng);

struct ForwardTrace {
  std::vector<Matrix> pre;   // pre[k] = post[k] * W_k + b_k
  std::vector<Matrix> post;  // post[0] = inputs, post[k] = act(pre[k - 1])
  LossKind loss = LossKind::SoftmaxCrossEntropy;

  const Matrix& logits() const { return pre.back(); }
  // Input of the final layer: the last hidden activation, or the inputs for a
  // network without hidden layers.
  const Matrix& embedding() const { return post.back(); }
  std::size_t batch_size() const { return post.front().rows(); }
};

ForwardTrace forward(const ModelParams& params, const Matrix& inputs);

std::vector<double> per_example_losses(const ForwardTrace& trace, std::span<const int> labels);
std::vector<double> per_example_losses(const ForwardTrace& trace, std::span<const double> targets);

struct Gradients {
  ModelParams params;  // same shape as the backbone
  Matrix embedding;    // d objective / d embedding, batch x embedding width
};

/// Gradient of (1/n) * sum_i weight_i * loss_i over the batch.
Gradients backward(const ModelParams& params, const ForwardTrace& trace,
                   std::span<const double> weights, std::span<const int> labels);
Gradients backward(const ModelParams& params, const ForwardTrace& trace,
                   std::span<const double> weights, std::span<const double> targets);

// Argmax (or logit > 0 for a logistic head) per row.
std::vector<int> predict(const ForwardTrace& trace);

// Flat-vector view of parameters, layer by layer: weight then bias.
std::size_t parameter_count(const ModelParams& params);
std::vector<double> flatten(const ModelParams& params);
void assign_flat(ModelParams& params, std::span<const double> flat);
ModelParams zeros_like(const ModelParams& params);
// y += a * x
void axpy(double a, const ModelParams& x, ModelParams& y);
double squared_norm(const ModelParams& params);
bool all_finite(const ModelParams& params);

}  // namespace bads
