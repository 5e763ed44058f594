#include "bads/nn.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "bads/kernels.hpp"

namespace bads {
namespace {

namespace kn = kernels::parallel;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void apply_activation(Activation act, const Matrix& pre, Matrix& post) {
  auto in = pre.values();
  auto out = post.values();
  switch (act) {
    case Activation::Relu:
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
      break;
    case Activation::Sigmoid:
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = sigmoid(in[i]);
      break;
    case Activation::Tanh:
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::tanh(in[i]);
      break;
  }
}

// delta <- delta * act'(pre), using the cached activation where cheaper.
void scale_by_derivative(Activation act, const Matrix& pre, const Matrix& post, Matrix& delta) {
  auto d = delta.values();
  auto p = pre.values();
  auto a = post.values();
  switch (act) {
    case Activation::Relu:
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = p[i] > 0.0 ? d[i] : 0.0;
      break;
    case Activation::Sigmoid:
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= a[i] * (1.0 - a[i]);
      break;
    case Activation::Tanh:
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= 1.0 - a[i] * a[i];
      break;
  }
}

void check_batch(const ForwardTrace& trace, std::size_t n, const char* what) {
  if (n != trace.batch_size()) {
    throw ShapeError(fmt::format("{} count {} does not match batch size {}", what, n,
                                 trace.batch_size()));
  }
}

void check_labels(const ForwardTrace& trace, std::span<const int> labels) {
  if (trace.loss == LossKind::Gaussian) {
    throw ValidationError("gaussian loss takes real-valued targets, not labels");
  }
  check_batch(trace, labels.size(), "label");
  const int classes = trace.loss == LossKind::Logistic ? 2 : static_cast<int>(trace.logits().cols());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) {
      throw ValidationError(
          fmt::format("label {} at row {} outside [0, {})", labels[i], i, classes));
    }
  }
}

void check_weights(std::span<const double> weights) {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw ValidationError(
          fmt::format("per-example weight {} at row {} must be finite and >= 0", weights[i], i));
    }
  }
}

Gradients backpropagate(const ModelParams& params, const ForwardTrace& trace, Matrix delta) {
  Gradients g;
  g.params = zeros_like(params);
  for (std::size_t k = params.layers.size(); k-- > 0;) {
    g.params.layers[k].weight = kn::matmul_tn(trace.post[k], delta);
    g.params.layers[k].bias = kn::column_sums(delta);
    Matrix upstream = kn::matmul_nt(delta, params.layers[k].weight);
    if (k + 1 == params.layers.size()) g.embedding = upstream;
    if (k > 0) {
      scale_by_derivative(params.activations[k - 1], trace.pre[k - 1], trace.post[k], upstream);
      delta = std::move(upstream);
    }
  }
  return g;
}

}  // namespace

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "tanh") return Activation::Tanh;
  throw ValidationError(fmt::format("unknown activation '{}' (relu, sigmoid, tanh)", name));
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

std::size_t ModelParams::num_classes() const {
  switch (loss) {
    case LossKind::Logistic: return 2;
    case LossKind::Gaussian: return 0;
    case LossKind::SoftmaxCrossEntropy: return output_width();
  }
  return 0;
}

void ModelParams::validate() const {
  if (layers.empty()) throw ShapeError("model has no layers");
  if (activations.size() + 1 != layers.size()) {
    throw ShapeError(fmt::format("{} layers need {} hidden activations, got {}", layers.size(),
                                 layers.size() - 1, activations.size()));
  }
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const Layer& l = layers[k];
    if (l.bias.rows() != 1 || l.bias.cols() != l.out_width()) {
      throw ShapeError(fmt::format("layer {}: bias must be 1x{}", k, l.out_width()));
    }
    if (k + 1 < layers.size() && layers[k + 1].in_width() != l.out_width()) {
      throw ShapeError(fmt::format("layer {} emits width {} but layer {} expects {}", k,
                                   l.out_width(), k + 1, layers[k + 1].in_width()));
    }
  }
  if (loss != LossKind::SoftmaxCrossEntropy && output_width() != 1) {
    throw ShapeError("logistic and gaussian heads need a single output");
  }
}

ModelParams init_mlp(const MlpSpec& spec, Rng& rng) {
  if (spec.input_width == 0 && spec.hidden.empty() && spec.loss != LossKind::Gaussian) {
    throw ValidationError("classifier needs a positive input width");
  }
  if (spec.output_width == 0) throw ValidationError("output width must be positive");
  ModelParams p;
  p.loss = spec.loss;
  std::size_t fan_in = spec.input_width;
  auto add_layer = [&](std::size_t out) {
    Layer l{Matrix(fan_in, out), Matrix(1, out)};
    const double scale = fan_in > 0 ? std::sqrt(2.0 / static_cast<double>(fan_in)) : 0.0;
    for (double& v : l.weight.values()) v = scale * rng.normal();
    p.layers.push_back(std::move(l));
    fan_in = out;
  };
  for (std::size_t h : spec.hidden) {
    if (h == 0) throw ValidationError("hidden width must be positive");
    add_layer(h);
    p.activations.push_back(spec.activation);
  }
  add_layer(spec.output_width);
  p.validate();
  return p;
}

ForwardTrace forward(const ModelParams& params, const Matrix& inputs) {
  ForwardTrace t;
  t.loss = params.loss;
  t.post.push_back(inputs);
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    const Layer& l = params.layers[k];
    if (t.post.back().cols() != l.in_width()) {
      throw ShapeError(fmt::format("layer {} expects input width {}, got {}", k, l.in_width(),
                                   t.post.back().cols()));
    }
    Matrix z = kn::matmul(t.post.back(), l.weight);
    kn::add_row_vector(z, l.bias);
    if (k + 1 < params.layers.size()) {
      Matrix a(z.rows(), z.cols());
      apply_activation(params.activations[k], z, a);
      t.pre.push_back(std::move(z));
      t.post.push_back(std::move(a));
    } else {
      t.pre.push_back(std::move(z));
    }
  }
  return t;
}

std::vector<double> per_example_losses(const ForwardTrace& trace, std::span<const int> labels) {
  check_labels(trace, labels);
  const Matrix& z = trace.logits();
  std::vector<double> out(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto row = z.row(i);
    if (trace.loss == LossKind::Logistic) {
      const double x = row[0];
      out[i] = std::max(x, 0.0) - labels[i] * x + std::log1p(std::exp(-std::abs(x)));
    } else {
      const double m = *std::max_element(row.begin(), row.end());
      double s = 0.0;
      for (double v : row) s += std::exp(v - m);
      out[i] = m + std::log(s) - row[labels[i]];
    }
  }
  return out;
}

std::vector<double> per_example_losses(const ForwardTrace& trace,
                                       std::span<const double> targets) {
  if (trace.loss != LossKind::Gaussian) {
    throw ValidationError("real-valued targets need a gaussian head");
  }
  check_batch(trace, targets.size(), "target");
  const Matrix& z = trace.logits();
  std::vector<double> out(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const double r = targets[i] - z(i, 0);
    out[i] = 0.5 * r * r;
  }
  return out;
}

Gradients backward(const ModelParams& params, const ForwardTrace& trace,
                   std::span<const double> weights, std::span<const int> labels) {
  check_labels(trace, labels);
  check_batch(trace, weights.size(), "weight");
  check_weights(weights);
  const Matrix& z = trace.logits();
  const double inv_n = 1.0 / static_cast<double>(z.rows());
  Matrix delta(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const double scale = weights[i] * inv_n;
    auto row = z.row(i);
    auto d = delta.row(i);
    if (trace.loss == LossKind::Logistic) {
      d[0] = scale * (sigmoid(row[0]) - labels[i]);
    } else {
      const double m = *std::max_element(row.begin(), row.end());
      double s = 0.0;
      for (double v : row) s += std::exp(v - m);
      for (std::size_t c = 0; c < row.size(); ++c) {
        d[c] = scale * (std::exp(row[c] - m) / s - (static_cast<int>(c) == labels[i] ? 1.0 : 0.0));
      }
    }
  }
  return backpropagate(params, trace, std::move(delta));
}

Gradients backward(const ModelParams& params, const ForwardTrace& trace,
                   std::span<const double> weights, std::span<const double> targets) {
  if (trace.loss != LossKind::Gaussian) {
    throw ValidationError("real-valued targets need a gaussian head");
  }
  check_batch(trace, targets.size(), "target");
  check_batch(trace, weights.size(), "weight");
  check_weights(weights);
  const Matrix& z = trace.logits();
  const double inv_n = 1.0 / static_cast<double>(z.rows());
  Matrix delta(z.rows(), 1);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    delta(i, 0) = weights[i] * inv_n * (z(i, 0) - targets[i]);
  }
  return backpropagate(params, trace, std::move(delta));
}

std::vector<int> predict(const ForwardTrace& trace) {
  const Matrix& z = trace.logits();
  std::vector<int> out(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto row = z.row(i);
    if (trace.loss == LossKind::Logistic) {
      out[i] = row[0] > 0.0 ? 1 : 0;
    } else {
      out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
  }
  return out;
}

std::size_t parameter_count(const ModelParams& params) {
  std::size_t n = 0;
  for (const Layer& l : params.layers) n += l.weight.size() + l.bias.size();
  return n;
}

std::vector<double> flatten(const ModelParams& params) {
  std::vector<double> flat;
  flat.reserve(parameter_count(params));
  for (const Layer& l : params.layers) {
    flat.insert(flat.end(), l.weight.values().begin(), l.weight.values().end());
    flat.insert(flat.end(), l.bias.values().begin(), l.bias.values().end());
  }
  return flat;
}

void assign_flat(ModelParams& params, std::span<const double> flat) {
  if (flat.size() != parameter_count(params)) {
    throw ShapeError(fmt::format("flat vector has {} entries, model has {}", flat.size(),
                                 parameter_count(params)));
  }
  std::size_t pos = 0;
  for (Layer& l : params.layers) {
    for (double& v : l.weight.values()) v = flat[pos++];
    for (double& v : l.bias.values()) v = flat[pos++];
  }
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams z = params;
  for (Layer& l : z.layers) {
    std::fill(l.weight.values().begin(), l.weight.values().end(), 0.0);
    std::fill(l.bias.values().begin(), l.bias.values().end(), 0.0);
  }
  return z;
}

void axpy(double a, const ModelParams& x, ModelParams& y) {
  for (std::size_t k = 0; k < y.layers.size(); ++k) {
    auto xw = x.layers[k].weight.values();
    auto yw = y.layers[k].weight.values();
    for (std::size_t i = 0; i < yw.size(); ++i) yw[i] += a * xw[i];
    auto xb = x.layers[k].bias.values();
    auto yb = y.layers[k].bias.values();
    for (std::size_t i = 0; i < yb.size(); ++i) yb[i] += a * xb[i];
  }
}

double squared_norm(const ModelParams& params) {
  double s = 0.0;
  for (double v : flatten(params)) s += v * v;
  return s;
}

bool all_finite(const ModelParams& params) {
  for (const Layer& l : params.layers) {
    if (!l.weight.all_finite() || !l.bias.all_finite()) return false;
  }
  return true;
}

}  // namespace bads
