#include "bads/weight_model.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "bads/kernels.hpp"

namespace bads {
namespace {

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

void RunningAverage::push(double batch_mean) {
  recent.push_back(batch_mean);
  while (recent.size() > window) recent.pop_front();
  value = std::accumulate(recent.begin(), recent.end(), 0.0) / static_cast<double>(recent.size());
}

WeightState make_scalar_weights(std::size_t n_train, double init, std::size_t s_avg) {
  if (!(init >= 0.0 && init <= 1.0)) throw ValidationError("initial weight must lie in [0, 1]");
  if (s_avg == 0) throw ValidationError("s_avg must be >= 1");
  WeightState s{ScalarWeights{std::vector<double>(n_train, init)}, RunningAverage{s_avg, {}, init}};
  return s;
}

WeightState make_weight_net(std::size_t embedding_width, std::size_t num_classes,
                            bool use_labels, double init, std::size_t s_avg) {
  if (!(init > 0.0 && init < 1.0)) {
    throw ValidationError("weight-network initial weight must lie in (0, 1)");
  }
  if (s_avg == 0) throw ValidationError("s_avg must be >= 1");
  const std::size_t in = embedding_width + (use_labels ? num_classes : 0);
  WeightNet net{Layer{Matrix(in, 1), Matrix(1, 1, std::log(init / (1.0 - init)))}, use_labels,
                num_classes};
  return WeightState{std::move(net), RunningAverage{s_avg, {}, init}};
}

Matrix one_hot(std::span<const int> labels, std::size_t num_classes) {
  Matrix m(labels.size(), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw ValidationError(fmt::format("label {} outside [0, {})", labels[i], num_classes));
    }
    m(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return m;
}

Matrix weight_net_inputs(const WeightNet& net, const WeightQuery& query) {
  const std::size_t n = query.ids.size();
  if (query.embeddings.rows() != n) {
    throw ShapeError(fmt::format("weight query has {} ids but {} embedding rows", n,
                                 query.embeddings.rows()));
  }
  if (query.embeddings.cols() != net.embedding_width()) {
    throw ShapeError(fmt::format("weight network expects embedding width {}, got {}",
                                 net.embedding_width(), query.embeddings.cols()));
  }
  if (!net.use_labels) return query.embeddings;
  if (!query.label_onehot || query.label_onehot->rows() != n ||
      query.label_onehot->cols() != net.num_classes) {
    throw ValidationError("weight network is label-conditioned but the query has no one-hot labels");
  }
  Matrix u(n, net.affine.in_width());
  for (std::size_t i = 0; i < n; ++i) {
    auto dst = u.row(i);
    auto e = query.embeddings.row(i);
    auto y = query.label_onehot->row(i);
    std::copy(e.begin(), e.end(), dst.begin());
    std::copy(y.begin(), y.end(), dst.begin() + static_cast<std::ptrdiff_t>(e.size()));
  }
  return u;
}

std::vector<double> weights_for_batch(const WeightState& state, const WeightQuery& query) {
  if (const auto* scalar = std::get_if<ScalarWeights>(&state.repr)) {
    std::vector<double> out(query.ids.size());
    for (std::size_t i = 0; i < query.ids.size(); ++i) {
      if (query.ids[i] >= scalar->w.size()) {
        throw ValidationError(fmt::format("example id {} outside the weight table (size {})",
                                          query.ids[i], scalar->w.size()));
      }
      out[i] = scalar->w[query.ids[i]];
    }
    return out;
  }
  const auto& net = std::get<WeightNet>(state.repr);
  if (query.embeddings.empty() && !query.ids.empty()) {
    throw ValidationError("weight network needs embeddings for every queried example");
  }
  Matrix z = kernels::parallel::matmul(weight_net_inputs(net, query), net.affine.weight);
  std::vector<double> out(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) out[i] = logistic(z(i, 0) + net.affine.bias(0, 0));
  return out;
}

std::vector<double> score_new_examples(const WeightState& state, const WeightQuery& query) {
  if (!state.is_net()) {
    throw UnsupportedError("scalar weights cannot score unseen examples; use a weight network");
  }
  return weights_for_batch(state, query);
}

}  // namespace bads
