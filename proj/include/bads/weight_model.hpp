#pragma once

#include <deque>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "bads/matrix.hpp"
#include "bads/nn.hpp"

namespace bads {

/// One free weight per training example, each in [0, 1].
struct ScalarWeights {
  std::vector<double> w;
  friend bool operator==(const ScalarWeights&, const ScalarWeights&) = default;
};

/// w = sigmoid(u * affine.weight + affine.bias), with u the backbone embedding,
/// optionally followed by the one-hot label.
struct WeightNet {
  Layer affine;  // (embedding width [+ num_classes]) x 1
  bool use_labels = false;
  std::size_t num_classes = 0;

  std::size_t embedding_width() const {
    return affine.in_width() - (use_labels ? num_classes : 0);
  }
  friend bool operator==(const WeightNet&, const WeightNet&) = default;
};

/// Mean of the last `window` minibatch mean weights. Stands in for the mean
/// over all N_t weights when only a minibatch is in view.
struct RunningAverage {
  std::size_t window = 10;
  std::deque<double> recent;
  double value = 0.0;

  void push(double batch_mean);
  friend bool operator==(const RunningAverage&, const RunningAverage&) = default;
};

struct WeightState {
  std::variant<ScalarWeights, WeightNet> repr;
  RunningAverage average;

  bool is_net() const { return std::holds_alternative<WeightNet>(repr); }
  friend bool operator==(const WeightState&, const WeightState&) = default;
};

WeightState make_scalar_weights(std::size_t n_train, double init, std::size_t s_avg);
// Zero affine weights and bias logit(init), so every example starts at `init`.
WeightState make_weight_net(std::size_t embedding_width, std::size_t num_classes,
                            bool use_labels, double init, std::size_t s_avg);

struct WeightQuery {
  std::vector<std::size_t> ids;      // rows of the training set
  Matrix embeddings;                 // one row per id
  std::optional<Matrix> label_onehot;
};

Matrix one_hot(std::span<const int> labels, std::size_t num_classes);

// Rows fed to the weight network: embedding, then one-hot label if enabled.
Matrix weight_net_inputs(const WeightNet& net, const WeightQuery& query);

std::vector<double> weights_for_batch(const WeightState& state, const WeightQuery& query);

/// Weights for points the state was not trained on. Only a weight network
/// generalizes; scalar weights throw UnsupportedError.
std::vector<double> score_new_examples(const WeightState& state, const WeightQuery& query);

}  // namespace bads
