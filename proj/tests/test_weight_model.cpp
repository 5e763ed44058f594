#include <doctest.h>

#include <cmath>

#include "bads/engine.hpp"
#include "bads/errors.hpp"
#include "bads/harness.hpp"
#include "bads/weight_model.hpp"
#include "helpers.hpp"

using namespace bads;
using testing::random_matrix;

namespace {

WeightQuery query_of(Matrix emb) {
  WeightQuery q;
  q.ids.resize(emb.rows());
  for (std::size_t i = 0; i < q.ids.size(); ++i) q.ids[i] = i;
  q.embeddings = std::move(emb);
  return q;
}

}  // namespace

TEST_CASE("zero weight network gives one half") {
  Rng rng(1);
  WeightState s = make_weight_net(4, 3, false, 0.5, 10);
  for (double w : weights_for_batch(s, query_of(random_matrix(rng, 7, 4)))) CHECK(w == 0.5);
}

TEST_CASE("init value is reproduced by both variants") {
  Rng rng(2);
  const WeightState net = make_weight_net(3, 2, false, 0.2, 10);
  for (double w : weights_for_batch(net, query_of(random_matrix(rng, 5, 3)))) {
    CHECK(w == doctest::Approx(0.2).epsilon(1e-14));
  }
  const WeightState scalar = make_scalar_weights(5, 0.2, 10);
  WeightQuery q = query_of(Matrix(5, 0));
  for (double w : weights_for_batch(scalar, q)) CHECK(w == 0.2);
  CHECK_THROWS_AS(make_scalar_weights(5, 1.5, 10), ValidationError);
  CHECK_THROWS_AS(make_weight_net(3, 2, false, 1.0, 10), ValidationError);
  CHECK_THROWS_AS(make_weight_net(3, 2, false, 0.5, 0), ValidationError);
}

TEST_CASE("scalar lookup returns stored values") {
  WeightState s = make_scalar_weights(6, 0.0, 10);
  auto& w = std::get<ScalarWeights>(s.repr).w;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.1 * static_cast<double>(i);
  WeightQuery q;
  q.ids = {5, 0, 3};
  const auto out = weights_for_batch(s, q);
  CHECK(out == std::vector<double>{w[5], w[0], w[3]});
  q.ids = {6};
  CHECK_THROWS_AS(weights_for_batch(s, q), ValidationError);
}

TEST_CASE("weight network matches a straight-line sigmoid-affine") {
  Rng rng(3);
  WeightState s = make_weight_net(3, 4, true, 0.5, 10);
  auto& net = std::get<WeightNet>(s.repr);
  for (double& v : net.affine.weight.values()) v = rng.normal();
  net.affine.bias(0, 0) = -0.4;
  const Matrix emb = random_matrix(rng, 6, 3);
  WeightQuery q = query_of(emb);
  const std::vector<int> labels{0, 3, 1, 2, 2, 0};
  q.label_onehot = one_hot(labels, 4);
  const auto out = weights_for_batch(s, q);
  for (std::size_t i = 0; i < 6; ++i) {
    double z = net.affine.bias(0, 0);
    for (std::size_t k = 0; k < 3; ++k) z += emb(i, k) * net.affine.weight(k, 0);
    z += net.affine.weight(3 + static_cast<std::size_t>(labels[i]), 0);
    CHECK(std::abs(out[i] - 1.0 / (1.0 + std::exp(-z))) < 1e-12);
    CHECK((out[i] >= 0.0 && out[i] <= 1.0));
  }
}

TEST_CASE("weight network input errors") {
  Rng rng(4);
  WeightState s = make_weight_net(3, 2, true, 0.5, 10);
  WeightQuery q = query_of(random_matrix(rng, 4, 3));
  CHECK_THROWS_AS(weights_for_batch(s, q), ValidationError);  // no labels
  WeightQuery empty;
  empty.ids = {0, 1};
  CHECK_THROWS_AS(weights_for_batch(s, empty), ValidationError);
  WeightQuery wide = query_of(random_matrix(rng, 4, 5));
  wide.label_onehot = one_hot(std::vector<int>{0, 1, 0, 1}, 2);
  CHECK_THROWS_AS(weights_for_batch(s, wide), ShapeError);
  CHECK_THROWS_AS(one_hot(std::vector<int>{2}, 2), ValidationError);
}

TEST_CASE("scoring new examples") {
  Rng rng(5);
  WeightState s = make_weight_net(2, 2, false, 0.5, 10);
  auto& net = std::get<WeightNet>(s.repr);
  net.affine.weight(0, 0) = 1.0;
  net.affine.weight(1, 0) = -2.0;
  const WeightState before = s;
  WeightQuery q = query_of(random_matrix(rng, 5, 2));
  CHECK(score_new_examples(s, q) == weights_for_batch(s, q));
  CHECK(s == before);

  // Equal pre-activations give equal weights.
  WeightQuery pair = query_of(Matrix(2, 2, {2.0, 0.5, 0.0, -0.5}));
  const auto w = score_new_examples(s, pair);
  CHECK(w[0] == w[1]);

  CHECK_THROWS_AS(score_new_examples(make_scalar_weights(3, 0.5, 10), q), UnsupportedError);
}

TEST_CASE("weight range under noisy updates") {
  Rng rng(6);
  ModelParams p = init_mlp({3, {4}, 2, Activation::Tanh, LossKind::SoftmaxCrossEntropy}, rng);
  Batch b = testing::make_batch(random_matrix(rng, 8, 3), testing::random_labels(rng, 8, 2));
  SgldConfig cfg;
  cfg.n_t = 8;
  cfg.n_m = 8;
  cfg.batch_t = 8;
  cfg.batch_m = 8;
  cfg.eta_w = 0.5;
  cfg.noise_scale = 3.0;
  WeightState s = make_weight_net(4, 2, true, 0.5, 3);
  for (int k = 0; k < 100; ++k) {
    s = sgld_step_w(p, s, b, cfg, rng);
    const auto w = weights_for_batch(s, make_weight_query(s, b, forward(p, b.features)));
    for (double v : w) REQUIRE((v >= 0.0 && v <= 1.0));
    REQUIRE((s.average.value >= 0.0 && s.average.value <= 1.0));
    REQUIRE(s.average.recent.size() <= 3);
  }
}

TEST_CASE("held-out minority points score higher after training") {
  RunConfig cfg = preset_config("mnist");
  cfg.seed = 3;
  const RunResult r = run_experiment(cfg);
  REQUIRE(r.weights.has_value());
  const Split& test = r.scenario.test;
  const ForwardTrace trace = forward(r.params, test.features);
  WeightQuery q;
  q.ids.resize(test.size());
  for (std::size_t i = 0; i < q.ids.size(); ++i) q.ids[i] = i;
  q.embeddings = trace.embedding();
  const auto w = score_new_examples(*r.weights, q);
  double sum[2] = {0, 0};
  double count[2] = {0, 0};
  for (std::size_t i = 0; i < w.size(); ++i) {
    const int label = test.labels[i];
    sum[label] += w[i];
    count[label] += 1;
  }
  // Label 1 is the minority class of the train split.
  CHECK(sum[1] / count[1] > sum[0] / count[0]);
}
