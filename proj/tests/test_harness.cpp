#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "bads/errors.hpp"
#include "bads/harness.hpp"
#include "helpers.hpp"

using namespace bads;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("bads_harness_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig small_run() {
  RunConfig cfg = preset_config("mnist");
  cfg.sgld.steps = 60;
  cfg.eval_every = 20;
  return cfg;
}

// Every opening tag is closed in order; self-closing tags are skipped.
bool tags_balanced(const std::string& xml) {
  std::vector<std::string> open;
  const std::regex tag(R"(<(/?)([a-zA-Z][\w:-]*)[^>]*?(/?)>)");
  for (auto it = std::sregex_iterator(xml.begin(), xml.end(), tag); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    if (m[3].length() > 0) continue;
    if (m[1].length() == 0) {
      open.push_back(m[2]);
    } else {
      if (open.empty() || open.back() != m[2]) return false;
      open.pop_back();
    }
  }
  return open.empty();
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("repeated runs write identical logs") {
  RunConfig cfg = small_run();
  cfg.out_dir = scratch("det_a");
  run_experiment(cfg);
  RunConfig again = cfg;
  again.out_dir = scratch("det_b");
  run_experiment(again);
  for (const char* name : {"log.csv", "weights_final.csv", "model_final.json"}) {
    INFO(name);
    const std::string a = slurp(cfg.out_dir / name);
    CHECK(!a.empty());
    CHECK(a == slurp(again.out_dir / name));
  }
  CHECK(std::filesystem::exists(cfg.out_dir / "timing.csv"));
}

TEST_CASE("zero steps still writes every artifact") {
  for (Method m : {Method::BadsWeightNet, Method::BadsScalar, Method::Mixing}) {
    RunConfig cfg = small_run();
    cfg.method = m;
    cfg.sgld.steps = 0;
    cfg.out_dir = scratch("zero_" + to_string(m));
    const RunResult r = run_experiment(cfg);
    CHECK(r.params == r.initial);
    REQUIRE(r.log.rows.size() == 1);
    for (const char* name : {"log.csv", "weights_final.csv", "config_echo", "accuracy.svg"}) {
      CHECK(std::filesystem::exists(cfg.out_dir / name));
    }
    CHECK(read_model_json(cfg.out_dir / "model_final.json") == r.initial);
    if (is_bads(m)) {
      REQUIRE(r.final_weights.size() == r.scenario.train.size());
      for (double w : r.final_weights) CHECK(w == doctest::Approx(cfg.init_weight).epsilon(1e-12));
    }
  }
}

TEST_CASE("log file round trip") {
  RunConfig cfg = small_run();
  cfg.out_dir = scratch("logrt");
  const RunResult r = run_experiment(cfg);
  const TrainLog back = read_log_csv(cfg.out_dir / "log.csv");
  REQUIRE(back.rows.size() == r.log.rows.size());
  CHECK(back.tag_legend == r.log.tag_legend);
  for (std::size_t i = 0; i < back.rows.size(); ++i) {
    CHECK(back.rows[i].step == r.log.rows[i].step);
    CHECK(back.rows[i].test_acc.has_value() == r.log.rows[i].test_acc.has_value());
    if (r.log.rows[i].w_bar) CHECK(*back.rows[i].w_bar == doctest::Approx(*r.log.rows[i].w_bar));
  }
}

TEST_CASE("plots") {
  RunConfig cfg = small_run();
  const RunResult r = run_experiment(cfg);
  const auto dir = scratch("plots");
  const auto files = export_plots(r.log, dir);
  REQUIRE(files.size() == 2);
  const std::string weights = slurp(dir / "weights.svg");
  CHECK(tags_balanced(weights));
  CHECK(count_of(weights, "class=\"series\"") == 2);  // one per tag

  // A single logged point is drawn as a marker, not a line.
  TrainLog one;
  one.tag_legend = r.log.tag_legend;
  one.rows.push_back(r.log.rows.front());
  const auto one_dir = scratch("plots_one");
  export_plots(one, one_dir);
  const std::string acc = slurp(one_dir / "accuracy.svg");
  CHECK(tags_balanced(acc));
  CHECK(count_of(acc, "<circle") == 1);
  CHECK(count_of(acc, "<polyline") == 0);
}

TEST_CASE("sweep") {
  RunConfig cfg = small_run();
  cfg.sgld.steps = 20;
  cfg.out_dir = scratch("sweep");
  const auto rows = sweep(cfg, "sgld.beta", {"0.005", "0.5"});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].value == "0.005");
  CHECK(rows[1].test_acc.has_value());
  CHECK(std::filesystem::exists(cfg.out_dir / "summary.csv"));
  CHECK(count_of(slurp(cfg.out_dir / "summary.csv"), "\n") == 3);
  CHECK_THROWS_AS(sweep(cfg, "sgld.nothing", {"1"}), ValidationError);
  CHECK_THROWS_AS(sweep(cfg, "sgld.beta", {}), ValidationError);
  CHECK_THROWS_AS(sweep(cfg, "sgld.beta", {"0.1", "2"}), ValidationError);
}

TEST_CASE("evaluate") {
  // Linear softmax head reading the label straight off a one-hot input.
  ModelParams p;
  p.layers.push_back({Matrix(3, 3, {5, 0, 0, 0, 5, 0, 0, 0, 5}), Matrix(1, 3)});
  Split s;
  s.features = Matrix(6, 3);
  for (std::size_t i = 0; i < 6; ++i) {
    s.labels.push_back(static_cast<int>(i % 3));
    s.tags.push_back(0);
    s.features(i, i % 3) = 1.0;
  }
  CHECK(evaluate(p, s).accuracy == 1.0);

  // Random labels against a fixed predictor land near chance.
  Rng rng(3);
  Split noise;
  noise.features = testing::random_matrix(rng, 3000, 3);
  noise.labels = testing::random_labels(rng, 3000, 3);
  noise.tags.assign(3000, 0);
  CHECK(std::abs(evaluate(p, noise).accuracy - 1.0 / 3.0) < 0.04);

  s.labels[0] = 3;
  CHECK_THROWS_AS(evaluate(p, s), ValidationError);
  CHECK_THROWS_AS(evaluate(p, Split{}), ValidationError);
}

TEST_CASE("model JSON round trip") {
  Rng rng(8);
  const ModelParams p = init_mlp({4, {5, 3}, 2, Activation::Relu, LossKind::SoftmaxCrossEntropy}, rng);
  const auto file = std::filesystem::temp_directory_path() / "bads_model_rt.json";
  write_model_json(p, file);
  CHECK(read_model_json(file) == p);
  std::ofstream(file) << "{\"loss\": 3}";
  CHECK_THROWS_AS(read_model_json(file), ValidationError);
}

TEST_CASE("invalid configs are rejected before training") {
  RunConfig cfg = small_run();
  cfg.hidden.clear();
  CHECK_THROWS_AS(run_experiment(cfg), ValidationError);
  cfg = small_run();
  cfg.scenario.generator = "mystery";
  CHECK_THROWS_AS(run_experiment(cfg), ValidationError);
}

TEST_CASE("divergence keeps the partial log") {
  RunConfig cfg = small_run();
  cfg.sgld.eta = 1e6;
  cfg.out_dir = scratch("diverge");
  CHECK_THROWS_AS(run_experiment(cfg), DivergenceError);
  CHECK(std::filesystem::exists(cfg.out_dir / "log.csv"));
}
