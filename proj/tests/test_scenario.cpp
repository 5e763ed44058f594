#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "bads/baselines.hpp"
#include "bads/errors.hpp"
#include "bads/harness.hpp"
#include "bads/scenario.hpp"

using namespace bads;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("bads_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void check_invariants(const Scenario& s) {
  for (const Split* split : {&s.train, &s.meta, &s.test}) {
    REQUIRE(split->labels.size() == split->size());
    REQUIRE(split->tags.size() == split->size());
    std::size_t total = 0;
    for (const auto& [tag, n] : tag_counts(*split)) total += n;
    CHECK(total == split->size());
  }
  for (const auto& [tag, n] : tag_counts(s.train)) CHECK(s.tag_legend.count(tag) == 1);
  // Balanced meta labels.
  std::map<int, std::size_t> meta_labels;
  for (int y : s.meta.labels) ++meta_labels[y];
  for (const auto& [y, n] : meta_labels) CHECK(n == meta_labels.begin()->second);
  // No train row reappears in meta.
  std::set<std::vector<double>> rows;
  for (std::size_t i = 0; i < s.train.size(); ++i) {
    auto r = s.train.features.row(i);
    rows.emplace(r.begin(), r.end());
  }
  for (std::size_t i = 0; i < s.meta.size(); ++i) {
    auto r = s.meta.features.row(i);
    CHECK(rows.count(std::vector<double>(r.begin(), r.end())) == 0);
  }
}

// Accuracy of the nearest-class-mean rule with means taken from `split` itself.
double nearest_mean_accuracy(const Split& split, std::size_t classes) {
  const std::size_t d = split.features.cols();
  std::vector<std::vector<double>> mean(classes, std::vector<double>(d, 0.0));
  std::vector<double> count(classes, 0.0);
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto c = static_cast<std::size_t>(split.labels[i]);
    for (std::size_t k = 0; k < d; ++k) mean[c][k] += split.features(i, k);
    count[c] += 1;
  }
  for (std::size_t c = 0; c < classes; ++c) {
    for (double& v : mean[c]) v /= count[c];
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < split.size(); ++i) {
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t c = 0; c < classes; ++c) {
      double dist = 0;
      for (std::size_t k = 0; k < d; ++k) dist += std::pow(split.features(i, k) - mean[c][k], 2);
      if (dist < best_d) {
        best_d = dist;
        best = c;
      }
    }
    correct += best == static_cast<std::size_t>(split.labels[i]);
  }
  return static_cast<double>(correct) / static_cast<double>(split.size());
}

}  // namespace

TEST_CASE("imbalanced scenario") {
  ImbalanceSpec spec;
  const Scenario s = gen_imbalanced(spec);
  check_invariants(s);
  CHECK(s.binary);
  CHECK(tag_counts(s.train).at(0) == 995);
  CHECK(tag_counts(s.train).at(1) == 5);
  CHECK(s.meta.size() == 10);
  CHECK(s.test.size() == 2000);
  for (std::size_t i = 0; i < s.train.size(); ++i) CHECK(s.train.labels[i] == s.train.tags[i]);
  CHECK(gen_imbalanced(spec) == s);
  spec.seed = 1;
  CHECK(!(gen_imbalanced(spec) == s));

  spec.n_major = 50;
  spec.n_minor = 50;
  const Scenario even = gen_imbalanced(spec);
  CHECK(tag_counts(even.train).at(0) == 50);
  CHECK(tag_counts(even.train).at(1) == 50);

  for (auto mutate : {+[](ImbalanceSpec& p) { p.n_minor = 0; }, +[](ImbalanceSpec& p) { p.n_meta_per_class = 0; },
                      +[](ImbalanceSpec& p) { p.dim = 1; }, +[](ImbalanceSpec& p) { p.separation = 0; }}) {
    ImbalanceSpec bad;
    mutate(bad);
    CHECK_THROWS_AS(gen_imbalanced(bad), ValidationError);
  }
}

TEST_CASE("six-sigma separation is linearly learnable") {
  ImbalanceSpec spec;
  spec.separation = 6.0;
  spec.n_test = 4000;
  const Scenario s = gen_imbalanced(spec);
  // Bayes rate is Phi(3) = 0.99865.
  CHECK(nearest_mean_accuracy(s.test, 2) >= 0.99);
}

TEST_CASE("label-noise scenario") {
  LabelNoiseSpec spec;
  const Scenario s = gen_label_noise(spec);
  check_invariants(s);
  CHECK(tag_counts(s.train).at(1) == 2000);
  CHECK(tag_counts(s.train).at(0) == 2000);
  for (int t : s.meta.tags) CHECK(t == 0);
  CHECK(s.meta.size() == 100);

  LabelNoiseSpec clean_spec = spec;
  clean_spec.noise_rate = 0.0;
  const Scenario clean = gen_label_noise(clean_spec);
  CHECK(tag_counts(clean.train).count(1) == 0);
  CHECK(clean.train.features == s.train.features);

  // Noisy rows differ from the truth; flip offsets are uniform over 1..K-1.
  std::vector<double> offsets(spec.num_classes, 0.0);
  for (std::size_t i = 0; i < s.train.size(); ++i) {
    const int truth = clean.train.labels[i];
    if (s.train.tags[i] == 0) {
      CHECK(s.train.labels[i] == truth);
    } else {
      REQUIRE(s.train.labels[i] != truth);
      offsets[(s.train.labels[i] - truth + 10) % 10] += 1;
    }
  }
  const double expected = 2000.0 / 9.0;
  double chi2 = 0;
  for (std::size_t k = 1; k < offsets.size(); ++k) chi2 += std::pow(offsets[k] - expected, 2) / expected;
  CHECK(chi2 < 26.12);  // chi-square, 8 dof, p = 0.001

  spec.mode = NoiseMode::Asymmetric;
  const Scenario asym = gen_label_noise(spec);
  for (std::size_t i = 0; i < asym.train.size(); ++i) {
    if (asym.train.tags[i] == 1) CHECK(asym.train.labels[i] == (clean.train.labels[i] + 1) % 10);
  }

  spec.noise_rate = 1.0;
  CHECK_THROWS_AS(gen_label_noise(spec), ValidationError);
  CHECK_THROWS_AS(parse_noise_mode("sideways"), ValidationError);
}

TEST_CASE("domain-mixture scenario") {
  DomainSpec spec;
  const Scenario s = gen_domain_mixture(spec);
  check_invariants(s);
  CHECK(tag_counts(s.train).at(0) == 500);
  CHECK(tag_counts(s.train).at(1) == 500);
  CHECK(s.meta.size() == 30);
  CHECK(s.tag_legend.at(0) == "aligned");
  CHECK(s.tag_legend.at(1) == "off");

  DomainSpec one = spec;
  one.domains_train = 1;
  CHECK_THROWS_AS(gen_domain_mixture(one), ValidationError);
  DomainSpec none = spec;
  none.domains_meta = 0;
  CHECK_THROWS_AS(gen_domain_mixture(none), ValidationError);

  // Zero rotation: both train domains share the target plane; tags stay distinct.
  DomainSpec flat = spec;
  flat.rotation = 0.0;
  const Scenario f = gen_domain_mixture(flat);
  CHECK(tag_counts(f.train).size() == 2);
  double mean_gap = 0;
  for (std::size_t k = 0; k < 2; ++k) {
    double m[2] = {0, 0};
    for (std::size_t i = 0; i < f.train.size(); ++i) {
      if (f.train.labels[i] == 0) m[f.train.tags[i]] += f.train.features(i, k) / 167.0;
    }
    mean_gap = std::max(mean_gap, std::abs(m[0] - m[1]));
  }
  CHECK(mean_gap < 0.3);
}

TEST_CASE("aligned domain trains a better target model than the off domain") {
  RunConfig base = preset_config("webnlg");
  base.method = Method::Mixing;
  base.sgld.steps = 1500;
  const Scenario full = build_scenario(base);
  // Accuracy after plain SGD on one domain at a time, same budget and init.
  auto train_on = [&](int tag) {
    Scenario s = full;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < full.train.size(); ++i) {
      if (full.train.tags[i] == tag) keep.push_back(i);
    }
    s.train = Split{gather_rows(full.train.features, keep), {}, {}};
    for (std::size_t i : keep) {
      s.train.labels.push_back(full.train.labels[i]);
      s.train.tags.push_back(full.train.tags[i]);
    }
    ModelParams p = initial_params(base, s);
    BatchStream stream(iota_ids(s.train.size()), 50, Rng(9));
    for (std::size_t k = 0; k < base.sgld.steps; ++k) p = sgd_step(p, s.train.batch(stream.next()), 0.1, 0.0);
    return evaluate(p, s.test).accuracy;
  };
  const double aligned = train_on(0);
  const double off = train_on(1);
  INFO("aligned " << aligned << " off " << off);
  CHECK(aligned > off);
}

TEST_CASE("scenario CSV round trip") {
  for (const Scenario& s : {gen_imbalanced({}), gen_label_noise({}), gen_domain_mixture({})}) {
    const auto dir = scratch("roundtrip_" + s.kind);
    write_scenario(s, dir);
    CHECK(read_scenario(dir) == s);
  }
  const auto dir = scratch("roundtrip_bad");
  CHECK_THROWS_AS(read_scenario(dir), ValidationError);
  std::ofstream(dir / "x.csv") << "id,tag,label,f0\n0,0,1\n";
  CHECK_THROWS_AS(read_split_csv(dir / "x.csv"), ValidationError);
}
