#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "bads/errors.hpp"
#include "bads/posterior_lab.hpp"

using namespace bads;

TEST_CASE("conjugate theta posterior without train values") {
  // Only the prior and one meta value: theta ~ N(z / (1 + lambda), 1 / (1 + lambda)).
  MicroModel m;
  m.train = {};
  m.meta = {1.7};
  m.lambda = 2.0;
  const GridPosterior g = grid_posterior(m, 256);
  REQUIRE(g.dims() == 1);
  CHECK(g.marginal_mean(0) == doctest::Approx(1.7 / 3.0).epsilon(1e-6));
  CHECK(g.marginal_var(0) == doctest::Approx(1.0 / 3.0).epsilon(2e-3));
}

TEST_CASE("mirrored train values give a symmetric posterior") {
  MicroModel m;  // train {1, -1}, meta all zero
  const GridPosterior g = grid_posterior(m, 64);
  CHECK(std::abs(g.marginal_mean(0)) < 1e-12);
  const auto w1 = g.marginal(1);
  const auto w2 = g.marginal(2);
  for (std::size_t i = 0; i < w1.size(); ++i) CHECK(w1[i] == doctest::Approx(w2[i]).epsilon(1e-10));
  const auto t = g.marginal(0);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == doctest::Approx(t[t.size() - 1 - i]).epsilon(1e-9));
}

TEST_CASE("grid refinement changes the moments little") {
  MicroModel m;
  m.train = {2.0, -0.5};
  m.meta = std::vector<double>(10, 0.3);
  const GridPosterior coarse = grid_posterior(m, 64);
  const GridPosterior fine = grid_posterior(m, 128);
  for (std::size_t a = 0; a < 3; ++a) {
    INFO("axis " << a);
    CHECK(std::abs(coarse.marginal_mean(a) - fine.marginal_mean(a)) < 1e-4);
  }
}

TEST_CASE("serial and parallel grids agree") {
  MicroModel m;
  m.train = {0.4, 1.2};
  const GridPosterior a = grid_posterior(m, 64);
  const GridPosterior b = grid_posterior_serial(m, 64);
  CHECK(a.mass == b.mass);
}

TEST_CASE("grid input errors") {
  MicroModel m;
  CHECK_THROWS_AS(grid_posterior(m, 32), ValidationError);
  m.train = {1, 2, 3};
  CHECK_THROWS_AS(grid_posterior(m, 64), ValidationError);
  m = MicroModel{};
  m.beta = 0.0;
  CHECK_THROWS_AS(grid_posterior(m, 64), ValidationError);
  m = MicroModel{};
  m.meta.clear();
  CHECK_THROWS_AS(grid_posterior(m, 64), ValidationError);
}

TEST_CASE("noise-free chain settles on a point") {
  MicroModel m;
  ChainConfig c;
  c.noise_scale = 0.0;
  c.eta = 1e-2;
  const auto samples = sgld_sample_chain(m, c, 20000, 15000, 10);
  REQUIRE(samples.size() == 500);
  for (const Sample& s : samples) {
    CHECK(s.theta == doctest::Approx(samples.front().theta).epsilon(1e-9));
    CHECK(s.w == samples.front().w);
  }
}

TEST_CASE("chain bookkeeping") {
  MicroModel m;
  ChainConfig c;
  const auto samples = sgld_sample_chain(m, c, 200000, 20000, 10);
  CHECK(samples.size() == 18000);
  CHECK(sgld_sample_chain(m, c, 3000, 0, 1)[1234].theta == sgld_sample_chain(m, c, 3000, 0, 1)[1234].theta);
  CHECK_THROWS_AS(sgld_sample_chain(m, c, 10, 10, 1), ValidationError);
  CHECK_THROWS_AS(sgld_sample_chain(m, c, 10, 0, 0), ValidationError);
}

TEST_CASE("tv distance of exact draws is small") {
  MicroModel m;
  const GridPosterior g = grid_posterior(m, 64);
  Rng rng(1);
  const auto draws = sample_oracle_marginals(g, 50000, rng);
  const TvReport tv = tv_distance(draws, g);
  CHECK(tv.per_axis.size() == 3);
  CHECK(tv.max <= 0.03);

  // All mass on one far cell is almost fully mismatched.
  std::vector<Sample> point(2000, Sample{g.axes[0].lo + 1e-9, {0.0005, 0.0005}});
  CHECK(tv_distance(point, g).max > 0.95);
  std::vector<Sample> outside(2000, Sample{g.axes[0].hi + 1.0, {0.5, 0.5}});
  CHECK(tv_distance(outside, g).per_axis[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(tv_distance(std::vector<Sample>(10), g), ValidationError);
}

TEST_CASE("verification report") {
  MicroModel m;
  VerifyConfig cfg;
  cfg.etas = {1e-2, 1e-3};
  cfg.steps = 100000;
  const VerifyReport r = verify_posterior(m, cfg);
  REQUIRE(r.tv.size() == 2);
  CHECK(r.samples[1] == 9000);
  CHECK(r.oracle_means.size() == 3);
  const auto file = std::filesystem::temp_directory_path() / "bads_report" / "posterior_report.json";
  write_report_json(r, file);
  const auto j = nlohmann::json::parse(std::ifstream(file));
  CHECK(j["runs"].size() == 2);
  CHECK(j["passed"].get<bool>() == r.passed());
  cfg.etas.clear();
  CHECK_THROWS_AS(verify_posterior(m, cfg), ValidationError);
}
