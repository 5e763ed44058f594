#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bads/engine.hpp"

namespace bads {

/// Scalar mean theta under the loss (z - theta)^2 / 2, with one weight per
/// train value. Small enough to tabulate the joint posterior on a grid.
struct MicroModel {
  std::vector<double> train = {1.0, -1.0};  // at most 2 values
  std::vector<double> meta = std::vector<double>(10, 0.0);
  double lambda = 1.0;  // prior precision of theta
  double sigma = 0.1;
  double beta = 0.5;

  void validate() const;
  // One-layer network with no inputs: the bias is theta.
  ModelParams params(double theta) const;
  Batch train_batch() const;
  Batch meta_batch() const;
  SgldConfig sgld(double eta, double noise_scale) const;
};

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t cells = 64;

  double width() const { return (hi - lo) / static_cast<double>(cells); }
  double center(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * width(); }
};

/// Cell masses over (theta, w_1, ..., w_n), row-major with theta outermost.
struct GridPosterior {
  std::vector<Axis> axes;
  std::vector<double> mass;

  std::size_t dims() const { return axes.size(); }
  std::vector<double> marginal(std::size_t axis) const;
  double marginal_mean(std::size_t axis) const;
  double marginal_var(std::size_t axis) const;
};

/// Tabulates the normalized posterior. Weights live on [0, 1]; the theta
/// range covers the conditional mean for every weight corner +- 8 sd.
/// The parallel and serial versions give the same masses.
GridPosterior grid_posterior(const MicroModel& model, std::size_t resolution);
GridPosterior grid_posterior_serial(const MicroModel& model, std::size_t resolution);

struct Sample {
  double theta = 0.0;
  std::vector<double> w;
};

struct ChainConfig {
  double eta = 1e-3;
  double noise_scale = 1.0;
  std::uint64_t seed = 0;
  double theta0 = 0.0;
  double w0 = 0.5;
};

/// Runs the training updates full-batch on the micro-model and keeps every
/// `thin`-th iterate after `burn_in` steps.
std::vector<Sample> sgld_sample_chain(const MicroModel& model, const ChainConfig& cfg,
                                      std::size_t n_steps, std::size_t burn_in, std::size_t thin);

struct TvReport {
  std::vector<double> per_axis;
  double max = 0.0;
};

/// Half L1 distance between sample histograms and the oracle, per 1-D
/// marginal. Samples outside an axis range count as unmatched mass.
TvReport tv_distance(const std::vector<Sample>& samples, const GridPosterior& oracle);

// Draws from the oracle's marginals by inverse CDF, uniform within a cell.
std::vector<Sample> sample_oracle_marginals(const GridPosterior& oracle, std::size_t n, Rng& rng);

struct VerifyConfig {
  std::vector<double> etas = {1e-2, 3e-3, 1e-3};
  std::size_t steps = 200000;
  double burn_in_fraction = 0.1;
  std::size_t thin = 10;
  std::size_t resolution = 64;
  std::uint64_t seed = 0;
  double tv_tolerance = 0.1;
  double monotone_band = 0.02;
};

struct VerifyReport {
  MicroModel model;
  VerifyConfig config;
  std::vector<TvReport> tv;  // one per eta
  std::vector<std::size_t> samples;
  std::vector<double> oracle_means;
  std::vector<std::vector<double>> chain_means;
  bool tv_ok = false;        // smallest eta within tolerance
  bool monotone_ok = false;  // tv does not grow as eta shrinks, up to the band
  bool passed() const { return tv_ok && monotone_ok; }
};

VerifyReport verify_posterior(const MicroModel& model, const VerifyConfig& cfg);
void write_report_json(const VerifyReport& report, const std::filesystem::path& file);

}  // namespace bads
