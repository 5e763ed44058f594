#include "bads/posterior_lab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <fmt/format.h>
#include <json.hpp>

#include "bads/errors.hpp"

namespace bads {
namespace {

Batch values_batch(const std::vector<double>& values) {
  Batch b;
  b.features = Matrix(values.size(), 0);
  b.targets = values;
  b.ids.resize(values.size());
  std::iota(b.ids.begin(), b.ids.end(), std::size_t{0});
  return b;
}

std::vector<Axis> grid_axes(const MicroModel& model, std::size_t resolution) {
  if (resolution < 64) throw ValidationError("grid resolution must be >= 64 per axis");
  const double meta_sum = std::accumulate(model.meta.begin(), model.meta.end(), 0.0);
  const double base_precision = model.lambda + static_cast<double>(model.meta.size());
  const std::size_t n = model.train.size();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t corner = 0; corner < (std::size_t{1} << n); ++corner) {
    double num = meta_sum, den = base_precision;
    for (std::size_t i = 0; i < n; ++i) {
      if (corner >> i & 1) {
        num += model.train[i];
        den += 1.0;
      }
    }
    lo = std::min(lo, num / den);
    hi = std::max(hi, num / den);
  }
  const double sd = 1.0 / std::sqrt(base_precision);
  std::vector<Axis> axes{{lo - 8.0 * sd, hi + 8.0 * sd, resolution}};
  for (std::size_t i = 0; i < n; ++i) axes.push_back({0.0, 1.0, resolution});
  return axes;
}

// Log-posterior of every cell in theta slice t.
void fill_log_slice(const MicroModel& model, const std::vector<Axis>& axes, std::size_t t,
                    std::vector<double>& out) {
  const Batch train = model.train_batch();
  const Batch meta = model.meta_batch();
  const SgldConfig cfg = model.sgld(1e-3, 1.0);
  const std::size_t n = model.train.size();
  const std::size_t res = axes[0].cells;
  std::size_t per_theta = 1;
  for (std::size_t i = 0; i < n; ++i) per_theta *= res;
  const ModelParams params = model.params(axes[0].center(t));
  WeightState ws = make_scalar_weights(n, 0.5, 1);
  auto& w = std::get<ScalarWeights>(ws.repr).w;
  for (std::size_t cell = 0; cell < per_theta; ++cell) {
    std::size_t rest = cell;
    for (std::size_t i = n; i-- > 0;) {
      w[i] = axes[i + 1].center(rest % res);
      rest /= res;
    }
    out[t * per_theta + cell] = assemble_log_posterior(params, ws, train, meta, cfg);
  }
}

GridPosterior normalize(std::vector<Axis> axes, std::vector<double> log_mass) {
  const double top = *std::max_element(log_mass.begin(), log_mass.end());
  if (!std::isfinite(top)) throw ValidationError("log-posterior is not finite on the grid");
  double total = 0.0;
  for (double& v : log_mass) {
    v = std::exp(v - top);
    total += v;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw ValidationError("grid posterior has no mass; check resolution and bounds");
  }
  for (double& v : log_mass) v /= total;
  return GridPosterior{std::move(axes), std::move(log_mass)};
}

std::size_t cell_count(const std::vector<Axis>& axes) {
  std::size_t c = 1;
  for (const Axis& a : axes) c *= a.cells;
  return c;
}

}  // namespace

void MicroModel::validate() const {
  if (train.size() > 2) throw ValidationError("micro model takes at most 2 train values");
  if (meta.empty()) throw ValidationError("micro model needs meta values");
  if (!(lambda > 0.0) || !(sigma > 0.0) || !(beta > 0.0 && beta <= 1.0)) {
    throw ValidationError("micro model needs lambda > 0, sigma > 0, beta in (0, 1]");
  }
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(train) || !finite(meta)) throw ValidationError("micro model values must be finite");
}

ModelParams MicroModel::params(double theta) const {
  ModelParams p;
  p.layers.push_back(Layer{Matrix(0, 1), Matrix(1, 1, theta)});
  p.loss = LossKind::Gaussian;
  return p;
}

Batch MicroModel::train_batch() const { return values_batch(train); }
Batch MicroModel::meta_batch() const { return values_batch(meta); }

SgldConfig MicroModel::sgld(double eta, double noise_scale) const {
  SgldConfig c;
  c.eta = eta;
  c.eta_w = eta;
  c.sigma = sigma;
  c.beta = beta;
  c.weight_decay = lambda;
  c.n_t = train.size();
  c.n_m = meta.size();
  c.batch_t = train.size();
  c.batch_m = meta.size();
  c.s_avg = 1;
  c.noise_scale = noise_scale;
  return c;
}

std::vector<double> GridPosterior::marginal(std::size_t axis) const {
  if (axis >= axes.size()) throw ValidationError("axis out of range");
  std::size_t inner = 1;
  for (std::size_t a = axis + 1; a < axes.size(); ++a) inner *= axes[a].cells;
  const std::size_t cells = axes[axis].cells;
  std::vector<double> out(cells, 0.0);
  for (std::size_t k = 0; k < mass.size(); ++k) out[(k / inner) % cells] += mass[k];
  return out;
}

double GridPosterior::marginal_mean(std::size_t axis) const {
  const auto m = marginal(axis);
  double mean = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) mean += m[i] * axes[axis].center(i);
  return mean;
}

double GridPosterior::marginal_var(std::size_t axis) const {
  const auto m = marginal(axis);
  const double mean = marginal_mean(axis);
  double var = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double d = axes[axis].center(i) - mean;
    var += m[i] * d * d;
  }
  return var;
}

GridPosterior grid_posterior_serial(const MicroModel& model, std::size_t resolution) {
  model.validate();
  auto axes = grid_axes(model, resolution);
  std::vector<double> log_mass(cell_count(axes));
  for (std::size_t t = 0; t < axes[0].cells; ++t) fill_log_slice(model, axes, t, log_mass);
  return normalize(std::move(axes), std::move(log_mass));
}

GridPosterior grid_posterior(const MicroModel& model, std::size_t resolution) {
  model.validate();
  auto axes = grid_axes(model, resolution);
  std::vector<double> log_mass(cell_count(axes));
  const auto slices = static_cast<std::ptrdiff_t>(axes[0].cells);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < slices; ++t) {
    fill_log_slice(model, axes, static_cast<std::size_t>(t), log_mass);
  }
  return normalize(std::move(axes), std::move(log_mass));
}

std::vector<Sample> sgld_sample_chain(const MicroModel& model, const ChainConfig& cfg,
                                      std::size_t n_steps, std::size_t burn_in, std::size_t thin) {
  model.validate();
  if (model.train.empty()) throw ValidationError("chain needs at least one train value");
  if (n_steps <= burn_in) throw ValidationError("n_steps must exceed burn_in");
  if (thin < 1) throw ValidationError("thin must be >= 1");
  const SgldConfig sgld = model.sgld(cfg.eta, cfg.noise_scale);
  sgld.validate();
  const Batch train = model.train_batch();
  const Batch meta = model.meta_batch();
  const Rng root(cfg.seed);
  Rng theta_rng = root.substream(streams::kThetaNoise);
  Rng w_rng = root.substream(streams::kWeightNoise);
  ModelParams params = model.params(cfg.theta0);
  WeightState ws = make_scalar_weights(model.train.size(), cfg.w0, sgld.s_avg);

  std::vector<Sample> samples;
  samples.reserve((n_steps - burn_in) / thin + 1);
  for (std::size_t step = 0; step < n_steps; ++step) {
    try {
      ModelParams next = sgld_step_theta(params, ws, train, meta, sgld, theta_rng);
      ws = sgld_step_w(params, ws, train, sgld, w_rng);
      params = std::move(next);
    } catch (const DivergenceError& e) {
      throw DivergenceError(fmt::format("{} at chain step {}", e.what(), step));
    }
    if (step >= burn_in && (step - burn_in) % thin == 0) {
      samples.push_back(Sample{params.layers[0].bias(0, 0), std::get<ScalarWeights>(ws.repr).w});
    }
  }
  return samples;
}

TvReport tv_distance(const std::vector<Sample>& samples, const GridPosterior& oracle) {
  if (samples.size() < 1000) throw ValidationError("tv_distance needs at least 1000 samples");
  TvReport report;
  const double n = static_cast<double>(samples.size());
  for (std::size_t a = 0; a < oracle.dims(); ++a) {
    const Axis& axis = oracle.axes[a];
    std::vector<double> hist(axis.cells, 0.0);
    double outside = 0.0;
    for (const Sample& s : samples) {
      const double x = a == 0 ? s.theta : s.w.at(a - 1);
      if (x < axis.lo || x > axis.hi || !std::isfinite(x)) {
        outside += 1.0;
        continue;
      }
      const auto idx = std::min(axis.cells - 1, static_cast<std::size_t>((x - axis.lo) / axis.width()));
      hist[idx] += 1.0;
    }
    const auto m = oracle.marginal(a);
    double l1 = outside / n;
    for (std::size_t i = 0; i < axis.cells; ++i) l1 += std::abs(hist[i] / n - m[i]);
    report.per_axis.push_back(0.5 * l1);
  }
  report.max = *std::max_element(report.per_axis.begin(), report.per_axis.end());
  return report;
}

std::vector<Sample> sample_oracle_marginals(const GridPosterior& oracle, std::size_t n, Rng& rng) {
  std::vector<Sample> out(n);
  for (std::size_t a = 0; a < oracle.dims(); ++a) {
    const auto m = oracle.marginal(a);
    std::vector<double> cdf(m.size());
    std::partial_sum(m.begin(), m.end(), cdf.begin());
    const Axis& axis = oracle.axes[a];
    for (Sample& s : out) {
      const double u = rng.uniform() * cdf.back();
      const auto idx = std::min<std::size_t>(
          m.size() - 1, static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()));
      const double x = axis.lo + (static_cast<double>(idx) + rng.uniform()) * axis.width();
      if (a == 0) {
        s.theta = x;
      } else {
        s.w.push_back(x);
      }
    }
  }
  return out;
}

VerifyReport verify_posterior(const MicroModel& model, const VerifyConfig& cfg) {
  if (cfg.etas.empty()) throw ValidationError("verify-posterior needs at least one eta");
  if (!(cfg.burn_in_fraction >= 0.0 && cfg.burn_in_fraction < 1.0)) {
    throw ValidationError("burn_in_fraction must lie in [0, 1)");
  }
  VerifyReport report{model, cfg, {}, {}, {}, {}, false, false};
  const GridPosterior oracle = grid_posterior(model, cfg.resolution);
  for (std::size_t a = 0; a < oracle.dims(); ++a) report.oracle_means.push_back(oracle.marginal_mean(a));
  const auto burn = static_cast<std::size_t>(cfg.burn_in_fraction * static_cast<double>(cfg.steps));
  report.tv.resize(cfg.etas.size());
  report.samples.resize(cfg.etas.size());
  report.chain_means.resize(cfg.etas.size());
  std::vector<std::exception_ptr> errors(cfg.etas.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < cfg.etas.size(); ++k) {
    try {
      ChainConfig chain;
      chain.eta = cfg.etas[k];
      chain.seed = cfg.seed;
      chain.theta0 = oracle.marginal_mean(0);
      const auto samples = sgld_sample_chain(model, chain, cfg.steps, burn, cfg.thin);
      report.tv[k] = tv_distance(samples, oracle);
      report.samples[k] = samples.size();
      std::vector<double> means(oracle.dims(), 0.0);
      for (const Sample& s : samples) {
        means[0] += s.theta;
        for (std::size_t i = 0; i < s.w.size(); ++i) means[i + 1] += s.w[i];
      }
      for (double& m : means) m /= static_cast<double>(samples.size());
      report.chain_means[k] = means;
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  // etas are visited in the given order; tolerance applies to the smallest.
  std::size_t smallest = 0;
  for (std::size_t k = 1; k < cfg.etas.size(); ++k) {
    if (cfg.etas[k] < cfg.etas[smallest]) smallest = k;
  }
  report.tv_ok = report.tv[smallest].max <= cfg.tv_tolerance;
  std::vector<std::size_t> order(cfg.etas.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return cfg.etas[a] > cfg.etas[b]; });
  report.monotone_ok = true;
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (report.tv[order[i]].max > report.tv[order[i - 1]].max + cfg.monotone_band) {
      report.monotone_ok = false;
    }
  }
  return report;
}

void write_report_json(const VerifyReport& report, const std::filesystem::path& file) {
  nlohmann::ordered_json j;
  j["model"] = {{"train", report.model.train},
                {"meta", report.model.meta},
                {"lambda", report.model.lambda},
                {"sigma", report.model.sigma},
                {"beta", report.model.beta}};
  j["config"] = {{"steps", report.config.steps},
                 {"burn_in_fraction", report.config.burn_in_fraction},
                 {"thin", report.config.thin},
                 {"resolution", report.config.resolution},
                 {"seed", report.config.seed},
                 {"tv_tolerance", report.config.tv_tolerance},
                 {"monotone_band", report.config.monotone_band}};
  j["oracle_means"] = report.oracle_means;
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < report.tv.size(); ++k) {
    runs.push_back({{"eta", report.config.etas[k]},
                    {"samples", report.samples[k]},
                    {"tv_per_axis", report.tv[k].per_axis},
                    {"tv_max", report.tv[k].max},
                    {"chain_means", report.chain_means[k]}});
  }
  j["runs"] = runs;
  j["tv_ok"] = report.tv_ok;
  j["monotone_ok"] = report.monotone_ok;
  j["passed"] = report.passed();
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream(file, std::ios::binary) << j.dump(2) << '\n';
}

}  // namespace bads
