#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "bads/engine.hpp"
#include "bads/nn.hpp"
#include "bads/rng.hpp"

namespace bads::testing {

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = scale * rng.normal();
  return m;
}

inline std::vector<int> random_labels(Rng& rng, std::size_t n, std::size_t classes) {
  std::vector<int> out(n);
  for (int& y : out) y = static_cast<int>(rng.below(classes));
  return out;
}

inline Batch make_batch(Matrix x, std::vector<int> labels) {
  Batch b;
  b.ids.resize(x.rows());
  for (std::size_t i = 0; i < b.ids.size(); ++i) b.ids[i] = i;
  b.features = std::move(x);
  b.labels = std::move(labels);
  return b;
}

// Central difference of f along every flat coordinate of params.
inline std::vector<double> numeric_grad(const ModelParams& params,
                                        const std::function<double(const ModelParams&)>& f,
                                        double h = 1e-6) {
  std::vector<double> flat = flatten(params);
  std::vector<double> out(flat.size());
  ModelParams probe = params;
  for (std::size_t k = 0; k < flat.size(); ++k) {
    const double keep = flat[k];
    flat[k] = keep + h;
    assign_flat(probe, flat);
    const double up = f(probe);
    flat[k] = keep - h;
    assign_flat(probe, flat);
    const double down = f(probe);
    flat[k] = keep;
    out[k] = (up - down) / (2 * h);
  }
  return out;
}

// max_k |a_k - b_k| / max(1, |a|_inf, |b|_inf)
inline double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, scale = 1.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff = std::max(diff, std::abs(a[k] - b[k]));
    scale = std::max({scale, std::abs(a[k]), std::abs(b[k])});
  }
  return diff / scale;
}

}  // namespace bads::testing
