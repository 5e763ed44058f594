#include <benchmark/benchmark.h>

#include "bads/kernels.hpp"
#include "bads/posterior_lab.hpp"
#include "bads/rng.hpp"

using namespace bads;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

template <Matrix (*F)(const Matrix&, const Matrix&)>
void bm_matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(F(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <Matrix (*F)(const Matrix&, const Matrix&)>
void bm_matmul_tn(benchmark::State& state) {
  // Weight-gradient shape: batch x in, batch x out.
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(100, n, 3), b = random_matrix(100, n, 4);
  for (auto _ : state) benchmark::DoNotOptimize(F(a, b));
}

template <GridPosterior (*F)(const MicroModel&, std::size_t)>
void bm_grid(benchmark::State& state) {
  const MicroModel model;
  for (auto _ : state) benchmark::DoNotOptimize(F(model, static_cast<std::size_t>(state.range(0))));
}

}  // namespace

BENCHMARK(bm_matmul<kernels::serial::matmul>)->Name("matmul/serial")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(bm_matmul<kernels::parallel::matmul>)->Name("matmul/parallel")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(bm_matmul_tn<kernels::serial::matmul_tn>)->Name("matmul_tn/serial")->Arg(128)->Arg(512);
BENCHMARK(bm_matmul_tn<kernels::parallel::matmul_tn>)->Name("matmul_tn/parallel")->Arg(128)->Arg(512);
BENCHMARK(bm_grid<grid_posterior_serial>)->Name("grid/serial")->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_grid<grid_posterior>)->Name("grid/parallel")->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
