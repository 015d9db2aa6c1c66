// Serial reference vs OpenMP kernels on metric-model-sized shapes.
// Run with OMP_NUM_THREADS=<n> to compare thread counts.

#include <benchmark/benchmark.h>

#include <vector>

#include "detect/hashing.hpp"
#include "detect/kernels.hpp"

namespace {

using namespace detect::kernels;

std::vector<double> random_matrix(std::size_t n, std::uint64_t seed) {
  detect::SplitMix64 rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform() * 2.0 - 1.0;
  return v;
}

template <bool Parallel>
void BM_affine_forward(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const auto in = static_cast<std::size_t>(state.range(1));
  const auto out = static_cast<std::size_t>(state.range(2));
  const auto x = random_matrix(batch * in, 1), w = random_matrix(out * in, 2), b = random_matrix(out, 3);
  std::vector<double> y(batch * out);
  for (auto _ : state) {
    if constexpr (Parallel) affine_forward({x, batch, in}, {w, out, in}, b, {y, batch, out});
    else serial::affine_forward({x, batch, in}, {w, out, in}, b, {y, batch, out});
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch * in * out));
}

template <bool Parallel>
void BM_affine_backward_params(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const auto in = static_cast<std::size_t>(state.range(1));
  const auto out = static_cast<std::size_t>(state.range(2));
  const auto x = random_matrix(batch * in, 1), dy = random_matrix(batch * out, 2);
  std::vector<double> dw(out * in), db(out);
  for (auto _ : state) {
    if constexpr (Parallel) affine_backward_params({x, batch, in}, {dy, batch, out}, {dw, out, in}, db);
    else serial::affine_backward_params({x, batch, in}, {dy, batch, out}, {dw, out, in}, db);
    benchmark::DoNotOptimize(dw.data());
  }
}

template <bool Parallel>
void BM_cosine_matrix(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const auto a = random_matrix(n * d, 1), b = random_matrix(n * d, 2);
  std::vector<double> out(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) cosine_matrix({a, n, d}, {b, n, d}, {out, n, n});
    else serial::cosine_matrix({a, n, d}, {b, n, d}, {out, n, n});
    benchmark::DoNotOptimize(out.data());
  }
}

// 7 * 768 features into the first hidden layer of the full-size presets.
BENCHMARK(BM_affine_forward<false>)->Args({8, 5376, 2304})->Args({256, 448, 128})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_affine_forward<true>)->Args({8, 5376, 2304})->Args({256, 448, 128})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_affine_backward_params<false>)->Args({8, 5376, 2304})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_affine_backward_params<true>)->Args({8, 5376, 2304})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_cosine_matrix<false>)->Args({64, 768})->Args({256, 64})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_cosine_matrix<true>)->Args({64, 768})->Args({256, 64})->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
