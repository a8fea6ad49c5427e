// Reference vs OpenMP kernels at the sizes the classifiers use.
#include <benchmark/benchmark.h>

#include <vector>

#include "xtsc/kernels.hpp"
#include "xtsc/rng.hpp"

namespace {

using xtsc::kernels::ConvShape;

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  xtsc::Rng rng(seed);
  std::vector<double> v(n);
  for (double& e : v) e = rng.uniform(-1.0, 1.0);
  return v;
}

ConvShape shape_for(const benchmark::State& state) {
  const auto channels = static_cast<std::size_t>(state.range(0));
  return {channels, 32, 7, static_cast<std::size_t>(state.range(1))};
}

template <bool Parallel>
void conv_forward(benchmark::State& state) {
  const ConvShape s = shape_for(state);
  const auto x = random_vector(s.in_channels * s.steps, 1);
  const auto w = random_vector(s.out_channels * s.in_channels * s.width, 2);
  const auto b = random_vector(s.out_channels, 3);
  std::vector<double> y(s.out_channels * s.steps);
  for (auto _ : state) {
    if constexpr (Parallel) {
      xtsc::kernels::conv1d_forward(s, x, w, b, y);
    } else {
      xtsc::kernels::conv1d_forward_reference(s, x, w, b, y);
    }
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Parallel>
void conv_backward(benchmark::State& state) {
  const ConvShape s = shape_for(state);
  const auto x = random_vector(s.in_channels * s.steps, 1);
  const auto w = random_vector(s.out_channels * s.in_channels * s.width, 2);
  const auto dy = random_vector(s.out_channels * s.steps, 3);
  std::vector<double> dx(x.size()), dw(w.size()), db(s.out_channels);
  for (auto _ : state) {
    if constexpr (Parallel) {
      xtsc::kernels::conv1d_backward(s, x, w, dy, dx, dw, db);
    } else {
      xtsc::kernels::conv1d_backward_reference(s, x, w, dy, dx, dw, db);
    }
    benchmark::DoNotOptimize(dx.data());
  }
}

template <bool Parallel>
void matvec(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto cols = static_cast<std::size_t>(state.range(1));
  const auto w = random_vector(rows * cols, 1);
  const auto x = random_vector(cols, 2);
  std::vector<double> y(rows);
  for (auto _ : state) {
    if constexpr (Parallel) {
      xtsc::kernels::matvec(rows, cols, w, x, y);
    } else {
      xtsc::kernels::matvec_reference(rows, cols, w, x, y);
    }
    benchmark::DoNotOptimize(y.data());
  }
}

}  // namespace

BENCHMARK(conv_forward<false>)->Args({1, 50})->Args({32, 50})->Args({50, 50})->Args({32, 500});
BENCHMARK(conv_forward<true>)->Args({1, 50})->Args({32, 50})->Args({50, 50})->Args({32, 500});
BENCHMARK(conv_backward<false>)->Args({32, 50})->Args({32, 500});
BENCHMARK(conv_backward<true>)->Args({32, 50})->Args({32, 500});
BENCHMARK(matvec<false>)->Args({40, 60})->Args({1024, 1024});
BENCHMARK(matvec<true>)->Args({40, 60})->Args({1024, 1024});

BENCHMARK_MAIN();
