// Serial reference vs OpenMP kernels on VGG-like layer shapes.
#include <benchmark/benchmark.h>

#include <vector>

#include "identiface/kernels.hpp"
#include "identiface/rng.hpp"

namespace k = identiface::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  identiface::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

k::ConvDims conv_dims(const benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto hw = static_cast<std::size_t>(state.range(1));
  return {8, c, hw, hw, c};
}

template <auto Fn>
void BM_conv_forward(benchmark::State& state) {
  const auto d = conv_dims(state);
  const auto x = random_vector(d.input_size(), 1);
  const auto w = random_vector(d.weight_size(), 2);
  const auto b = random_vector(d.out_channels, 3);
  std::vector<double> y(d.output_size());
  for (auto _ : state) {
    Fn(d, x, w, b, y);
    benchmark::DoNotOptimize(y.data());
  }
}

template <auto Fn>
void BM_conv_backward(benchmark::State& state) {
  const auto d = conv_dims(state);
  const auto x = random_vector(d.input_size(), 1);
  const auto w = random_vector(d.weight_size(), 2);
  const auto gy = random_vector(d.output_size(), 3);
  std::vector<double> gx(d.input_size()), gw(d.weight_size()), gb(d.out_channels);
  for (auto _ : state) {
    Fn(d, x, w, gy, gx, gw, gb);
    benchmark::DoNotOptimize(gw.data());
  }
}

template <auto Fn>
void BM_dense_forward(benchmark::State& state) {
  const k::DenseDims d{64, static_cast<std::size_t>(state.range(0)), 256};
  const auto x = random_vector(d.batch * d.in_features, 1);
  const auto w = random_vector(d.in_features * d.out_features, 2);
  const auto b = random_vector(d.out_features, 3);
  std::vector<double> y(d.batch * d.out_features);
  for (auto _ : state) {
    Fn(d, x, w, b, y);
    benchmark::DoNotOptimize(y.data());
  }
}

template <auto Fn>
void BM_maxpool_forward(benchmark::State& state) {
  const k::PoolDims d{8, 64, 64, 64};
  const auto x = random_vector(d.input_size(), 1);
  std::vector<double> y(d.output_size());
  std::vector<std::size_t> idx(d.output_size());
  for (auto _ : state) {
    Fn(d, x, y, idx);
    benchmark::DoNotOptimize(y.data());
  }
}

}  // namespace

BENCHMARK(BM_conv_forward<k::serial::conv2d_forward>)->Args({16, 32})->Args({64, 16});
BENCHMARK(BM_conv_forward<k::parallel::conv2d_forward>)->Args({16, 32})->Args({64, 16});
BENCHMARK(BM_conv_backward<k::serial::conv2d_backward>)->Args({16, 32})->Args({64, 16});
BENCHMARK(BM_conv_backward<k::parallel::conv2d_backward>)->Args({16, 32})->Args({64, 16});
BENCHMARK(BM_dense_forward<k::serial::dense_forward>)->Arg(512)->Arg(2048);
BENCHMARK(BM_dense_forward<k::parallel::dense_forward>)->Arg(512)->Arg(2048);
BENCHMARK(BM_maxpool_forward<k::serial::maxpool_forward>);
BENCHMARK(BM_maxpool_forward<k::parallel::maxpool_forward>);

BENCHMARK_MAIN();
