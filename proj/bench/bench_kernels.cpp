// Serial reference kernels against the OpenMP versions, at the shapes the
// training loop produces.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "ultrasr/kernels.hpp"

namespace k = ultrasr::kernels;

namespace {

std::vector<float> noise(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Decoder hidden layer: rows x (256 + 50) times (256 + 50) x 256.
template <bool Parallel>
void BM_gemm(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0)), kk = std::size_t{306}, n = std::size_t{256};
  const auto a = noise(m * kk, 1), b = noise(kk * n, 2);
  std::vector<float> c(m * n);
  for (auto _ : state) {
    if constexpr (Parallel)
      k::gemm(false, false, m, n, kk, a.data(), b.data(), c.data(), false);
    else
      k::serial::gemm(false, false, m, n, kk, a.data(), b.data(), c.data(), false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * m * n * kk));
}

template <bool Parallel>
void BM_conv_forward(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const k::ConvDims d{32, 32, side, side};
  const auto x = noise(32 * side * side, 3), w = noise(32 * 32 * 9, 4), b = noise(32, 5);
  std::vector<float> y(32 * side * side);
  for (auto _ : state) {
    if constexpr (Parallel)
      k::conv3x3_forward(d, x.data(), w.data(), b.data(), y.data());
    else
      k::serial::conv3x3_forward(d, x.data(), w.data(), b.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Parallel>
void BM_conv_backward(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const k::ConvDims d{32, 32, side, side};
  const auto x = noise(32 * side * side, 3), w = noise(32 * 32 * 9, 4), dy = noise(32 * side * side, 6);
  std::vector<float> dx(x.size()), dw(w.size()), db(32);
  for (auto _ : state) {
    if constexpr (Parallel)
      k::conv3x3_backward(d, x.data(), w.data(), dy.data(), dx.data(), dw.data(), db.data());
    else
      k::serial::conv3x3_backward(d, x.data(), w.data(), dy.data(), dx.data(), dw.data(),
                                  db.data());
    benchmark::DoNotOptimize(dw.data());
  }
}

template <bool Parallel>
void BM_periodic_encode(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto delta = noise(rows * 2, 7), freqs = noise(12, 8);
  std::vector<float> out(rows * 48);
  for (auto _ : state) {
    if constexpr (Parallel)
      k::periodic_encode(rows, 12, delta.data(), freqs.data(), out.data());
    else
      k::serial::periodic_encode(rows, 12, delta.data(), freqs.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_unfold(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto x = noise(32 * side * side, 9);
  std::vector<float> y(9 * x.size());
  for (auto _ : state) {
    if constexpr (Parallel)
      k::unfold3x3_forward(32, side, side, x.data(), y.data());
    else
      k::serial::unfold3x3_forward(32, side, side, x.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
}

}  // namespace

BENCHMARK(BM_gemm<false>)->Name("gemm/serial")->Arg(1024)->Arg(9216);
BENCHMARK(BM_gemm<true>)->Name("gemm/openmp")->Arg(1024)->Arg(9216);
BENCHMARK(BM_conv_forward<false>)->Name("conv_forward/serial")->Arg(48);
BENCHMARK(BM_conv_forward<true>)->Name("conv_forward/openmp")->Arg(48);
BENCHMARK(BM_conv_backward<false>)->Name("conv_backward/serial")->Arg(48);
BENCHMARK(BM_conv_backward<true>)->Name("conv_backward/openmp")->Arg(48);
BENCHMARK(BM_periodic_encode<false>)->Name("periodic_encode/serial")->Arg(9216);
BENCHMARK(BM_periodic_encode<true>)->Name("periodic_encode/openmp")->Arg(9216);
BENCHMARK(BM_unfold<false>)->Name("unfold/serial")->Arg(48);
BENCHMARK(BM_unfold<true>)->Name("unfold/openmp")->Arg(48);

BENCHMARK_MAIN();
