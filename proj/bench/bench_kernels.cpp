// Serial reference vs OpenMP variant of each kernel, at the shapes a training
// step on the default synthetic problem produces.

#include <benchmark/benchmark.h>

#include <vector>

#include "mvclust/kernels.hpp"
#include "mvclust/rng.hpp"

namespace {

using mvclust::Rng;
namespace k = mvclust::kernels;

std::vector<double> random_buffer(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

template <auto Gemm>
void bm_gemm(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const auto kk = static_cast<std::size_t>(state.range(1));
    const auto n = static_cast<std::size_t>(state.range(2));
    const auto a = random_buffer(m * kk, 1);
    const auto b = random_buffer(kk * n, 2);
    std::vector<double> c(m * n);
    for (auto _ : state) {
        Gemm(a.data(), b.data(), c.data(), m, kk, n);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(m * kk * n));
}

template <auto Transpose>
void bm_transpose(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const auto n = static_cast<std::size_t>(state.range(1));
    const auto a = random_buffer(m * n, 3);
    std::vector<double> b(m * n);
    for (auto _ : state) {
        Transpose(a.data(), b.data(), m, n);
        benchmark::DoNotOptimize(b.data());
    }
}

template <auto Nearest>
void bm_nearest(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto kk = static_cast<std::size_t>(state.range(1));
    const auto d = static_cast<std::size_t>(state.range(2));
    const auto pts = random_buffer(n * d, 4);
    const auto cen = random_buffer(kk * d, 5);
    std::vector<int> labels(n);
    std::vector<double> dist(n);
    for (auto _ : state) {
        Nearest(pts.data(), cen.data(), n, kk, d, labels.data(), dist.data());
        benchmark::DoNotOptimize(labels.data());
    }
}

void gemm_shapes(benchmark::internal::Benchmark* b) {
    b->Args({256, 50, 256})->Args({256, 256, 128})->Args({1000, 128, 64})->Args({1000, 64, 32});
}

}  // namespace

BENCHMARK(bm_gemm<k::serial::gemm_nn>)->Apply(gemm_shapes)->Name("gemm/serial");
BENCHMARK(bm_gemm<k::parallel::gemm_nn>)->Apply(gemm_shapes)->Name("gemm/parallel");
BENCHMARK(bm_transpose<k::serial::transpose>)->Args({256, 256})->Args({1000, 64})->Name("transpose/serial");
BENCHMARK(bm_transpose<k::parallel::transpose>)->Args({256, 256})->Args({1000, 64})->Name("transpose/parallel");
BENCHMARK(bm_nearest<k::serial::nearest_centroid>)->Args({1000, 4, 32})->Args({10000, 10, 32})->Name("nearest_centroid/serial");
BENCHMARK(bm_nearest<k::parallel::nearest_centroid>)->Args({1000, 4, 32})->Args({10000, 10, 32})->Name("nearest_centroid/parallel");

BENCHMARK_MAIN();
