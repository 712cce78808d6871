#include <benchmark/benchmark.h>

#include "bethelab/specfun.hpp"

namespace sf = bethelab::specfun;

static void BM_LogGamma(benchmark::State& state) {
    bethelab::Cplx z{0.3, 4.7};
    for (auto _ : state) {
        benchmark::DoNotOptimize(sf::log_gamma(z));
    }
}
BENCHMARK(BM_LogGamma);

static void BM_Kummer1F1(benchmark::State& state) {
    bethelab::Cplx a{0.45, 0.05}, b{1.05, 0.0}, z{30.0, -20.0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(sf::kummer_1f1(a, b, z));
    }
}
BENCHMARK(BM_Kummer1F1);

static void BM_KernelF2(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(sf::f2(0.3, 0.3));
    }
}
BENCHMARK(BM_KernelF2);

BENCHMARK_MAIN();
