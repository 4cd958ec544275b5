// Kernel benchmark: OpenMP production paths against their serial
// references, on workloads shaped like the estimator hot paths (1 s of
// 5 Msps IQ, the 333-sample PSS template, the tone-spectrum FFT).
// Run with OMP_NUM_THREADS to compare scaling.

#include <benchmark/benchmark.h>

#include <random>

#include "clocklab/kernels.hpp"

using namespace clocklab;

namespace {

std::vector<cfloat> random_iq(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> g(0.f, 1.f);
    std::vector<cfloat> v(n);
    for (auto& s : v) s = cfloat(g(rng), g(rng));
    return v;
}

void bm_correlate_omp(benchmark::State& state) {
    const auto x = random_iq(std::size_t(state.range(0)), 1);
    const auto t = random_iq(333, 2);
    for (auto _ : state) {
        auto out = cross_correlate(x, t);
        benchmark::DoNotOptimize(out.data());
    }
}

void bm_correlate_serial(benchmark::State& state) {
    const auto x = random_iq(std::size_t(state.range(0)), 1);
    const auto t = random_iq(333, 2);
    for (auto _ : state) {
        auto out = serial::cross_correlate(x, t);
        benchmark::DoNotOptimize(out.data());
    }
}

void bm_resample_omp(benchmark::State& state) {
    const auto x = random_iq(std::size_t(state.range(0)), 3);
    for (auto _ : state) {
        auto out = resample_sinc(x, 1.0 + 12.5e-6);
        benchmark::DoNotOptimize(out.data());
    }
}

void bm_resample_serial(benchmark::State& state) {
    const auto x = random_iq(std::size_t(state.range(0)), 3);
    for (auto _ : state) {
        auto out = serial::resample_sinc(x, 1.0 + 12.5e-6);
        benchmark::DoNotOptimize(out.data());
    }
}

void bm_fft(benchmark::State& state) {
    const std::size_t n = std::size_t(state.range(0));
    FftPlan<double> plan(n);
    std::vector<cdouble> data(n);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 1.0);
    for (auto& s : data) s = cdouble(g(rng), g(rng));
    for (auto _ : state) {
        auto copy = data;
        plan.forward(copy.data());
        benchmark::DoNotOptimize(copy.data());
    }
}

}  // namespace

BENCHMARK(bm_correlate_omp)->Arg(500000)->Arg(5000000)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_correlate_serial)->Arg(500000)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_resample_omp)->Arg(5000000)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_resample_serial)->Arg(500000)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_fft)->Arg(1 << 20)->Arg(1 << 21)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
