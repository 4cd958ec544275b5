#include <doctest.h>

#include <cmath>
#include <numbers>
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

std::vector<cfloat> tone(std::size_t n, double cycles_per_sample) {
    std::vector<cfloat> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double ph = 2.0 * std::numbers::pi * cycles_per_sample * double(i);
        v[i] = cfloat(float(std::cos(ph)), float(std::sin(ph)));
    }
    return v;
}

}  // namespace

TEST_CASE("FFT matches the direct DFT") {
    for (std::size_t n : {8u, 64u, 256u}) {
        std::mt19937_64 rng(n);
        std::normal_distribution<double> g(0.0, 1.0);
        std::vector<cdouble> x(n);
        for (auto& v : x) v = cdouble(g(rng), g(rng));

        auto want = serial::dft(x);
        auto got = x;
        FftPlan<double> plan(n);
        plan.forward(got.data());
        for (std::size_t k = 0; k < n; ++k) {
            CHECK(std::abs(got[k] - want[k]) < 1e-9 * double(n));
        }
        plan.inverse(got.data());
        for (std::size_t k = 0; k < n; ++k) {
            CHECK(std::abs(got[k] - x[k]) < 1e-12 * double(n));
        }
    }
    CHECK_THROWS_AS(FftPlan<double>(100), std::invalid_argument);
}

TEST_CASE("overlap-save correlation equals the direct reference") {
    const auto x = random_iq(20000, 5);
    const auto t = random_iq(333, 6);
    const auto fast = cross_correlate(x, t);
    const auto ref = serial::cross_correlate(x, t);
    REQUIRE(fast.size() == ref.size());
    double scale = 0.0;
    for (const auto& v : ref) scale = std::max(scale, double(std::abs(v)));
    for (std::size_t k = 0; k < ref.size(); ++k) {
        CHECK(std::abs(cdouble(fast[k]) - cdouble(ref[k])) < 2e-4 * scale);
    }
    CHECK_THROWS_AS(cross_correlate(t, x), std::invalid_argument);
}

TEST_CASE("resampler: production table kernel tracks the exact-tap reference") {
    const auto x = random_iq(4000, 7);
    for (double ratio : {1.0 + 25e-6, 0.95, 1.05}) {
        const auto fast = resample_sinc(x, ratio);
        const auto ref = serial::resample_sinc(x, ratio);
        REQUIRE(fast.size() == ref.size());
        for (std::size_t m = 0; m < ref.size(); ++m) {
            CHECK(std::abs(cdouble(fast[m]) - cdouble(ref[m])) < 1e-4);
        }
    }
}

TEST_CASE("resampler: ratio 1 is the identity in the interior") {
    const auto x = random_iq(5000, 8);
    const auto y = resample_sinc(x, 1.0);
    REQUIRE(y.size() == x.size());
    for (std::size_t i = 16; i + 16 < x.size(); ++i) {
        CHECK(std::abs(cdouble(y[i]) - cdouble(x[i])) < 1e-9);
    }
}

TEST_CASE("resampler: tone at f moves to f/ratio") {
    const double f = 0.032;  // cycles per sample, well inside the band
    const auto x = tone(1 << 16, f);
    for (double ratio : {1.01, 0.97}) {
        const auto y = resample_sinc(x, ratio);
        // FFT-peak oracle on the output
        const std::size_t n = 1 << 15;
        std::vector<cdouble> spec(n);
        for (std::size_t i = 0; i < n; ++i) spec[i] = cdouble(y[i + 100]);
        FftPlan<double> plan(n);
        plan.forward(spec.data());
        std::size_t peak = 0;
        double best = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double m = std::abs(spec[k]);
            if (m > best) { best = m; peak = k; }
        }
        const double got = double(peak) / double(n);
        CHECK(std::abs(got - f / ratio) < 1.0 / double(n));
    }
}

TEST_CASE("resampler: round trip keeps error power below -60 dB") {
    const auto x = tone(1 << 16, 0.032);
    const double r = 1.05;
    const auto y = resample_sinc(x, r);
    const auto z = resample_sinc(y, 1.0 / r);
    const std::size_t lo = 2000, hi = std::min(x.size(), z.size()) - 2000;
    double err = 0.0, sig = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
        err += std::norm(cdouble(z[i]) - cdouble(x[i]));
        sig += std::norm(cdouble(x[i]));
    }
    CHECK(10.0 * std::log10(err / sig) < -60.0);
}

TEST_CASE("sinc_interp_at reproduces integer positions") {
    const auto x = random_iq(256, 9);
    for (std::size_t i = 16; i < 240; i += 13) {
        CHECK(std::abs(sinc_interp_at(x, double(i)) - cdouble(x[i])) < 1e-9);
    }
}

TEST_CASE("kernel tap: unit at zero, zero at integer offsets") {
    CHECK(sinc_kernel_tap(0.0) == doctest::Approx(1.0));
    for (int i = 1; i < 8; ++i) {
        CHECK(std::abs(sinc_kernel_tap(double(i))) < 1e-12);
    }
    CHECK(sinc_kernel_tap(8.5) == 0.0);
}
