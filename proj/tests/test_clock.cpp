#include <doctest.h>

#include <cmath>
#include <random>

#include "clocklab/clock.hpp"

using namespace clocklab;

TEST_CASE("ppm_of matches the defining formula") {
    CHECK(ppm_of(5.0e6, 5.0e6).value == doctest::Approx(0.0));
    CHECK(ppm_of(5.0e6 * (1.0 + 0.5e-6), 5.0e6).value == doctest::Approx(0.5));
    // 1200 Hz high at 2.4 GHz is 0.5 ppm
    CHECK(ppm_of(2.4e9 + 1200.0, 2.4e9).value == doctest::Approx(0.5).epsilon(1e-9));
    CHECK_THROWS_AS(ppm_of(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ppm_of(1.0, -5.0), std::invalid_argument);
}

TEST_CASE("freq_of inverts ppm_of") {
    CHECK(freq_of(Ppm(0.0), 5.0e6) == doctest::Approx(5.0e6));
    CHECK(freq_of(Ppm(1.0), 1.0e6) == doctest::Approx(1.000001e6));
    CHECK_THROWS_AS(freq_of(Ppm(1.0), 0.0), std::invalid_argument);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> freq(1e3, 1e10);
    std::uniform_real_distribution<double> dev(-100.0, 100.0);
    for (int i = 0; i < 1000; ++i) {
        const double f0 = freq(rng);
        const double f = f0 * (1.0 + dev(rng) * 1e-6);
        const double back = freq_of(ppm_of(f, f0), f0);
        CHECK(std::abs(back - f) <= 1e-12 * f);
    }
}

TEST_CASE("offset_step: 1 ppm accrues 1 us per second") {
    CHECK(offset_step(Ppm(0.1), 1.0).microseconds == doctest::Approx(0.1));
    CHECK(offset_step(Ppm(0.1), 60.0).microseconds == doctest::Approx(6.0));
    CHECK(offset_step(Ppm(0.0), 3600.0).microseconds == doctest::Approx(0.0));
    CHECK_THROWS_AS(offset_step(Ppm(0.1), 0.0), std::invalid_argument);

    // linear in both arguments
    const double a = offset_step(Ppm(0.3), 7.0).microseconds;
    CHECK(offset_step(Ppm(0.6), 7.0).microseconds == doctest::Approx(2.0 * a));
    CHECK(offset_step(Ppm(0.3), 14.0).microseconds == doctest::Approx(2.0 * a));
}

TEST_CASE("integrate_offsets accumulates per window and restarts") {
    SUBCASE("constant residual sawtooth") {
        std::vector<double> r(100, 0.1);
        const auto series = integrate_offsets(r, 25);
        double peak = 0.0;
        for (double v : series.offset_us) peak = std::max(peak, v);
        CHECK(peak == doctest::Approx(0.1 * 60.0 * 25));  // full window sum
        REQUIRE(series.resync_indices.size() == 4);
        CHECK(series.resync_indices[0] == 24);
        CHECK(series.offset_us[24] == doctest::Approx(150.0));
        CHECK(series.offset_us[25] == doctest::Approx(6.0));  // fresh window
    }
    SUBCASE("all-zero residuals") {
        std::vector<double> r(30, 0.0);
        const auto series = integrate_offsets(r, 5);
        for (double v : series.offset_us) CHECK(v == 0.0);
    }
    SUBCASE("two-step hand computation") {
        std::vector<double> r = {1.0, -1.0};
        const auto series = integrate_offsets(r, 2);
        REQUIRE(series.offset_us.size() == 2);
        CHECK(series.offset_us[0] == doctest::Approx(60.0));
        CHECK(series.offset_us[1] == doctest::Approx(0.0));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(integrate_offsets({}, 5), std::invalid_argument);
        std::vector<double> r = {1.0};
        CHECK_THROWS_AS(integrate_offsets(r, 0), std::invalid_argument);
    }
    SUBCASE("shifting residuals by c shifts offsets by 60*c*k") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(-0.5, 0.5);
        std::vector<double> r(60), shifted(60);
        const double c = 0.25;
        for (std::size_t i = 0; i < r.size(); ++i) {
            r[i] = u(rng);
            shifted[i] = r[i] + c;
        }
        const auto base = integrate_offsets(r, 10);
        const auto more = integrate_offsets(shifted, 10);
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double k = double(i % 10 + 1);  // minutes since window start
            CHECK(more.offset_us[i] - base.offset_us[i] == doctest::Approx(60.0 * c * k));
        }
    }
    SUBCASE("t strictly increasing") {
        std::vector<double> r(10, 0.2);
        const auto series = integrate_offsets(r, 3);
        for (std::size_t i = 1; i < series.t_s.size(); ++i) {
            CHECK(series.t_s[i] > series.t_s[i - 1]);
        }
    }
}

TEST_CASE("Ppm construction guards") {
    CHECK_THROWS_AS(Ppm(2e6), std::invalid_argument);
    CHECK_THROWS_AS(Ppm(std::nan("")), std::invalid_argument);
}
