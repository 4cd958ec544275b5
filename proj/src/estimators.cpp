#include "clocklab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "clocklab/clock.hpp"

namespace clocklab {

namespace {

constexpr double kPi = std::numbers::pi;

std::size_t floor_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p * 2 <= n) p *= 2;
    return p;
}

double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + long(mid), v.end());
    double m = v[mid];
    if (n % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + long(mid - 1), v.begin() + long(mid));
        m = 0.5 * (m + v[mid - 1]);
    }
    return m;
}

}  // namespace

PpmMeasurement estimate_tone_ppm(const IqBuffer& buf, const EstimatorConfig& cfg) {
    if (double(buf.samples.size()) < 0.010 * buf.f_s_nom_hz) {
        throw std::invalid_argument("estimate_tone_ppm: capture shorter than 10 ms");
    }
    const std::size_t n = std::min(cfg.fft_size, floor_pow2(buf.samples.size()));

    // Gaussian window, sigma = n/10: its log spectrum is parabolic near the
    // peak, which is what makes the 3-point interpolation essentially
    // bias-free. Edge weight exp(-12.5) keeps truncation sidelobes low.
    std::vector<cdouble> spec(n);
    const double mid = 0.5 * double(n - 1);
    const double inv_sigma = 10.0 / double(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = (double(i) - mid) * inv_sigma;
        const double w = std::exp(-0.5 * z * z);
        spec[i] = cdouble(buf.samples[i]) * w;
    }
    FftPlan<double> plan(n);
    plan.forward(spec.data());

    std::vector<double> mag2(n);
    for (std::size_t i = 0; i < n; ++i) mag2[i] = std::norm(spec[i]);
    const std::size_t peak =
        std::size_t(std::max_element(mag2.begin(), mag2.end()) - mag2.begin());

    const double med = median_of(mag2);
    const double peak_to_median_db =
        10.0 * std::log10(mag2[peak] / std::max(med, 1e-300));
    if (peak_to_median_db < 10.0) {
        throw MeasurementError("estimate_tone_ppm: no dominant spectral peak");
    }

    const double lm = 0.5 * std::log(mag2[(peak + n - 1) % n]);
    const double lc = 0.5 * std::log(mag2[peak]);
    const double lp = 0.5 * std::log(mag2[(peak + 1) % n]);
    const double denom = lm - 2.0 * lc + lp;
    const double frac = (denom == 0.0) ? 0.0 : 0.5 * (lm - lp) / denom;

    double f_app = (double(peak) + frac) * buf.f_s_nom_hz / double(n);
    if (f_app > buf.f_s_nom_hz / 2.0) f_app -= buf.f_s_nom_hz;

    double ppm;
    if (cfg.include_carrier_offset) {
        // Exact inversion of f_app = (f_sine_nom - f_c*d*1e-6) / (1 + d*1e-6).
        ppm = (cfg.f_sine_nom_hz - f_app) /
              (cfg.f_carrier_nom_hz * 1e-6 + f_app * 1e-6);
    } else {
        ppm = (cfg.f_sine_nom_hz / f_app - 1.0) * 1e6;
    }

    PpmMeasurement m;
    m.ppm = Ppm(ppm).value;
    m.method = Method::SingleTone;
    m.quality = peak_to_median_db;
    return m;
}

PpmMeasurement estimate_lte_ppm(const IqBuffer& buf, const PssTemplate& tmpl,
                                const EstimatorConfig& cfg) {
    if (double(buf.samples.size()) < 3.0 * tmpl.period_s * buf.f_s_nom_hz) {
        throw std::invalid_argument("estimate_lte_ppm: capture shorter than 3 PSS periods");
    }
    if (cfg.upsample_factor < 1 || !(cfg.peak_threshold > 0.0 && cfg.peak_threshold < 1.0)) {
        throw std::invalid_argument("estimate_lte_ppm: bad refinement config");
    }

    const std::vector<cfloat> corr = cross_correlate(buf.samples, tmpl.samples);
    std::vector<float> mag2(corr.size());
    #pragma omp parallel for schedule(static)
    for (long i = 0; i < long(corr.size()); ++i) {
        mag2[std::size_t(i)] = std::norm(corr[std::size_t(i)]);
    }

    const float peak_mag2 = *std::max_element(mag2.begin(), mag2.end());
    const float tau = float(cfg.peak_threshold * cfg.peak_threshold) * peak_mag2;
    const double nominal_spacing = buf.f_s_nom_hz * tmpl.period_s;
    const double min_sep = 0.8 * nominal_spacing;

    // Local maxima above threshold, then greedy acceptance by magnitude with
    // the minimum separation enforced. This discards correlation sidelobes,
    // which stay below half the main peak for the PSS.
    std::vector<std::size_t> candidates;
    for (std::size_t k = 1; k + 1 < mag2.size(); ++k) {
        if (mag2[k] >= tau && mag2[k] >= mag2[k - 1] && mag2[k] >= mag2[k + 1]) {
            candidates.push_back(k);
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](std::size_t a, std::size_t b) { return mag2[a] > mag2[b]; });
    std::vector<std::size_t> accepted;
    for (std::size_t k : candidates) {
        bool clear = true;
        for (std::size_t a : accepted) {
            if (std::abs(double(k) - double(a)) < min_sep) { clear = false; break; }
        }
        if (clear) accepted.push_back(k);
    }
    std::sort(accepted.begin(), accepted.end());

    if (accepted.size() < 2) {
        throw MeasurementError("estimate_lte_ppm: fewer than 2 PSS peaks detected");
    }

    // Refine each peak on a 1/upsample grid spanning +-1 sample around the
    // integer maximum, interpolating the complex correlation.
    const int up = cfg.upsample_factor;
    std::vector<double> refined(accepted.size());
    #pragma omp parallel for schedule(static)
    for (long pi = 0; pi < long(accepted.size()); ++pi) {
        const std::size_t k = accepted[std::size_t(pi)];
        double best_pos = double(k);
        double best_val = -1.0;
        for (int s = -up; s <= up; ++s) {
            const double pos = double(k) + double(s) / double(up);
            const double v = std::abs(sinc_interp_at(corr, pos));
            if (v > best_val) { best_val = v; best_pos = pos; }
        }
        refined[std::size_t(pi)] = best_pos;
    }

    // Mean spacing; gaps from missed peaks are normalized by their period
    // count so the average telescopes over observed spans.
    double span = 0.0, periods = 0.0;
    for (std::size_t i = 1; i < refined.size(); ++i) {
        const double diff = refined[i] - refined[i - 1];
        span += diff;
        periods += std::max(1.0, std::round(diff / nominal_spacing));
    }
    const double mean_spacing = span / periods;
    const double f_s_hat = mean_spacing / tmpl.period_s;

    PpmMeasurement m;
    m.ppm = ppm_of(f_s_hat, buf.f_s_nom_hz).value;
    m.method = Method::LtePss;
    m.quality = double(accepted.size());
    const double expected =
        std::floor(double(buf.samples.size()) / nominal_spacing);
    m.degraded = std::abs(double(accepted.size()) - expected) > 0.2 * expected;
    return m;
}

std::vector<PpmMeasurement> average_window(std::span<const PpmMeasurement> ms,
                                           double window_s) {
    if (!(window_s > 0.0)) {
        throw std::invalid_argument("average_window: window must be positive");
    }
    std::vector<PpmMeasurement> out;
    if (ms.empty()) return out;
    for (std::size_t i = 1; i < ms.size(); ++i) {
        if (ms[i].timestamp_s < ms[i - 1].timestamp_s) {
            throw std::invalid_argument("average_window: measurements not time-sorted");
        }
    }

    std::size_t i = 0;
    while (i < ms.size()) {
        const double w0 = std::floor(ms[i].timestamp_s / window_s) * window_s;
        double ppm_sum = 0.0, temp_sum = 0.0, q_sum = 0.0;
        std::size_t n = 0, n_temp = 0;
        bool degraded = false;
        while (i < ms.size() && ms[i].timestamp_s < w0 + window_s) {
            ppm_sum += ms[i].ppm;
            q_sum += ms[i].quality;
            if (ms[i].temperature_c) { temp_sum += *ms[i].temperature_c; ++n_temp; }
            degraded = degraded || ms[i].degraded;
            ++n; ++i;
        }
        PpmMeasurement avg;
        avg.timestamp_s = w0;
        avg.ppm = ppm_sum / double(n);
        avg.method = ms[i - 1].method;
        avg.quality = q_sum / double(n);
        avg.degraded = degraded;
        if (n_temp > 0) avg.temperature_c = temp_sum / double(n_temp);
        out.push_back(avg);
    }
    return out;
}

OutlierFilterResult filter_outliers(std::span<const PpmMeasurement> ms) {
    OutlierFilterResult result;
    result.kept.assign(ms.begin(), ms.end());
    if (ms.size() < 5) {
        result.warned_small_sample = true;
        return result;
    }

    std::vector<double> ppm(ms.size());
    for (std::size_t i = 0; i < ms.size(); ++i) ppm[i] = ms[i].ppm;
    const double med = median_of(ppm);
    std::vector<double> dev(ms.size());
    for (std::size_t i = 0; i < ms.size(); ++i) dev[i] = std::abs(ppm[i] - med);
    const double mad = 1.4826 * median_of(dev);
    if (mad == 0.0) return result;  // degenerate: constant series

    result.kept.clear();
    for (const auto& m : ms) {
        if (std::abs(m.ppm - med) <= 3.5 * mad) result.kept.push_back(m);
    }
    return result;
}

}  // namespace clocklab
