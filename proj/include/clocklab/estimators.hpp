#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "clocklab/signal.hpp"

// The two oscillator-ppm measurement methods: single-tone frequency
// deviation (benchmark) and LTE-PSS peak-spacing counting, plus the
// one-minute averaging and outlier filtering applied to measurement
// streams.

namespace clocklab {

enum class Method { SingleTone, LtePss };

struct PpmMeasurement {
    double timestamp_s = 0.0;  // seconds of day
    std::optional<double> temperature_c;
    double ppm = 0.0;
    Method method = Method::SingleTone;
    double quality = 0.0;   // PSS peak count, or tone peak-to-median in dB
    bool degraded = false;  // PSS peak count far from the expected count
};

struct EstimatorConfig {
    std::size_t fft_size = std::size_t(1) << 21;  // tone spectrum length
    int upsample_factor = 16;                     // PSS peak refinement grid
    double peak_threshold = 0.5;                  // fraction of max |corr|
    double f_sine_nom_hz = 160e3;
    double f_s_nom_hz = 5e6;
    bool include_carrier_offset = false;
    double f_carrier_nom_hz = 2.4e9;
};

// A capture that could not produce a usable measurement (no dominant tone,
// too few PSS peaks). Recoverable: sweeps count these and continue.
class MeasurementError : public std::runtime_error {
public:
    explicit MeasurementError(const std::string& what) : std::runtime_error(what) {}
};

// Tone method: FFT magnitude peak (Gaussian window) refined by 3-point
// parabolic interpolation on the log magnitude, then inversion of the
// configured channel model. Requires a capture of at least 10 ms.
PpmMeasurement estimate_tone_ppm(const IqBuffer& buf, const EstimatorConfig& cfg);

// LTE method: cross-correlate against the PSS template, detect peaks above
// peak_threshold * max with a minimum separation of 0.8 * nominal spacing,
// refine each peak on a 1/upsample_factor lag grid, and convert the mean
// spacing to an effective sampling frequency. Requires >= 3 PSS periods.
PpmMeasurement estimate_lte_ppm(const IqBuffer& buf, const PssTemplate& tmpl,
                                const EstimatorConfig& cfg);

// Tumbling-window mean of ppm (and temperature) per window_s; output
// timestamps are window starts.
std::vector<PpmMeasurement> average_window(std::span<const PpmMeasurement> ms,
                                           double window_s);

struct OutlierFilterResult {
    std::vector<PpmMeasurement> kept;
    bool warned_small_sample = false;  // input under 5 points, passed through
};

// Median/MAD filter: drop points with |ppm - median| > 3.5 * 1.4826 * MAD.
// A zero MAD (constant series) keeps everything.
OutlierFilterResult filter_outliers(std::span<const PpmMeasurement> ms);

}  // namespace clocklab
