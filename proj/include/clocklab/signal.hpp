#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "clocklab/kernels.hpp"

// Receiver-side IQ capture synthesis. Replaces the two-SDR bench: a single
// tone and an FDD-LTE PSS train are generated at the nominal sample rate,
// then the receiver's oscillator skew is realized by fractionally
// resampling the whole waveform, so the ground-truth ppm of every capture
// is exact by construction.

namespace clocklab {

struct IqBuffer {
    std::vector<cfloat> samples;
    double f_s_nom_hz = 5e6;  // rate the receiver believes it samples at
    double duration_s = 0.0;  // true wall-clock span of the capture
};

struct ChannelConfig {
    double ppm = 0.0;                     // receiver oscillator skew
    std::optional<double> snr_db;         // nullopt = noiseless
    bool include_carrier_offset = false;  // model the shared-LO carrier shift
    double f_carrier_nom_hz = 2.4e9;
    std::uint64_t seed = 0;
};

struct PssTemplate {
    std::vector<cfloat> samples;  // unit energy, at f_s_nom_hz
    int root_index = 25;
    double period_s = 5e-3;  // FDD-LTE PSS cadence
    double f_s_nom_hz = 5e6;
};

// Length-63 Zadoff-Chu PSS (DC punctured) on the 62 central subcarriers of
// a 128-point inverse DFT at 1.92 Msps, resampled to f_s_nom_hz and
// normalized to unit energy. Valid roots: 25, 29, 34.
PssTemplate make_pss_template(int root_index, double f_s_nom_hz);

// Complex exponential of nominal frequency f_sine_nom_hz as seen through a
// receiver with skew cfg.ppm. The apparent baseband frequency is
//   f_app = (f_sine_nom - K) / (1 + ppm*1e-6),
//   K = f_carrier_nom * ppm * 1e-6 if include_carrier_offset else 0.
IqBuffer gen_single_tone(double f_sine_nom_hz, const ChannelConfig& cfg,
                         double f_s_nom_hz, double duration_s);

// PSS copies every period_s of true time through the same skewed receiver;
// the nominal inter-peak spacing f_s_nom * period_s samples becomes
// (1 + ppm*1e-6) * f_s_nom * period_s.
IqBuffer gen_pss_train(const PssTemplate& tmpl, const ChannelConfig& cfg,
                       double duration_s);

// Skew realization: evaluates the buffer at positions n / ratio
// (windowed sinc, 16 taps, Kaiser beta = 8). ratio must be in [0.9, 1.1].
IqBuffer resample(const IqBuffer& buf, double ratio);

// Raw capture export: interleaved little-endian float32 I/Q pairs plus a
// JSON sidecar (<path>.json) with {f_s_nom, ppm, snr_db, seed}.
void save_iq(const IqBuffer& buf, const ChannelConfig& cfg,
             const std::filesystem::path& path);
IqBuffer load_iq(const std::filesystem::path& path);

}  // namespace clocklab
