#pragma once

#include <cstddef>
#include <span>
#include <vector>

// Clock arithmetic: ppm <-> frequency conversions and clock-offset
// integration on the one-minute evaluation grid. All functions are pure.

namespace clocklab {

// Fractional frequency error in parts per million. A constant ppm of r
// accumulates r microseconds of clock offset per second.
struct Ppm {
    double value = 0.0;

    Ppm() = default;
    explicit Ppm(double v);
};

// Time difference between two clocks, in microseconds.
struct ClockOffset {
    double microseconds = 0.0;
};

// Minute-sampled clock offset between synchronization events. offset_us[i]
// is the accumulated offset at the end of minute i+1; the accumulator
// restarts (perfect resynchronization) after each index in resync_indices.
struct OffsetSeries {
    std::vector<double> t_s;
    std::vector<double> offset_us;
    std::vector<std::size_t> resync_indices;
};

// ppm = (f_x - f_x_nom) / f_x_nom * 1e6. Throws on non-positive nominal.
Ppm ppm_of(double f_x_hz, double f_x_nom_hz);

// Inverse of ppm_of: the frequency whose deviation from f_nom is `ppm`.
double freq_of(Ppm ppm, double f_nom_hz);

// Offset accrued by holding `residual` for dt seconds.
ClockOffset offset_step(Ppm residual, double dt_s);

// Cumulative clock offset over a minute-gridded residual series with a
// perfect resync every resync_period_min minutes. Each window accumulates
// the full resync_period_min minutes of drift; the sample at a window's
// last minute carries the whole window sum (the offset reached just before
// the resync event).
OffsetSeries integrate_offsets(std::span<const double> residual_ppm,
                               int resync_period_min);

}  // namespace clocklab
