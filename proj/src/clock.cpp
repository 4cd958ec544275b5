#include "clocklab/clock.hpp"

#include <cmath>
#include <stdexcept>

namespace clocklab {

Ppm::Ppm(double v) : value(v) {
    if (!std::isfinite(v) || std::abs(v) > 1e6) {
        throw std::invalid_argument("Ppm: value must be finite and within +-1e6");
    }
}

Ppm ppm_of(double f_x_hz, double f_x_nom_hz) {
    if (!(f_x_nom_hz > 0.0)) {
        throw std::invalid_argument("ppm_of: nominal frequency must be positive");
    }
    return Ppm((f_x_hz - f_x_nom_hz) / f_x_nom_hz * 1e6);
}

double freq_of(Ppm ppm, double f_nom_hz) {
    if (!(f_nom_hz > 0.0)) {
        throw std::invalid_argument("freq_of: nominal frequency must be positive");
    }
    return f_nom_hz * (1.0 + ppm.value * 1e-6);
}

ClockOffset offset_step(Ppm residual, double dt_s) {
    if (!(dt_s > 0.0)) {
        throw std::invalid_argument("offset_step: dt must be positive");
    }
    return ClockOffset{residual.value * dt_s};
}

OffsetSeries integrate_offsets(std::span<const double> residual_ppm,
                               int resync_period_min) {
    if (residual_ppm.empty()) {
        throw std::invalid_argument("integrate_offsets: empty residual series");
    }
    if (resync_period_min < 1) {
        throw std::invalid_argument("integrate_offsets: resync period must be >= 1 minute");
    }
    OffsetSeries series;
    series.t_s.resize(residual_ppm.size());
    series.offset_us.resize(residual_ppm.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < residual_ppm.size(); ++i) {
        acc += offset_step(Ppm(residual_ppm[i]), 60.0).microseconds;
        series.t_s[i] = 60.0 * double(i + 1);
        series.offset_us[i] = acc;
        if ((i + 1) % std::size_t(resync_period_min) == 0) {
            series.resync_indices.push_back(i);
            acc = 0.0;
        }
    }
    return series;
}

}  // namespace clocklab
