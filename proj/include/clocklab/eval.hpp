#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "clocklab/clock.hpp"
#include "clocklab/dataset.hpp"
#include "clocklab/estimators.hpp"
#include "clocklab/lstm.hpp"

// Evaluation harness: calibrated synthetic datasets with known ground
// truth, the -0.5..0.5 ppm estimator sweep, the four compensation methods,
// clock-offset CDFs, the n_online sweep and the resync-interval scan.

namespace clocklab {

// Ground-truth skew law: ppm(T) = c0 + c1*T + c2*T^2, bounded by the
// high-end oscillator's 0.5 ppm over -30..85 C. Defaults give a gentle
// quadratic with mean |ppm| around 0.1 over outdoor temperatures.
struct OscillatorProfile {
    double c0 = 1.9e-4 * 27.5 * 27.5 - 0.14;  // vertex form: 1.9e-4*(T-27.5)^2 - 0.14
    double c1 = -2.0 * 1.9e-4 * 27.5;
    double c2 = 1.9e-4;
    double tone_noise_ppm = 0.4e-3;   // single-tone measurement noise (std)
    double lte_noise_ppm = 16.6e-3;   // LTE measurement noise (std)

    double ppm_at(double temp_c) const {
        return c0 + c1 * temp_c + c2 * temp_c * temp_c;
    }
    void validate() const;  // |ppm| <= 0.5 over -30..85 C
};

// Outdoor temperature: diurnal sinusoid plus AR(1) weather noise and a
// linear warm front that starts after the initial training day.
struct TempModel {
    double mean_c = 12.0;
    double amplitude_c = 8.0;
    double phase_rad = -1.5707963267948966;  // coldest at midnight
    double trend_c_per_day = 4.0;
    double trend_start_h = 24.0;
    double ar_phi = 0.95;
    double ar_sigma_c = 0.25;
};

// Minute-gridded synthetic dataset; true_ppm is exactly profile(temperature)
// and the measured columns add per-method Gaussian noise.
std::vector<MeasurementRecord> gen_synthetic_dataset(const OscillatorProfile& profile,
                                                     const TempModel& temp,
                                                     double duration_h,
                                                     std::uint64_t seed);

enum class CompMethod { None, ConstantTone, ConstantLte, OnlineLstm, Oracle };

const char* comp_method_name(CompMethod m);
CompMethod comp_method_from_name(const std::string& name);

struct CompensationRun {
    CompMethod method = CompMethod::None;
    std::vector<double> predicted_ppm;  // one per test-horizon minute
    std::vector<double> residual_ppm;   // true - predicted
    OffsetSeries offsets;
    TrainPolicy policy;
};

// Evaluates a method over the test horizon (everything after the first
// day). Resynchronization every policy.dt_online_min minutes; the constant
// methods re-measure at each resync, the online LSTM trains on day one and
// updates on the points accrued between resyncs.
CompensationRun run_compensation(std::span<const MeasurementRecord> dataset,
                                 CompMethod method, const TrainPolicy& policy,
                                 const LstmConfig& lstm_cfg = {});

struct CdfSummary {
    std::vector<double> sorted_abs_us;
    double value_at(double p) const;   // |offset| at probability p
    double prob_at(double v) const;    // P(|offset| <= v)
};

CdfSummary cdf_of(const CompensationRun& run);

// Largest resync period (scanned 1..cap_min) keeping |offset| <= threshold
// for at least `prob` of the minutes. Returns 0 when even 1 minute fails.
int resync_interval_for(std::span<const MeasurementRecord> dataset,
                        CompMethod method, TrainPolicy policy,
                        double threshold_us = 10.0, double prob = 0.9,
                        int cap_min = 120);

// Mean |offset| per n_online over the grid, all runs sharing seeds and the
// initially trained model.
std::vector<std::pair<int, double>> sweep_n_online(
    std::span<const MeasurementRecord> dataset, TrainPolicy policy,
    int n_lo = 2, int n_hi = 10);

// ---------------------------------------------------------------------------
// Estimator sweep (Fig. 3 / Table II analogue)
// ---------------------------------------------------------------------------

struct SweepConfig {
    double grid_lo = -0.5;
    double grid_hi = 0.5;
    double grid_step = 0.025;
    int reps = 10;
    std::optional<double> snr_db;  // nullopt = noiseless
    double capture_s = 0.25;       // per-measurement capture length
    std::uint64_t seed = 1;
    EstimatorConfig estimator;
};

struct SweepRow {
    double delta_ppm = 0.0;
    double mean_error = 0.0;  // accuracy (bias) at this grid point
    double std_error = 0.0;   // precision at this grid point
    int failures = 0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    double pooled_bias = 0.0;
    double pooled_std = 0.0;
    int total_failures = 0;
};

SweepResult run_sweep(Method estimator, const SweepConfig& cfg);

}  // namespace clocklab
