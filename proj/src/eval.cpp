#include "clocklab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace clocklab {

namespace {

constexpr std::size_t kMinutesPerDay = 1440;

// Feature matrix (temperature, time-of-day in [0,1]) for a record range.
std::vector<double> feature_matrix(std::span<const MeasurementRecord> records) {
    std::vector<double> f;
    f.reserve(records.size() * 2);
    for (const auto& r : records) {
        f.push_back(r.temperature_c);
        f.push_back(std::fmod(r.timestamp_s, 86400.0) / 86400.0);
    }
    return f;
}

// Stride-1 training windows ending at records[lo..hi), targets from the
// LTE measurement column.
TrainingBatch make_batch(std::span<const MeasurementRecord> records,
                         std::size_t lo, std::size_t hi, int seq_len) {
    const std::size_t L = std::size_t(seq_len);
    TrainingBatch batch;
    for (std::size_t k = std::max(lo, L - 1); k < hi; ++k) {
        if (!records[k].lte_ppm) continue;
        for (std::size_t t = k - L + 1; t <= k; ++t) {
            batch.windows.push_back(records[t].temperature_c);
            batch.windows.push_back(std::fmod(records[t].timestamp_s, 86400.0) / 86400.0);
        }
        batch.targets.push_back(*records[k].lte_ppm);
        ++batch.count;
    }
    return batch;
}

double require_true_ppm(const MeasurementRecord& r) {
    if (!r.true_ppm) {
        throw std::invalid_argument("run_compensation: dataset lacks the true_ppm column");
    }
    return *r.true_ppm;
}

}  // namespace

void OscillatorProfile::validate() const {
    for (double t = -30.0; t <= 85.0; t += 0.5) {
        if (std::abs(ppm_at(t)) > 0.5) {
            throw std::invalid_argument("OscillatorProfile: |ppm| exceeds 0.5 within -30..85 C");
        }
    }
    if (!(tone_noise_ppm >= 0.0) || !(lte_noise_ppm >= 0.0)) {
        throw std::invalid_argument("OscillatorProfile: noise stds must be non-negative");
    }
}

std::vector<MeasurementRecord> gen_synthetic_dataset(const OscillatorProfile& profile,
                                                     const TempModel& temp,
                                                     double duration_h,
                                                     std::uint64_t seed) {
    if (!(duration_h >= 48.0)) {
        throw std::invalid_argument("gen_synthetic_dataset: need at least 48 h (training day + test horizon)");
    }
    profile.validate();
    const std::size_t n = std::size_t(std::llround(duration_h * 60.0));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<MeasurementRecord> records(n);
    double ar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = 60.0 * double(i);
        if (i > 0) ar = temp.ar_phi * ar + temp.ar_sigma_c * gauss(rng);
        const double ramp = std::max(0.0, t / 86400.0 - temp.trend_start_h / 24.0);
        const double temperature =
            temp.mean_c + temp.trend_c_per_day * ramp +
            temp.amplitude_c * std::sin(2.0 * std::numbers::pi * t / 86400.0 + temp.phase_rad) +
            ar;
        const double true_ppm = profile.ppm_at(temperature);
        MeasurementRecord& r = records[i];
        r.timestamp_s = t;
        r.temperature_c = temperature;
        r.true_ppm = true_ppm;
        r.lte_ppm = true_ppm + profile.lte_noise_ppm * gauss(rng);
        r.tone_ppm = true_ppm + profile.tone_noise_ppm * gauss(rng);
    }
    return records;
}

const char* comp_method_name(CompMethod m) {
    switch (m) {
        case CompMethod::None: return "none";
        case CompMethod::ConstantTone: return "constant-tone";
        case CompMethod::ConstantLte: return "constant-lte";
        case CompMethod::OnlineLstm: return "online-lstm";
        case CompMethod::Oracle: return "oracle";
    }
    throw std::invalid_argument("comp_method_name: unknown method");
}

CompMethod comp_method_from_name(const std::string& name) {
    if (name == "none") return CompMethod::None;
    if (name == "constant-tone") return CompMethod::ConstantTone;
    if (name == "constant-lte") return CompMethod::ConstantLte;
    if (name == "online-lstm") return CompMethod::OnlineLstm;
    if (name == "oracle") return CompMethod::Oracle;
    throw std::invalid_argument("unknown compensation method '" + name + "'");
}

namespace {

// Shared implementation: the initially trained model is expensive relative
// to one online pass, so interval scans and n_online sweeps reuse it.
struct LstmEvaluator {
    LstmConfig cfg;
    LstmModel initial;

    LstmEvaluator(std::span<const MeasurementRecord> dataset,
                  const TrainPolicy& policy, const LstmConfig& lstm_cfg)
        : cfg(lstm_cfg), initial(lstm_cfg, policy.seed) {
        const std::size_t day = std::min<std::size_t>(kMinutesPerDay, dataset.size());
        const auto features = feature_matrix(dataset.subspan(0, day));
        initial.fit_normalization(features, day);
        TrainPolicy init_policy = policy;
        train_initial(initial, make_batch(dataset, 0, day, cfg.seq_len), init_policy);
    }

    // Predictions over the test horizon with online updates every dt.
    std::vector<double> predict(std::span<const MeasurementRecord> dataset,
                                TrainPolicy policy) const {
        LstmModel model = initial;
        const std::size_t h0 = kMinutesPerDay;
        const std::size_t horizon = dataset.size() - h0;
        const std::size_t dt = std::size_t(policy.dt_online_min);
        std::vector<double> window(std::size_t(cfg.seq_len) * 2);
        std::vector<double> pred(horizon);
        for (std::size_t k = 0; k < horizon; ++k) {
            const std::size_t g = h0 + k;
            if (k > 0 && k % dt == 0) {
                online_update(model, make_batch(dataset, g - dt + 1, g + 1, cfg.seq_len),
                              policy);
            }
            for (std::size_t t = 0; t < std::size_t(cfg.seq_len); ++t) {
                const auto& r = dataset[g - std::size_t(cfg.seq_len) + 1 + t];
                window[2 * t] = r.temperature_c;
                window[2 * t + 1] = std::fmod(r.timestamp_s, 86400.0) / 86400.0;
            }
            pred[k] = model.forward(window);
        }
        return pred;
    }
};

CompensationRun finish_run(CompMethod method, const TrainPolicy& policy,
                           std::span<const MeasurementRecord> dataset,
                           std::vector<double> predicted) {
    const std::size_t h0 = kMinutesPerDay;
    CompensationRun run;
    run.method = method;
    run.policy = policy;
    run.predicted_ppm = std::move(predicted);
    run.residual_ppm.resize(run.predicted_ppm.size());
    for (std::size_t k = 0; k < run.residual_ppm.size(); ++k) {
        run.residual_ppm[k] = require_true_ppm(dataset[h0 + k]) - run.predicted_ppm[k];
    }
    run.offsets = integrate_offsets(run.residual_ppm, policy.dt_online_min);
    return run;
}

std::vector<double> constant_hold_predictions(std::span<const MeasurementRecord> dataset,
                                              CompMethod method,
                                              const TrainPolicy& policy) {
    const std::size_t h0 = kMinutesPerDay;
    const std::size_t horizon = dataset.size() - h0;
    const std::size_t dt = std::size_t(policy.dt_online_min);
    std::vector<double> pred(horizon);
    for (std::size_t k = 0; k < horizon; ++k) {
        const auto& at_resync = dataset[h0 + (k / dt) * dt];
        const std::optional<double>& m =
            (method == CompMethod::ConstantTone) ? at_resync.tone_ppm : at_resync.lte_ppm;
        if (!m) {
            throw std::invalid_argument("run_compensation: missing measurement at a resync minute");
        }
        pred[k] = *m;
    }
    return pred;
}

void check_horizon(std::span<const MeasurementRecord> dataset, const TrainPolicy& policy) {
    if (policy.dt_online_min < 1) {
        throw std::invalid_argument("run_compensation: dt_online_min must be >= 1");
    }
    if (dataset.size() <= kMinutesPerDay + std::size_t(policy.dt_online_min)) {
        throw std::invalid_argument("run_compensation: dataset must cover the training day plus a test horizon");
    }
}

}  // namespace

CompensationRun run_compensation(std::span<const MeasurementRecord> dataset,
                                 CompMethod method, const TrainPolicy& policy,
                                 const LstmConfig& lstm_cfg) {
    check_horizon(dataset, policy);
    const std::size_t horizon = dataset.size() - kMinutesPerDay;
    switch (method) {
        case CompMethod::None:
            return finish_run(method, policy, dataset, std::vector<double>(horizon, 0.0));
        case CompMethod::Oracle: {
            std::vector<double> pred(horizon);
            for (std::size_t k = 0; k < horizon; ++k) {
                pred[k] = require_true_ppm(dataset[kMinutesPerDay + k]);
            }
            return finish_run(method, policy, dataset, std::move(pred));
        }
        case CompMethod::ConstantTone:
        case CompMethod::ConstantLte:
            return finish_run(method, policy, dataset,
                              constant_hold_predictions(dataset, method, policy));
        case CompMethod::OnlineLstm: {
            LstmEvaluator eval(dataset, policy, lstm_cfg);
            return finish_run(method, policy, dataset, eval.predict(dataset, policy));
        }
    }
    throw std::invalid_argument("run_compensation: unknown method");
}

double CdfSummary::value_at(double p) const {
    if (sorted_abs_us.empty()) throw std::invalid_argument("CdfSummary: empty");
    if (p <= 0.0) return sorted_abs_us.front();
    if (p >= 1.0) return sorted_abs_us.back();
    const std::size_t idx = std::size_t(std::ceil(p * double(sorted_abs_us.size()))) - 1;
    return sorted_abs_us[std::min(idx, sorted_abs_us.size() - 1)];
}

double CdfSummary::prob_at(double v) const {
    if (sorted_abs_us.empty()) throw std::invalid_argument("CdfSummary: empty");
    const auto it = std::upper_bound(sorted_abs_us.begin(), sorted_abs_us.end(), v);
    return double(it - sorted_abs_us.begin()) / double(sorted_abs_us.size());
}

CdfSummary cdf_of(const CompensationRun& run) {
    if (run.offsets.offset_us.empty()) {
        throw std::invalid_argument("cdf_of: run has no offsets");
    }
    CdfSummary cdf;
    cdf.sorted_abs_us.reserve(run.offsets.offset_us.size());
    for (double v : run.offsets.offset_us) cdf.sorted_abs_us.push_back(std::abs(v));
    std::sort(cdf.sorted_abs_us.begin(), cdf.sorted_abs_us.end());
    return cdf;
}

namespace {

double satisfaction_of(std::span<const double> residual, int dt, double threshold_us) {
    const OffsetSeries series = integrate_offsets(residual, dt);
    std::size_t ok = 0;
    for (double v : series.offset_us) {
        if (std::abs(v) <= threshold_us) ++ok;
    }
    return double(ok) / double(series.offset_us.size());
}

}  // namespace

int resync_interval_for(std::span<const MeasurementRecord> dataset,
                        CompMethod method, TrainPolicy policy,
                        double threshold_us, double prob, int cap_min) {
    if (!(threshold_us > 0.0) || !(prob > 0.0 && prob < 1.0) || cap_min < 1) {
        throw std::invalid_argument("resync_interval_for: bad threshold/prob/cap");
    }
    policy.dt_online_min = 1;
    check_horizon(dataset, policy);

    const std::size_t horizon = dataset.size() - kMinutesPerDay;
    std::vector<double> truth(horizon);
    for (std::size_t k = 0; k < horizon; ++k) {
        truth[k] = require_true_ppm(dataset[kMinutesPerDay + k]);
    }

    // The satisfaction curve is not guaranteed monotone in dt (the online
    // model itself changes with the update cadence), so scan the full grid.
    int best = 0;
    if (method == CompMethod::OnlineLstm) {
        const LstmEvaluator eval(dataset, policy, LstmConfig{});
        std::vector<int> satisfied(std::size_t(cap_min) + 1, 0);
        #pragma omp parallel for schedule(dynamic)
        for (int dt = 1; dt <= cap_min; ++dt) {
            TrainPolicy p = policy;
            p.dt_online_min = dt;
            const auto pred = eval.predict(dataset, p);
            std::vector<double> residual(pred.size());
            for (std::size_t k = 0; k < pred.size(); ++k) {
                residual[k] = truth[k] - pred[k];
            }
            satisfied[std::size_t(dt)] =
                satisfaction_of(residual, dt, threshold_us) >= prob ? 1 : 0;
        }
        for (int dt = 1; dt <= cap_min; ++dt) {
            if (satisfied[std::size_t(dt)]) best = dt;
        }
        return best;
    }

    for (int dt = 1; dt <= cap_min; ++dt) {
        TrainPolicy p = policy;
        p.dt_online_min = dt;
        const CompensationRun run = run_compensation(dataset, method, p);
        if (satisfaction_of(run.residual_ppm, dt, threshold_us) >= prob) best = dt;
    }
    return best;
}

std::vector<std::pair<int, double>> sweep_n_online(
    std::span<const MeasurementRecord> dataset, TrainPolicy policy,
    int n_lo, int n_hi) {
    if (n_lo < 1 || n_hi < n_lo) {
        throw std::invalid_argument("sweep_n_online: bad grid");
    }
    check_horizon(dataset, policy);
    const std::size_t horizon = dataset.size() - kMinutesPerDay;
    std::vector<double> truth(horizon);
    for (std::size_t k = 0; k < horizon; ++k) {
        truth[k] = require_true_ppm(dataset[kMinutesPerDay + k]);
    }
    const LstmEvaluator eval(dataset, policy, LstmConfig{});
    std::vector<std::pair<int, double>> curve(std::size_t(n_hi - n_lo + 1));
    #pragma omp parallel for schedule(dynamic)
    for (int n = n_lo; n <= n_hi; ++n) {
        TrainPolicy p = policy;
        p.n_online = n;
        const auto pred = eval.predict(dataset, p);
        std::vector<double> residual(pred.size());
        for (std::size_t k = 0; k < pred.size(); ++k) {
            residual[k] = truth[k] - pred[k];
        }
        const OffsetSeries series = integrate_offsets(residual, policy.dt_online_min);
        double acc = 0.0;
        for (double v : series.offset_us) acc += std::abs(v);
        curve[std::size_t(n - n_lo)] = {n, acc / double(series.offset_us.size())};
    }
    return curve;
}

SweepResult run_sweep(Method estimator, const SweepConfig& cfg) {
    if (cfg.reps < 1) throw std::invalid_argument("run_sweep: reps must be >= 1");
    if (!(cfg.grid_step > 0.0) || cfg.grid_hi < cfg.grid_lo) {
        throw std::invalid_argument("run_sweep: bad grid");
    }

    const int n_points = int(std::llround((cfg.grid_hi - cfg.grid_lo) / cfg.grid_step)) + 1;
    PssTemplate tmpl;
    if (estimator == Method::LtePss) {
        tmpl = make_pss_template(25, cfg.estimator.f_s_nom_hz);
    }

    SweepResult result;
    result.rows.resize(std::size_t(n_points));
    std::vector<double> pooled;

    for (int gi = 0; gi < n_points; ++gi) {
        const double delta = cfg.grid_lo + cfg.grid_step * double(gi);
        SweepRow& row = result.rows[std::size_t(gi)];
        row.delta_ppm = delta;
        std::vector<double> errors;
        for (int rep = 0; rep < cfg.reps; ++rep) {
            ChannelConfig ch;
            ch.ppm = delta;
            ch.snr_db = cfg.snr_db;
            ch.include_carrier_offset = cfg.estimator.include_carrier_offset;
            ch.f_carrier_nom_hz = cfg.estimator.f_carrier_nom_hz;
            ch.seed = cfg.seed + std::uint64_t(gi) * 1000003ULL + std::uint64_t(rep);
            try {
                PpmMeasurement m;
                if (estimator == Method::SingleTone) {
                    const IqBuffer buf = gen_single_tone(cfg.estimator.f_sine_nom_hz, ch,
                                                         cfg.estimator.f_s_nom_hz,
                                                         cfg.capture_s);
                    m = estimate_tone_ppm(buf, cfg.estimator);
                } else {
                    const IqBuffer buf = gen_pss_train(tmpl, ch, cfg.capture_s);
                    m = estimate_lte_ppm(buf, tmpl, cfg.estimator);
                }
                errors.push_back(m.ppm - delta);
            } catch (const MeasurementError&) {
                ++row.failures;
                ++result.total_failures;
            }
        }
        if (!errors.empty()) {
            double mean = 0.0;
            for (double e : errors) mean += e;
            mean /= double(errors.size());
            double var = 0.0;
            for (double e : errors) var += (e - mean) * (e - mean);
            row.mean_error = mean;
            row.std_error = std::sqrt(var / double(errors.size()));
            pooled.insert(pooled.end(), errors.begin(), errors.end());
        }
    }

    if (!pooled.empty()) {
        double mean = 0.0;
        for (double e : pooled) mean += e;
        mean /= double(pooled.size());
        double var = 0.0;
        for (double e : pooled) var += (e - mean) * (e - mean);
        result.pooled_bias = mean;
        result.pooled_std = std::sqrt(var / double(pooled.size()));
    }
    return result;
}

}  // namespace clocklab
