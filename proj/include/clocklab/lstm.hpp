#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

// Online-learning clock model: a single LSTM layer (24 hidden states, lag 5)
// with a scalar dense head, trained with Adam on (temperature, time-of-day)
// features to predict oscillator ppm. Initial training runs over day-one
// data; online updates continue Adam on the points accrued between
// synchronization events. PACF-based lag selection lives here too.

namespace clocklab {

struct LstmConfig {
    int input_size = 2;
    int hidden_size = 24;
    int seq_len = 5;
};

struct TrainPolicy {
    double lr = 1e-3;
    int n_initial = 25;
    int n_online = 6;
    int dt_online_min = 25;
    std::uint64_t seed = 7;
};

// Windows are row-major [count x seq_len x input_size]; targets are the ppm
// observed at each window's final step.
struct TrainingBatch {
    std::vector<double> windows;
    std::vector<double> targets;
    std::size_t count = 0;
};

// Gradient of the squared-error loss with respect to every parameter,
// matching the model's tensor layout (sum reduction over a batch).
struct LstmGradients {
    std::vector<double> wx, wh, b, wy;
    double by = 0.0;
};

class LstmModel {
public:
    LstmModel() = default;
    LstmModel(const LstmConfig& cfg, std::uint64_t init_seed);

    const LstmConfig& config() const { return cfg_; }

    // Per-feature normalization statistics, frozen at initial training.
    void fit_normalization(std::span<const double> features, std::size_t rows);
    bool normalization_frozen() const { return frozen_; }
    std::span<const double> feature_mean() const { return mu_; }
    std::span<const double> feature_std() const { return sd_; }

    // Forward pass over one raw window (seq_len x input_size, row-major).
    double forward(std::span<const double> window) const;

    // BPTT gradients for one (window, target) pair; loss (pred - target)^2.
    LstmGradients backward(std::span<const double> window, double target,
                           double* loss_out = nullptr) const;

    // Sum-reduced batch gradient.
    LstmGradients backward_batch(const TrainingBatch& batch) const;

    // One Adam step (beta1 0.9, beta2 0.999, eps 1e-8); moments persist.
    void adam_step(const LstmGradients& grad, double lr);

    std::uint64_t adam_steps() const { return adam_t_; }
    bool parameters_finite() const;

    // Raw tensors, exposed for the checkpoint codec and gradient tests.
    std::vector<double>& wx() { return wx_; }
    std::vector<double>& wh() { return wh_; }
    std::vector<double>& b() { return b_; }
    std::vector<double>& wy() { return wy_; }
    double& by() { return by_; }
    const std::vector<double>& wx() const { return wx_; }
    const std::vector<double>& wh() const { return wh_; }
    const std::vector<double>& b() const { return b_; }
    const std::vector<double>& wy() const { return wy_; }
    double by() const { return by_; }

    friend void save_checkpoint(const LstmModel&, const std::filesystem::path&);
    friend LstmModel load_checkpoint(const std::filesystem::path&);
    friend void train_initial(LstmModel&, const TrainingBatch&, const TrainPolicy&);
    friend void online_update(LstmModel&, const TrainingBatch&, const TrainPolicy&);

private:
    LstmConfig cfg_;
    // Gates packed in i, f, g, o order: wx_ is [4H x input], wh_ [4H x H],
    // b_ [4H]; dense head wy_ [H], by_.
    std::vector<double> wx_, wh_, b_, wy_;
    double by_ = 0.0;
    std::vector<double> mu_, sd_;
    bool frozen_ = false;
    // Adam first/second moments, same layout as the parameters.
    std::vector<double> m_wx_, m_wh_, m_b_, m_wy_;
    std::vector<double> v_wx_, v_wh_, v_b_, v_wy_;
    double m_by_ = 0.0, v_by_ = 0.0;
    std::uint64_t adam_t_ = 0;
};

// n_initial shuffled epochs of per-sample Adam over the batch. Fits the
// normalization statistics from the batch if not already frozen.
void train_initial(LstmModel& model, const TrainingBatch& day_one,
                   const TrainPolicy& policy);

// n_online shuffled epochs over only the newly accrued points; Adam moment
// state continues from previous calls. Empty batches are a no-op.
void online_update(LstmModel& model, const TrainingBatch& new_points,
                   const TrainPolicy& policy);

// Sliding-window forward pass over a minute-gridded feature series
// (rows x input_size, row-major): one causal prediction per minute from
// row seq_len-1 onward.
std::vector<double> predict_series(const LstmModel& model,
                                   std::span<const double> features,
                                   std::size_t rows);

// Versioned binary checkpoint (all tensors + normalization + Adam state);
// round-trips bit-exactly. Layout documented in docs/checkpoint-format.md.
void save_checkpoint(const LstmModel& model, const std::filesystem::path& path);
LstmModel load_checkpoint(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// PACF
// ---------------------------------------------------------------------------

struct PacfResult {
    std::vector<double> values;  // partial autocorrelation per lag 0..max_lag
    double confidence = 0.0;     // 1.96 / sqrt(n)
    int selected_lag = 0;        // leading run of significant lags
};

// Sample PACF via the Durbin-Levinson recursion on biased sample
// autocovariances. selected_lag is the smallest L >= 0 whose next lag falls
// inside the confidence band. Requires length > 3 * max_lag.
PacfResult pacf(std::span<const double> series, int max_lag);

}  // namespace clocklab
