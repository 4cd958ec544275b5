#include "clocklab/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

namespace clocklab {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Per-step activations cached during the forward pass for BPTT.
struct StepCache {
    std::vector<double> z;       // normalized input
    std::vector<double> h_prev, c_prev;
    std::vector<double> i, f, g, o;
    std::vector<double> c, hc;   // new cell state and tanh(c)
};

}  // namespace

LstmModel::LstmModel(const LstmConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
    if (cfg.input_size < 1 || cfg.hidden_size < 1 || cfg.seq_len < 1) {
        throw std::invalid_argument("LstmModel: all dimensions must be positive");
    }
    const std::size_t H = std::size_t(cfg.hidden_size);
    const std::size_t I = std::size_t(cfg.input_size);
    wx_.resize(4 * H * I);
    wh_.resize(4 * H * H);
    b_.resize(4 * H);
    wy_.resize(H);
    mu_.assign(I, 0.0);
    sd_.assign(I, 1.0);

    std::mt19937_64 rng(init_seed);
    const double bound = 1.0 / std::sqrt(double(cfg.hidden_size));
    std::uniform_real_distribution<double> uni(-bound, bound);
    for (auto& v : wx_) v = uni(rng);
    for (auto& v : wh_) v = uni(rng);
    for (auto& v : b_) v = uni(rng);
    for (auto& v : wy_) v = uni(rng);
    by_ = uni(rng);
    // Forget-gate bias offset keeps early memory open.
    for (std::size_t j = H; j < 2 * H; ++j) b_[j] += 1.0;

    m_wx_.assign(wx_.size(), 0.0); v_wx_.assign(wx_.size(), 0.0);
    m_wh_.assign(wh_.size(), 0.0); v_wh_.assign(wh_.size(), 0.0);
    m_b_.assign(b_.size(), 0.0);   v_b_.assign(b_.size(), 0.0);
    m_wy_.assign(wy_.size(), 0.0); v_wy_.assign(wy_.size(), 0.0);
}

void LstmModel::fit_normalization(std::span<const double> features, std::size_t rows) {
    if (frozen_) {
        throw std::logic_error("LstmModel: normalization statistics are frozen");
    }
    const std::size_t I = std::size_t(cfg_.input_size);
    if (rows == 0 || features.size() != rows * I) {
        throw std::invalid_argument("fit_normalization: bad feature matrix shape");
    }
    for (std::size_t c = 0; c < I; ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < rows; ++r) sum += features[r * I + c];
        const double mean = sum / double(rows);
        double var = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            const double d = features[r * I + c] - mean;
            var += d * d;
        }
        mu_[c] = mean;
        sd_[c] = std::sqrt(var / double(rows));
        if (sd_[c] == 0.0) sd_[c] = 1.0;
    }
    frozen_ = true;
}

double LstmModel::forward(std::span<const double> window) const {
    const std::size_t H = std::size_t(cfg_.hidden_size);
    const std::size_t I = std::size_t(cfg_.input_size);
    const std::size_t L = std::size_t(cfg_.seq_len);
    if (window.size() != L * I) {
        throw std::invalid_argument("forward: window must be seq_len x input_size");
    }

    std::vector<double> h(H, 0.0), c(H, 0.0), z(I), a(4 * H);
    for (std::size_t t = 0; t < L; ++t) {
        for (std::size_t k = 0; k < I; ++k) {
            z[k] = (window[t * I + k] - mu_[k]) / sd_[k];
        }
        for (std::size_t j = 0; j < 4 * H; ++j) {
            double acc = b_[j];
            const double* wxr = &wx_[j * I];
            for (std::size_t k = 0; k < I; ++k) acc += wxr[k] * z[k];
            const double* whr = &wh_[j * H];
            for (std::size_t k = 0; k < H; ++k) acc += whr[k] * h[k];
            a[j] = acc;
        }
        for (std::size_t j = 0; j < H; ++j) {
            const double ig = sigmoid(a[j]);
            const double fg = sigmoid(a[H + j]);
            const double gg = std::tanh(a[2 * H + j]);
            const double og = sigmoid(a[3 * H + j]);
            c[j] = fg * c[j] + ig * gg;
            h[j] = og * std::tanh(c[j]);
        }
    }
    double y = by_;
    for (std::size_t j = 0; j < H; ++j) y += wy_[j] * h[j];
    return y;
}

LstmGradients LstmModel::backward(std::span<const double> window, double target,
                                  double* loss_out) const {
    const std::size_t H = std::size_t(cfg_.hidden_size);
    const std::size_t I = std::size_t(cfg_.input_size);
    const std::size_t L = std::size_t(cfg_.seq_len);
    if (window.size() != L * I) {
        throw std::invalid_argument("backward: window must be seq_len x input_size");
    }

    // Forward with caches.
    std::vector<StepCache> steps(L);
    std::vector<double> h(H, 0.0), c(H, 0.0), a(4 * H);
    for (std::size_t t = 0; t < L; ++t) {
        StepCache& s = steps[t];
        s.z.resize(I);
        for (std::size_t k = 0; k < I; ++k) {
            s.z[k] = (window[t * I + k] - mu_[k]) / sd_[k];
        }
        s.h_prev = h;
        s.c_prev = c;
        for (std::size_t j = 0; j < 4 * H; ++j) {
            double acc = b_[j];
            const double* wxr = &wx_[j * I];
            for (std::size_t k = 0; k < I; ++k) acc += wxr[k] * s.z[k];
            const double* whr = &wh_[j * H];
            for (std::size_t k = 0; k < H; ++k) acc += whr[k] * h[k];
            a[j] = acc;
        }
        s.i.resize(H); s.f.resize(H); s.g.resize(H); s.o.resize(H);
        s.c.resize(H); s.hc.resize(H);
        for (std::size_t j = 0; j < H; ++j) {
            s.i[j] = sigmoid(a[j]);
            s.f[j] = sigmoid(a[H + j]);
            s.g[j] = std::tanh(a[2 * H + j]);
            s.o[j] = sigmoid(a[3 * H + j]);
            s.c[j] = s.f[j] * c[j] + s.i[j] * s.g[j];
            s.hc[j] = std::tanh(s.c[j]);
            c[j] = s.c[j];
            h[j] = s.o[j] * s.hc[j];
        }
    }
    double y = by_;
    for (std::size_t j = 0; j < H; ++j) y += wy_[j] * h[j];
    const double err = y - target;
    if (loss_out) *loss_out = err * err;

    LstmGradients g;
    g.wx.assign(wx_.size(), 0.0);
    g.wh.assign(wh_.size(), 0.0);
    g.b.assign(b_.size(), 0.0);
    g.wy.assign(wy_.size(), 0.0);

    const double dy = 2.0 * err;
    g.by = dy;
    std::vector<double> dh(H), dc(H, 0.0), da(4 * H);
    for (std::size_t j = 0; j < H; ++j) {
        g.wy[j] = dy * h[j];
        dh[j] = dy * wy_[j];
    }

    for (std::size_t t = L; t-- > 0;) {
        const StepCache& s = steps[t];
        for (std::size_t j = 0; j < H; ++j) {
            const double do_ = dh[j] * s.hc[j];
            const double dcj = dc[j] + dh[j] * s.o[j] * (1.0 - s.hc[j] * s.hc[j]);
            const double di = dcj * s.g[j];
            const double df = dcj * s.c_prev[j];
            const double dg = dcj * s.i[j];
            da[j] = di * s.i[j] * (1.0 - s.i[j]);
            da[H + j] = df * s.f[j] * (1.0 - s.f[j]);
            da[2 * H + j] = dg * (1.0 - s.g[j] * s.g[j]);
            da[3 * H + j] = do_ * s.o[j] * (1.0 - s.o[j]);
            dc[j] = dcj * s.f[j];
        }
        for (std::size_t j = 0; j < 4 * H; ++j) {
            double* gwx = &g.wx[j * I];
            for (std::size_t k = 0; k < I; ++k) gwx[k] += da[j] * s.z[k];
            double* gwh = &g.wh[j * H];
            for (std::size_t k = 0; k < H; ++k) gwh[k] += da[j] * s.h_prev[k];
            g.b[j] += da[j];
        }
        std::fill(dh.begin(), dh.end(), 0.0);
        for (std::size_t j = 0; j < 4 * H; ++j) {
            const double* whr = &wh_[j * H];
            for (std::size_t k = 0; k < H; ++k) dh[k] += whr[k] * da[j];
        }
    }
    return g;
}

LstmGradients LstmModel::backward_batch(const TrainingBatch& batch) const {
    const std::size_t wlen = std::size_t(cfg_.seq_len) * std::size_t(cfg_.input_size);
    LstmGradients sum;
    sum.wx.assign(wx_.size(), 0.0);
    sum.wh.assign(wh_.size(), 0.0);
    sum.b.assign(b_.size(), 0.0);
    sum.wy.assign(wy_.size(), 0.0);
    for (std::size_t s = 0; s < batch.count; ++s) {
        const LstmGradients g = backward(
            std::span<const double>(batch.windows).subspan(s * wlen, wlen),
            batch.targets[s]);
        for (std::size_t k = 0; k < sum.wx.size(); ++k) sum.wx[k] += g.wx[k];
        for (std::size_t k = 0; k < sum.wh.size(); ++k) sum.wh[k] += g.wh[k];
        for (std::size_t k = 0; k < sum.b.size(); ++k) sum.b[k] += g.b[k];
        for (std::size_t k = 0; k < sum.wy.size(); ++k) sum.wy[k] += g.wy[k];
        sum.by += g.by;
    }
    return sum;
}

void LstmModel::adam_step(const LstmGradients& grad, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++adam_t_;
    const double c1 = 1.0 - std::pow(b1, double(adam_t_));
    const double c2 = 1.0 - std::pow(b2, double(adam_t_));
    auto update = [&](std::vector<double>& p, std::vector<double>& m,
                      std::vector<double>& v, const std::vector<double>& g) {
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            p[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
        }
    };
    update(wx_, m_wx_, v_wx_, grad.wx);
    update(wh_, m_wh_, v_wh_, grad.wh);
    update(b_, m_b_, v_b_, grad.b);
    update(wy_, m_wy_, v_wy_, grad.wy);
    m_by_ = b1 * m_by_ + (1.0 - b1) * grad.by;
    v_by_ = b2 * v_by_ + (1.0 - b2) * grad.by * grad.by;
    by_ -= lr * (m_by_ / c1) / (std::sqrt(v_by_ / c2) + eps);
}

bool LstmModel::parameters_finite() const {
    auto ok = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    return ok(wx_) && ok(wh_) && ok(b_) && ok(wy_) && std::isfinite(by_);
}

namespace {

void run_epochs(LstmModel& model, const TrainingBatch& batch, int epochs,
                double lr, std::mt19937_64& rng) {
    const std::size_t wlen =
        std::size_t(model.config().seq_len) * std::size_t(model.config().input_size);
    std::vector<std::size_t> order(batch.count);
    std::iota(order.begin(), order.end(), std::size_t(0));
    for (int e = 0; e < epochs; ++e) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t s : order) {
            const LstmGradients g = model.backward(
                std::span<const double>(batch.windows).subspan(s * wlen, wlen),
                batch.targets[s]);
            model.adam_step(g, lr);
        }
    }
}

double batch_loss(const LstmModel& model, const TrainingBatch& batch) {
    const std::size_t wlen =
        std::size_t(model.config().seq_len) * std::size_t(model.config().input_size);
    double loss = 0.0;
    for (std::size_t s = 0; s < batch.count; ++s) {
        const double y = model.forward(
            std::span<const double>(batch.windows).subspan(s * wlen, wlen));
        const double e = y - batch.targets[s];
        loss += e * e;
    }
    return loss;
}

}  // namespace

void train_initial(LstmModel& model, const TrainingBatch& day_one,
                   const TrainPolicy& policy) {
    if (day_one.count == 0) {
        throw std::invalid_argument("train_initial: empty training batch");
    }
    if (policy.n_initial < 1 || !(policy.lr > 0.0)) {
        throw std::invalid_argument("train_initial: bad policy");
    }
    if (!model.frozen_) {
        // Statistics over every step of every window of the initial data.
        const std::size_t I = std::size_t(model.config().input_size);
        model.fit_normalization(day_one.windows, day_one.windows.size() / I);
    }
    std::mt19937_64 rng(policy.seed);
    run_epochs(model, day_one, policy.n_initial, policy.lr, rng);
}

void online_update(LstmModel& model, const TrainingBatch& new_points,
                   const TrainPolicy& policy) {
    if (new_points.count == 0) return;
    if (policy.n_online < 1 || !(policy.lr > 0.0)) {
        throw std::invalid_argument("online_update: bad policy");
    }
    // Seeded from the policy and the Adam step counter so every update call
    // is deterministic given the model state.
    std::mt19937_64 rng(policy.seed ^ (0x9e3779b97f4a7c15ULL * (model.adam_t_ + 1)));
    run_epochs(model, new_points, policy.n_online, policy.lr, rng);
}

std::vector<double> predict_series(const LstmModel& model,
                                   std::span<const double> features,
                                   std::size_t rows) {
    const std::size_t I = std::size_t(model.config().input_size);
    const std::size_t L = std::size_t(model.config().seq_len);
    if (features.size() != rows * I) {
        throw std::invalid_argument("predict_series: bad feature matrix shape");
    }
    if (rows < L) {
        throw std::invalid_argument("predict_series: horizon shorter than seq_len");
    }
    std::vector<double> out;
    out.reserve(rows - L + 1);
    for (std::size_t r = L - 1; r < rows; ++r) {
        out.push_back(model.forward(features.subspan((r - L + 1) * I, L * I)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Checkpoint
// ---------------------------------------------------------------------------

namespace {

constexpr char kCkptMagic[8] = {'C', 'L', 'K', 'L', 'S', 'T', 'M', '1'};

void put_u64(std::ofstream& f, std::uint64_t v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_vec(std::ofstream& f, const std::vector<double>& v) {
    put_u64(f, v.size());
    f.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
}

std::uint64_t get_u64(std::ifstream& f) {
    std::uint64_t v = 0;
    f.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

std::vector<double> get_vec(std::ifstream& f) {
    std::vector<double> v(get_u64(f));
    f.read(reinterpret_cast<char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
    return v;
}

}  // namespace

void save_checkpoint(const LstmModel& m, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path.string());
    f.write(kCkptMagic, sizeof kCkptMagic);
    put_u64(f, std::uint64_t(m.cfg_.input_size));
    put_u64(f, std::uint64_t(m.cfg_.hidden_size));
    put_u64(f, std::uint64_t(m.cfg_.seq_len));
    put_u64(f, m.frozen_ ? 1 : 0);
    put_u64(f, m.adam_t_);
    put_vec(f, m.wx_); put_vec(f, m.wh_); put_vec(f, m.b_); put_vec(f, m.wy_);
    put_vec(f, {m.by_});
    put_vec(f, m.mu_); put_vec(f, m.sd_);
    put_vec(f, m.m_wx_); put_vec(f, m.m_wh_); put_vec(f, m.m_b_); put_vec(f, m.m_wy_);
    put_vec(f, {m.m_by_});
    put_vec(f, m.v_wx_); put_vec(f, m.v_wh_); put_vec(f, m.v_b_); put_vec(f, m.v_wy_);
    put_vec(f, {m.v_by_});
    if (!f) throw std::runtime_error("save_checkpoint: write failed for " + path.string());
}

LstmModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path.string());
    char magic[8];
    f.read(magic, sizeof magic);
    if (!f || std::memcmp(magic, kCkptMagic, sizeof magic) != 0) {
        throw std::runtime_error("load_checkpoint: bad magic in " + path.string());
    }
    LstmConfig cfg;
    cfg.input_size = int(get_u64(f));
    cfg.hidden_size = int(get_u64(f));
    cfg.seq_len = int(get_u64(f));
    LstmModel m(cfg, 0);
    m.frozen_ = get_u64(f) != 0;
    m.adam_t_ = get_u64(f);
    m.wx_ = get_vec(f); m.wh_ = get_vec(f); m.b_ = get_vec(f); m.wy_ = get_vec(f);
    m.by_ = get_vec(f).at(0);
    m.mu_ = get_vec(f); m.sd_ = get_vec(f);
    m.m_wx_ = get_vec(f); m.m_wh_ = get_vec(f); m.m_b_ = get_vec(f); m.m_wy_ = get_vec(f);
    m.m_by_ = get_vec(f).at(0);
    m.v_wx_ = get_vec(f); m.v_wh_ = get_vec(f); m.v_b_ = get_vec(f); m.v_wy_ = get_vec(f);
    m.v_by_ = get_vec(f).at(0);
    if (!f) throw std::runtime_error("load_checkpoint: truncated file " + path.string());
    return m;
}

// ---------------------------------------------------------------------------
// PACF
// ---------------------------------------------------------------------------

PacfResult pacf(std::span<const double> series, int max_lag) {
    if (max_lag < 1) throw std::invalid_argument("pacf: max_lag must be >= 1");
    const std::size_t n = series.size();
    if (double(n) <= 3.0 * double(max_lag)) {
        throw std::invalid_argument("pacf: series must be longer than 3 * max_lag");
    }

    const double mean = std::accumulate(series.begin(), series.end(), 0.0) / double(n);
    std::vector<double> acov(std::size_t(max_lag) + 1, 0.0);
    for (int k = 0; k <= max_lag; ++k) {
        double acc = 0.0;
        for (std::size_t t = std::size_t(k); t < n; ++t) {
            acc += (series[t] - mean) * (series[t - std::size_t(k)] - mean);
        }
        acov[std::size_t(k)] = acc / double(n);  // biased estimator
    }
    if (acov[0] == 0.0) throw std::invalid_argument("pacf: constant series");

    // Durbin-Levinson: phi[k][k] is the partial autocorrelation at lag k.
    PacfResult result;
    result.values.assign(std::size_t(max_lag) + 1, 0.0);
    result.values[0] = 1.0;
    std::vector<double> phi(std::size_t(max_lag) + 1, 0.0);
    std::vector<double> prev(std::size_t(max_lag) + 1, 0.0);
    double err = acov[0];
    for (int k = 1; k <= max_lag; ++k) {
        double num = acov[std::size_t(k)];
        for (int j = 1; j < k; ++j) num -= prev[std::size_t(j)] * acov[std::size_t(k - j)];
        const double phikk = num / err;
        phi[std::size_t(k)] = phikk;
        for (int j = 1; j < k; ++j) {
            phi[std::size_t(j)] = prev[std::size_t(j)] - phikk * prev[std::size_t(k - j)];
        }
        err *= (1.0 - phikk * phikk);
        result.values[std::size_t(k)] = phikk;
        prev = phi;
    }

    result.confidence = 1.96 / std::sqrt(double(n));
    int lag = 0;
    while (lag < max_lag &&
           std::abs(result.values[std::size_t(lag + 1)]) > result.confidence) {
        ++lag;
    }
    result.selected_lag = lag;
    return result;
}

}  // namespace clocklab
