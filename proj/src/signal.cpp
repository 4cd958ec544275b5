#include "clocklab/signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace clocklab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kPssBaseRate = 1.92e6;
constexpr int kPssIdftSize = 128;

double mean_power(std::span<const cfloat> x) {
    double acc = 0.0;
    for (const auto& v : x) {
        acc += double(v.real()) * v.real() + double(v.imag()) * v.imag();
    }
    return x.empty() ? 0.0 : acc / double(x.size());
}

// Circular complex Gaussian noise at the SNR implied by the buffer's own
// mean power. Serial draw order keeps buffers bit-identical per seed.
void add_noise(std::vector<cfloat>& x, double snr_db, std::uint64_t seed) {
    const double p_sig = mean_power(x);
    const double p_noise = p_sig / std::pow(10.0, snr_db / 10.0);
    const double sigma = std::sqrt(p_noise / 2.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma);
    for (auto& v : x) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        v += cfloat(float(re), float(im));
    }
}

void validate_channel(const ChannelConfig& cfg) {
    if (std::abs(cfg.ppm) > 25.0) {
        throw std::invalid_argument("ChannelConfig: |ppm| above the 25 ppm stock-oscillator bound");
    }
    if (cfg.include_carrier_offset && !(cfg.f_carrier_nom_hz > 0.0)) {
        throw std::invalid_argument("ChannelConfig: carrier model needs a positive carrier frequency");
    }
}

}  // namespace

PssTemplate make_pss_template(int root_index, double f_s_nom_hz) {
    if (root_index != 25 && root_index != 29 && root_index != 34) {
        throw std::invalid_argument("make_pss_template: root must be 25, 29 or 34");
    }
    if (!(f_s_nom_hz >= kPssBaseRate)) {
        throw std::invalid_argument("make_pss_template: sample rate below 1.92 Msps");
    }

    // d_u(n) = exp(-j pi u n(n+1)/63) for n = 0..30,
    //          exp(-j pi u (n+1)(n+2)/63) for n = 31..61.
    std::vector<cdouble> d(62);
    for (int n = 0; n <= 30; ++n) {
        const double ph = -kPi * double(root_index) * n * (n + 1) / 63.0;
        d[std::size_t(n)] = cdouble(std::cos(ph), std::sin(ph));
    }
    for (int n = 31; n <= 61; ++n) {
        const double ph = -kPi * double(root_index) * (n + 1) * (n + 2) / 63.0;
        d[std::size_t(n)] = cdouble(std::cos(ph), std::sin(ph));
    }

    // 62 central subcarriers around a punctured DC bin.
    std::vector<cdouble> freq(kPssIdftSize, cdouble(0.0, 0.0));
    for (int k = 0; k < 31; ++k) freq[std::size_t(kPssIdftSize - 31 + k)] = d[std::size_t(k)];
    for (int k = 0; k < 31; ++k) freq[std::size_t(1 + k)] = d[std::size_t(31 + k)];

    FftPlan<double> plan(kPssIdftSize);
    plan.inverse(freq.data());

    std::vector<cfloat> base(kPssIdftSize);
    for (int i = 0; i < kPssIdftSize; ++i) {
        base[std::size_t(i)] = cfloat(float(freq[std::size_t(i)].real()),
                                      float(freq[std::size_t(i)].imag()));
    }

    PssTemplate out;
    out.root_index = root_index;
    out.f_s_nom_hz = f_s_nom_hz;
    out.samples = (f_s_nom_hz == kPssBaseRate)
                      ? std::move(base)
                      : resample_sinc(base, f_s_nom_hz / kPssBaseRate);

    double energy = 0.0;
    for (const auto& v : out.samples) {
        energy += double(v.real()) * v.real() + double(v.imag()) * v.imag();
    }
    const float scale = float(1.0 / std::sqrt(energy));
    for (auto& v : out.samples) v *= scale;
    return out;
}

IqBuffer gen_single_tone(double f_sine_nom_hz, const ChannelConfig& cfg,
                         double f_s_nom_hz, double duration_s) {
    validate_channel(cfg);
    if (!(f_s_nom_hz > 0.0) || !(f_sine_nom_hz > 0.0) || f_sine_nom_hz >= f_s_nom_hz / 2.0) {
        throw std::invalid_argument("gen_single_tone: tone must sit inside Nyquist");
    }
    if (!(duration_s > 0.0)) {
        throw std::invalid_argument("gen_single_tone: duration must be positive");
    }

    const double delta = cfg.ppm;
    const double ratio = 1.0 + delta * 1e-6;
    const double carrier_shift =
        cfg.include_carrier_offset ? cfg.f_carrier_nom_hz * delta * 1e-6 : 0.0;
    const double f_baseband = f_sine_nom_hz - carrier_shift;
    const double f_app = f_baseband / ratio;
    if (std::abs(f_app) >= f_s_nom_hz / 2.0) {
        throw std::invalid_argument("gen_single_tone: apparent frequency aliases");
    }

    const std::size_t n_nom = std::size_t(std::llround(duration_s * f_s_nom_hz));
    std::vector<cfloat> nominal(n_nom);
    const double step = 2.0 * kPi * f_baseband / f_s_nom_hz;
    #pragma omp parallel for schedule(static)
    for (long n = 0; n < long(n_nom); ++n) {
        const double ph = std::fmod(step * double(n), 2.0 * kPi);
        nominal[std::size_t(n)] = cfloat(float(std::cos(ph)), float(std::sin(ph)));
    }

    IqBuffer buf;
    buf.f_s_nom_hz = f_s_nom_hz;
    buf.duration_s = duration_s;
    buf.samples = (delta == 0.0) ? std::move(nominal) : resample_sinc(nominal, ratio);
    if (cfg.snr_db) add_noise(buf.samples, *cfg.snr_db, cfg.seed);
    return buf;
}

IqBuffer gen_pss_train(const PssTemplate& tmpl, const ChannelConfig& cfg,
                       double duration_s) {
    validate_channel(cfg);
    if (!(duration_s >= 3.0 * tmpl.period_s)) {
        throw std::invalid_argument("gen_pss_train: duration must cover at least 3 PSS periods");
    }

    const double f_s = tmpl.f_s_nom_hz;
    const std::size_t n_nom = std::size_t(std::llround(duration_s * f_s));
    const std::size_t spacing = std::size_t(std::llround(f_s * tmpl.period_s));
    std::vector<cfloat> nominal(n_nom, cfloat(0.f, 0.f));
    for (std::size_t k = 0; k * spacing + tmpl.samples.size() <= n_nom; ++k) {
        std::copy(tmpl.samples.begin(), tmpl.samples.end(),
                  nominal.begin() + long(k * spacing));
    }

    const double ratio = 1.0 + cfg.ppm * 1e-6;
    IqBuffer buf;
    buf.f_s_nom_hz = f_s;
    buf.duration_s = duration_s;
    buf.samples = (cfg.ppm == 0.0) ? std::move(nominal) : resample_sinc(nominal, ratio);
    if (cfg.snr_db) add_noise(buf.samples, *cfg.snr_db, cfg.seed);
    return buf;
}

IqBuffer resample(const IqBuffer& buf, double ratio) {
    if (!(ratio >= 0.9 && ratio <= 1.1)) {
        throw std::invalid_argument("resample: ratio outside [0.9, 1.1]");
    }
    IqBuffer out;
    out.f_s_nom_hz = buf.f_s_nom_hz;
    out.duration_s = buf.duration_s;
    out.samples = resample_sinc(buf.samples, ratio);
    return out;
}

void save_iq(const IqBuffer& buf, const ChannelConfig& cfg,
             const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("save_iq: cannot open " + path.string());
    static_assert(sizeof(cfloat) == 8, "cfloat must be two packed float32");
    f.write(reinterpret_cast<const char*>(buf.samples.data()),
            std::streamsize(buf.samples.size() * sizeof(cfloat)));
    if (!f) throw std::runtime_error("save_iq: write failed for " + path.string());

    nlohmann::json meta;
    meta["f_s_nom"] = buf.f_s_nom_hz;
    meta["duration_s"] = buf.duration_s;
    meta["ppm"] = cfg.ppm;
    if (cfg.snr_db) meta["snr_db"] = *cfg.snr_db; else meta["snr_db"] = nullptr;
    meta["seed"] = cfg.seed;
    std::ofstream m(path.string() + ".json", std::ios::trunc);
    if (!m) throw std::runtime_error("save_iq: cannot open sidecar for " + path.string());
    m << meta.dump(2) << "\n";
}

IqBuffer load_iq(const std::filesystem::path& path) {
    std::ifstream m(path.string() + ".json");
    if (!m) throw std::runtime_error("load_iq: missing sidecar for " + path.string());
    nlohmann::json meta = nlohmann::json::parse(m);

    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_iq: cannot open " + path.string());
    f.seekg(0, std::ios::end);
    const auto bytes = f.tellg();
    f.seekg(0);
    if (bytes < 0 || bytes % sizeof(cfloat) != 0) {
        throw std::runtime_error("load_iq: truncated IQ file " + path.string());
    }
    IqBuffer buf;
    buf.samples.resize(std::size_t(bytes) / sizeof(cfloat));
    f.read(reinterpret_cast<char*>(buf.samples.data()), bytes);
    if (!f) throw std::runtime_error("load_iq: read failed for " + path.string());
    buf.f_s_nom_hz = meta.at("f_s_nom").get<double>();
    buf.duration_s = meta.value("duration_s",
                                double(buf.samples.size()) / buf.f_s_nom_hz);
    return buf;
}

}  // namespace clocklab
