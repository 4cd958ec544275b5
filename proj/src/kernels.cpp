#include "clocklab/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace clocklab {

namespace {

constexpr double kPi = std::numbers::pi;

// Modified Bessel function of the first kind, order zero (power series).
double bessel_i0(double x) {
    double term = 1.0, sum = 1.0;
    const double q = 0.25 * x * x;
    for (int k = 1; k < 64; ++k) {
        term *= q / (double(k) * double(k));
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return sum;
}

double sinc(double u) {
    if (u == 0.0) return 1.0;
    const double pu = kPi * u;
    return std::sin(pu) / pu;
}

}  // namespace

double sinc_kernel_tap(double u) {
    const double frac = u / double(kSincHalf);
    const double arg = 1.0 - frac * frac;
    if (arg <= 0.0) return (u == 0.0) ? 1.0 : 0.0;
    static const double i0_beta = bessel_i0(kKaiserBeta);
    return sinc(u) * bessel_i0(kKaiserBeta * std::sqrt(arg)) / i0_beta;
}

// ---------------------------------------------------------------------------
// FFT
// ---------------------------------------------------------------------------

template <typename T>
FftPlan<T>::FftPlan(std::size_t n) : n_(n) {
    if (n == 0 || (n & (n - 1)) != 0) {
        throw std::invalid_argument("FftPlan: size must be a power of two");
    }
    twiddle_.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double ang = -2.0 * kPi * double(k) / double(n);
        twiddle_[k] = std::complex<T>(T(std::cos(ang)), T(std::sin(ang)));
    }
    bitrev_.resize(n);
    std::size_t j = 0;
    bitrev_[0] = 0;
    for (std::size_t i = 1; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        bitrev_[i] = std::uint32_t(j);
    }
}

template <typename T>
void FftPlan<T>::transform(std::complex<T>* d, bool inverse) const {
    const std::size_t n = n_;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = bitrev_[i];
        if (i < j) std::swap(d[i], d[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t stride = n / len;
        const std::size_t blocks = n / len;
        // Early stages have many small independent blocks; late stages have
        // few blocks with long independent butterfly rows. Both partitions
        // assign each element to exactly one thread.
        if (blocks >= 64) {
            #pragma omp parallel for schedule(static)
            for (long b = 0; b < long(blocks); ++b) {
                std::complex<T>* p = d + std::size_t(b) * len;
                for (std::size_t k = 0; k < half; ++k) {
                    std::complex<T> w = twiddle_[k * stride];
                    if (inverse) w = std::conj(w);
                    const std::complex<T> u = p[k];
                    const std::complex<T> v = p[k + half] * w;
                    p[k] = u + v;
                    p[k + half] = u - v;
                }
            }
        } else {
            for (std::size_t b = 0; b < blocks; ++b) {
                std::complex<T>* p = d + b * len;
                #pragma omp parallel for schedule(static)
                for (long k = 0; k < long(half); ++k) {
                    std::complex<T> w = twiddle_[std::size_t(k) * stride];
                    if (inverse) w = std::conj(w);
                    const std::complex<T> u = p[k];
                    const std::complex<T> v = p[k + half] * w;
                    p[k] = u + v;
                    p[k + half] = u - v;
                }
            }
        }
    }
    if (inverse) {
        const T scale = T(1) / T(n);
        #pragma omp parallel for schedule(static)
        for (long i = 0; i < long(n); ++i) d[i] *= scale;
    }
}

template <typename T>
void FftPlan<T>::forward(std::complex<T>* data) const {
    transform(data, false);
}

template <typename T>
void FftPlan<T>::inverse(std::complex<T>* data) const {
    transform(data, true);
}

template class FftPlan<float>;
template class FftPlan<double>;

// ---------------------------------------------------------------------------
// Cross-correlation (overlap-save)
// ---------------------------------------------------------------------------

std::vector<cfloat> cross_correlate(std::span<const cfloat> x,
                                    std::span<const cfloat> tmpl) {
    if (tmpl.empty() || x.size() < tmpl.size()) {
        throw std::invalid_argument("cross_correlate: capture shorter than template");
    }
    const std::size_t tlen = tmpl.size();
    const std::size_t n_out = x.size() - tlen + 1;

    // Block size: power of two giving a healthy valid-output fraction.
    std::size_t block = 1;
    while (block < 16 * tlen) block <<= 1;
    block = std::max<std::size_t>(block, 4096);
    const std::size_t valid = block - tlen + 1;

    FftPlan<float> plan(block);

    // Template spectrum, conjugated once: correlation in the frequency
    // domain is X(f) * conj(T(f)).
    std::vector<cfloat> tspec(block, cfloat(0.f, 0.f));
    std::copy(tmpl.begin(), tmpl.end(), tspec.begin());
    plan.forward(tspec.data());
    for (auto& v : tspec) v = std::conj(v);

    const std::size_t n_blocks = (n_out + valid - 1) / valid;
    std::vector<cfloat> out(n_out);

    #pragma omp parallel
    {
        std::vector<cfloat> seg(block);
        #pragma omp for schedule(static)
        for (long bi = 0; bi < long(n_blocks); ++bi) {
            const std::size_t k0 = std::size_t(bi) * valid;
            const std::size_t avail = std::min(block, x.size() - k0);
            std::copy(x.begin() + long(k0), x.begin() + long(k0 + avail), seg.begin());
            std::fill(seg.begin() + long(avail), seg.end(), cfloat(0.f, 0.f));
            plan.forward(seg.data());
            for (std::size_t i = 0; i < block; ++i) seg[i] *= tspec[i];
            plan.inverse(seg.data());
            const std::size_t count = std::min(valid, n_out - k0);
            std::copy(seg.begin(), seg.begin() + long(count), out.begin() + long(k0));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Resampler
// ---------------------------------------------------------------------------

namespace {

// Polyphase tap table: rows are fractional offsets d = r / kFracRows in
// [0, 1], columns the 16 taps for input offsets i = -(half-1) .. half
// (tap offset u = d - i). Row 0 is an exact unit impulse, so ratio 1.0
// reproduces the input.
constexpr int kFracRows = 4096;

struct SincTable {
    std::vector<float> taps;  // (kFracRows + 1) * kSincTaps
    SincTable() {
        taps.resize(std::size_t(kFracRows + 1) * kSincTaps);
        for (int r = 0; r <= kFracRows; ++r) {
            const double d = double(r) / double(kFracRows);
            for (int c = 0; c < kSincTaps; ++c) {
                const int i = c - (kSincHalf - 1);
                taps[std::size_t(r) * kSincTaps + c] = float(sinc_kernel_tap(d - i));
            }
        }
    }
};

const SincTable& sinc_table() {
    static const SincTable table;
    return table;
}

}  // namespace

std::vector<cfloat> resample_sinc(std::span<const cfloat> in, double ratio) {
    if (!(ratio > 0.0)) throw std::invalid_argument("resample_sinc: ratio must be positive");
    const auto& tbl = sinc_table();
    const std::size_t n_in = in.size();
    const std::size_t n_out = std::size_t(std::floor(double(n_in) * ratio));
    std::vector<cfloat> out(n_out);

    #pragma omp parallel for schedule(static)
    for (long m = 0; m < long(n_out); ++m) {
        const double p = double(m) / ratio;
        const double fk = std::floor(p);
        const long k0 = long(fk);
        const double d = p - fk;
        const double fr = d * kFracRows;
        const int r0 = int(fr);
        const float alpha = float(fr - r0);
        const float* row0 = &tbl.taps[std::size_t(r0) * kSincTaps];
        const float* row1 = &tbl.taps[std::size_t(std::min(r0 + 1, kFracRows)) * kSincTaps];
        float acc_re = 0.f, acc_im = 0.f;
        for (int c = 0; c < kSincTaps; ++c) {
            const long idx = k0 + c - (kSincHalf - 1);
            if (idx < 0 || idx >= long(n_in)) continue;
            const float h = row0[c] + alpha * (row1[c] - row0[c]);
            acc_re += in[std::size_t(idx)].real() * h;
            acc_im += in[std::size_t(idx)].imag() * h;
        }
        out[std::size_t(m)] = cfloat(acc_re, acc_im);
    }
    return out;
}

cdouble sinc_interp_at(std::span<const cfloat> x, double position) {
    const double fk = std::floor(position);
    const long k0 = long(fk);
    const double d = position - fk;
    cdouble acc(0.0, 0.0);
    for (int c = 0; c < kSincTaps; ++c) {
        const int i = c - (kSincHalf - 1);
        const long idx = k0 + i;
        if (idx < 0 || idx >= long(x.size())) continue;
        const double h = sinc_kernel_tap(d - i);
        acc += cdouble(x[std::size_t(idx)]) * h;
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Serial references
// ---------------------------------------------------------------------------

namespace serial {

std::vector<cfloat> cross_correlate(std::span<const cfloat> x,
                                    std::span<const cfloat> tmpl) {
    if (tmpl.empty() || x.size() < tmpl.size()) {
        throw std::invalid_argument("cross_correlate: capture shorter than template");
    }
    const std::size_t tlen = tmpl.size();
    const std::size_t n_out = x.size() - tlen + 1;
    std::vector<cfloat> out(n_out);
    for (std::size_t k = 0; k < n_out; ++k) {
        double ar = 0.0, ai = 0.0;
        for (std::size_t n = 0; n < tlen; ++n) {
            const cfloat a = x[k + n];
            const cfloat b = tmpl[n];
            ar += double(a.real()) * b.real() + double(a.imag()) * b.imag();
            ai += double(a.imag()) * b.real() - double(a.real()) * b.imag();
        }
        out[k] = cfloat(float(ar), float(ai));
    }
    return out;
}

std::vector<cfloat> resample_sinc(std::span<const cfloat> in, double ratio) {
    if (!(ratio > 0.0)) throw std::invalid_argument("resample_sinc: ratio must be positive");
    const std::size_t n_out = std::size_t(std::floor(double(in.size()) * ratio));
    std::vector<cfloat> out(n_out);
    for (std::size_t m = 0; m < n_out; ++m) {
        out[m] = cfloat(sinc_interp_at(in, double(m) / ratio));
    }
    return out;
}

std::vector<cdouble> dft(std::span<const cdouble> in) {
    const std::size_t n = in.size();
    std::vector<cdouble> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cdouble acc(0.0, 0.0);
        for (std::size_t t = 0; t < n; ++t) {
            const double ang = -2.0 * kPi * double(k) * double(t) / double(n);
            acc += in[t] * cdouble(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

}  // namespace serial

}  // namespace clocklab
