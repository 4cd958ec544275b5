#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

// Data-parallel DSP kernels used by the signal synthesis and ppm estimation
// paths. Every kernel here has an OpenMP-parallel production implementation
// and a straightforward serial counterpart in clocklab::serial (kept as the
// test reference and for the kernel benchmark). The parallel versions are
// bit-stable: each output element is computed by exactly one thread with a
// fixed operation order, so results do not depend on the thread count.

namespace clocklab {

using cfloat = std::complex<float>;
using cdouble = std::complex<double>;

// Radix-2 FFT with precomputed twiddles and bit-reversal permutation.
// n must be a power of two. inverse() applies the 1/n scale.
template <typename T>
class FftPlan {
public:
    explicit FftPlan(std::size_t n);

    std::size_t size() const { return n_; }
    void forward(std::complex<T>* data) const;
    void inverse(std::complex<T>* data) const;

private:
    void transform(std::complex<T>* data, bool inverse) const;

    std::size_t n_;
    std::vector<std::complex<T>> twiddle_;   // exp(-2*pi*i*k/n), k < n/2
    std::vector<std::uint32_t> bitrev_;
};

extern template class FftPlan<float>;
extern template class FftPlan<double>;

// Cross-correlation of a capture against a short template:
//   out[k] = sum_n x[k+n] * conj(t[n]),  k = 0 .. |x|-|t|
// Production path is FFT overlap-save, parallel over blocks.
std::vector<cfloat> cross_correlate(std::span<const cfloat> x,
                                    std::span<const cfloat> tmpl);

// Fractional resampling by a windowed-sinc interpolator (16 taps, Kaiser
// beta = 8). Output m is the input evaluated at position m / ratio; output
// length is floor(|in| * ratio). Taps come from a precomputed polyphase
// table with linear interpolation between fractional rows. Content above
// ratio * Nyquist aliases when ratio < 1; callers keep signals in band.
std::vector<cfloat> resample_sinc(std::span<const cfloat> in, double ratio);

// Windowed-sinc evaluation of a sequence at one fractional position, with
// taps computed exactly (no table). Used for local peak refinement where
// only a handful of positions are needed.
cdouble sinc_interp_at(std::span<const cfloat> x, double position);

// Sinc interpolation parameters shared by resample_sinc / sinc_interp_at.
inline constexpr int kSincTaps = 16;
inline constexpr int kSincHalf = kSincTaps / 2;
inline constexpr double kKaiserBeta = 8.0;

// Kaiser-windowed sinc tap at offset u (|u| <= kSincHalf), exact evaluation.
double sinc_kernel_tap(double u);

namespace serial {

// Direct O(|x| * |t|) correlation with double accumulation. Reference for
// cross_correlate.
std::vector<cfloat> cross_correlate(std::span<const cfloat> x,
                                    std::span<const cfloat> tmpl);

// Per-output exact-tap resampler. Reference for resample_sinc.
std::vector<cfloat> resample_sinc(std::span<const cfloat> in, double ratio);

// O(n^2) DFT. Reference for FftPlan on small sizes.
std::vector<cdouble> dft(std::span<const cdouble> in);

}  // namespace serial

}  // namespace clocklab
