#ifndef PHASEFORGE_AUDIO_HPP
#define PHASEFORGE_AUDIO_HPP

#include "phaseforge/common.hpp"

namespace phaseforge {

// Mono time-domain signal. Samples are dimensionless amplitudes, nominally
// in [-1, 1]; length is free per instance.
struct Waveform {
    Vec samples;
    int sample_rate = 16000;

    long length() const { return static_cast<long>(samples.size()); }
    double energy() const { return samples.squaredNorm(); }
    void validate() const;
};

enum class WindowKind { hann, rectangular };

struct StftConfig {
    int n_fft = 1024;
    int hop = 256;
    int win_length = 1024;
    WindowKind window = WindowKind::hann;
    double eps = 1e-7;  // additive floor inside log magnitudes

    int bins() const { return n_fft / 2 + 1; }
    void validate() const;
};

// Frequency x frame matrix of complex STFT values.
struct ComplexSpectrogram {
    CMat values;
    StftConfig config;

    Mat magnitude() const { return values.cwiseAbs(); }
};

// Number of analysis frames for a length-T signal under centered framing.
long stft_frames(long num_samples, const StftConfig& cfg);

// Centered STFT with reflection padding of n_fft/2 on both sides. The
// window is zero-padded symmetrically from win_length up to n_fft.
ComplexSpectrogram stft(const Waveform& wave, const StftConfig& cfg);

// Pullback of a gradient on the complex STFT values (dL/dRe, dL/dIm packed
// as a complex matrix) to a gradient on the input samples.
Vec stft_adjoint(const CMat& grad_values, long num_samples, const StftConfig& cfg);

// Window vector of length win_length for the given kind.
Vec make_window(WindowKind kind, int win_length);

// Mirror extension index (period 2T-2) used by the centered padding.
long reflect_index(long i, long n);

// Band-limited resampling by an integer factor up or down. `numer/denom`
// must be U/1 or 1/U for integer U >= 1. Output length is
// round(T * numer / denom).
Waveform sinc_resample(const Waveform& wave, int numer, int denom);

// Low-level integer-factor kernels on raw sample vectors (sample rate
// bookkeeping left to the caller). `downsample_adjoint` is the exact
// transpose of `downsample`, used when gradients flow through the
// decoder-side rate change.
Vec upsample(const Vec& x, int factor);
Vec downsample(const Vec& x, int factor);
Vec downsample_adjoint(const Vec& grad_out, long input_length, int factor);

// Rational-rate conversion used on WAV ingest (up by p, down by q).
Waveform resample_to(const Waveform& wave, int target_rate);

// Half-width of the resampling kernel in high-rate taps (0 for factor 1).
// Needed by callers that account for the resampler's temporal reach.
int resample_half_width(int factor);

// Per-channel linear interpolation of a (time x dim) matrix onto a uniform
// grid of target_len rows. Endpoints map to endpoints.
Mat interpolate_time(const Mat& features, long target_len);

// Transpose of interpolate_time: scatters a (target_len x dim) gradient
// back onto the source grid of source_len rows.
Mat interpolate_time_adjoint(const Mat& grad, long source_len);

}  // namespace phaseforge

#endif  // PHASEFORGE_AUDIO_HPP
