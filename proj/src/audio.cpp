#include "phaseforge/audio.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <complex>
#include <numeric>
#include <vector>

namespace phaseforge {

void Waveform::validate() const {
    if (samples.size() < 1) throw std::invalid_argument("Waveform: length must be >= 1");
    if (sample_rate <= 0) throw std::invalid_argument("Waveform: sample rate must be positive");
    if (!samples.allFinite()) throw std::invalid_argument("Waveform: samples must be finite");
}

void StftConfig::validate() const {
    if (n_fft <= 0 || hop <= 0 || win_length <= 0)
        throw ConfigError("StftConfig: n_fft, hop and win_length must be positive");
    if (win_length > n_fft) throw ConfigError("StftConfig: win_length must be <= n_fft");
    if (hop > win_length) throw ConfigError("StftConfig: hop must be <= win_length");
    if (eps <= 0.0) throw ConfigError("StftConfig: eps must be positive");
}

Vec make_window(WindowKind kind, int win_length) {
    Vec w(win_length);
    switch (kind) {
        case WindowKind::rectangular:
            w.setOnes();
            break;
        case WindowKind::hann:
            // Periodic Hann: exact COLA at hop = win/2.
            for (int n = 0; n < win_length; ++n)
                w[n] = 0.5 - 0.5 * std::cos(2.0 * M_PI * n / win_length);
            break;
    }
    return w;
}

long reflect_index(long i, long n) {
    if (n == 1) return 0;
    const long period = 2 * (n - 1);
    long m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - m;
}

long stft_frames(long num_samples, const StftConfig& cfg) {
    // Padded length is T + n_fft; frames advance by hop over [0, T].
    return num_samples / cfg.hop + 1;
}

namespace {

// Window centered in an n_fft-long analysis frame.
Vec padded_window(const StftConfig& cfg) {
    Vec full = Vec::Zero(cfg.n_fft);
    const int offset = (cfg.n_fft - cfg.win_length) / 2;
    full.segment(offset, cfg.win_length) = make_window(cfg.window, cfg.win_length);
    return full;
}

}  // namespace

ComplexSpectrogram stft(const Waveform& wave, const StftConfig& cfg) {
    cfg.validate();
    wave.validate();
    const long T = wave.length();
    const int N = cfg.n_fft;
    const long pad = N / 2;
    const long frames = stft_frames(T, cfg);
    const Vec window = padded_window(cfg);

    Eigen::FFT<double> fft;
    std::vector<double> frame(static_cast<size_t>(N));
    std::vector<std::complex<double>> spectrum;

    ComplexSpectrogram out;
    out.config = cfg;
    out.values.resize(cfg.bins(), frames);
    for (long k = 0; k < frames; ++k) {
        const long start = k * cfg.hop - pad;
        for (int n = 0; n < N; ++n)
            frame[static_cast<size_t>(n)] = window[n] * wave.samples[reflect_index(start + n, T)];
        fft.fwd(spectrum, frame);
        for (int f = 0; f < cfg.bins(); ++f) out.values(f, k) = spectrum[static_cast<size_t>(f)];
    }
    return out;
}

Vec stft_adjoint(const CMat& grad_values, long num_samples, const StftConfig& cfg) {
    cfg.validate();
    const int N = cfg.n_fft;
    const long pad = N / 2;
    const long frames = grad_values.cols();
    if (grad_values.rows() != cfg.bins())
        throw std::invalid_argument("stft_adjoint: gradient bin count does not match config");
    const Vec window = padded_window(cfg);

    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> full(static_cast<size_t>(N));
    std::vector<std::complex<double>> time(static_cast<size_t>(N));

    Vec grad = Vec::Zero(num_samples);
    for (long k = 0; k < frames; ++k) {
        // Pullback of the half-spectrum real DFT:
        //   g[n] = sum_f Re{ G[f] * exp(+i 2 pi f n / N) }
        // computed as N * Re(ifft(G zero-extended over the upper bins)).
        std::fill(full.begin(), full.end(), std::complex<double>(0.0, 0.0));
        for (int f = 0; f < cfg.bins(); ++f) full[static_cast<size_t>(f)] = grad_values(f, k);
        fft.inv(time, full);
        const long start = k * cfg.hop - pad;
        for (int n = 0; n < N; ++n) {
            const double g = static_cast<double>(N) * time[static_cast<size_t>(n)].real() * window[n];
            grad[reflect_index(start + n, num_samples)] += g;
        }
    }
    return grad;
}

namespace {

// Windowed-sinc interpolation kernel shared by both rate directions.
// half_width = kZeroCrossings * factor taps on each side; each polyphase
// branch is normalized to unit sum so constants pass through exactly.
constexpr int kZeroCrossings = 32;

struct SincKernel {
    int factor = 1;
    int half_width = 0;
    Vec taps;  // index j maps to offset j - half_width

    double at(long offset) const {
        const long idx = offset + half_width;
        if (idx < 0 || idx >= taps.size()) return 0.0;
        return taps[idx];
    }
};

SincKernel make_sinc_kernel(int factor) {
    SincKernel k;
    k.factor = factor;
    k.half_width = kZeroCrossings * factor;
    k.taps.resize(2 * k.half_width + 1);
    for (long j = -k.half_width; j <= k.half_width; ++j) {
        const double t = static_cast<double>(j) / factor;
        const double sinc = (j == 0) ? 1.0 : std::sin(M_PI * t) / (M_PI * t);
        // Blackman window over the kernel support.
        const double u = (static_cast<double>(j) + k.half_width) / (2.0 * k.half_width);
        const double win = 0.42 - 0.5 * std::cos(2.0 * M_PI * u) + 0.08 * std::cos(4.0 * M_PI * u);
        k.taps[j + k.half_width] = sinc * win;
    }
    // Normalize each polyphase branch.
    for (int phase = 0; phase < factor; ++phase) {
        double sum = 0.0;
        for (long j = -k.half_width; j <= k.half_width; ++j)
            if (((j % factor) + factor) % factor == phase) sum += k.taps[j + k.half_width];
        for (long j = -k.half_width; j <= k.half_width; ++j)
            if (((j % factor) + factor) % factor == phase) k.taps[j + k.half_width] /= sum;
    }
    return k;
}

}  // namespace

int resample_half_width(int factor) {
    return factor <= 1 ? 0 : kZeroCrossings * factor;
}

Vec upsample(const Vec& x, int factor) {
    if (factor < 1) throw ConfigError("upsample: factor must be >= 1");
    if (factor == 1) return x;
    const long T = x.size();
    const SincKernel k = make_sinc_kernel(factor);
    Vec y = Vec::Zero(T * factor);
    for (long m = 0; m < y.size(); ++m) {
        const long n_lo = std::max<long>(0, (m - k.half_width + factor - 1) / factor - 1);
        const long n_hi = std::min<long>(T - 1, (m + k.half_width) / factor + 1);
        double acc = 0.0;
        for (long n = n_lo; n <= n_hi; ++n) acc += x[n] * k.at(m - n * factor);
        y[m] = acc;
    }
    return y;
}

Vec downsample(const Vec& x, int factor) {
    if (factor < 1) throw ConfigError("downsample: factor must be >= 1");
    if (factor == 1) return x;
    const long T = x.size();
    const long out_len = static_cast<long>(std::llround(static_cast<double>(T) / factor));
    const SincKernel k = make_sinc_kernel(factor);
    Vec y = Vec::Zero(std::max<long>(out_len, 1));
    for (long n = 0; n < y.size(); ++n) {
        const long m_lo = std::max<long>(0, n * factor - k.half_width);
        const long m_hi = std::min<long>(T - 1, n * factor + k.half_width);
        double acc = 0.0;
        for (long m = m_lo; m <= m_hi; ++m) acc += x[m] * k.at(m - n * factor);
        y[n] = acc / factor;
    }
    return y;
}

Vec downsample_adjoint(const Vec& grad_out, long input_length, int factor) {
    if (factor < 1) throw ConfigError("downsample_adjoint: factor must be >= 1");
    if (factor == 1) return grad_out;
    const SincKernel k = make_sinc_kernel(factor);
    Vec grad = Vec::Zero(input_length);
    for (long n = 0; n < grad_out.size(); ++n) {
        const long m_lo = std::max<long>(0, n * factor - k.half_width);
        const long m_hi = std::min<long>(input_length - 1, n * factor + k.half_width);
        for (long m = m_lo; m <= m_hi; ++m) grad[m] += grad_out[n] * k.at(m - n * factor) / factor;
    }
    return grad;
}

Waveform sinc_resample(const Waveform& wave, int numer, int denom) {
    if (numer <= 0 || denom <= 0) throw ConfigError("sinc_resample: factor must be positive");
    if (numer != 1 && denom != 1)
        throw ConfigError("sinc_resample: factor must be U or 1/U for integer U");
    wave.validate();
    Waveform out;
    out.sample_rate = wave.sample_rate;
    if (numer == 1 && denom == 1) {
        out.samples = wave.samples;
        return out;
    }
    out.samples = (denom == 1) ? upsample(wave.samples, numer) : downsample(wave.samples, denom);
    return out;
}

Waveform resample_to(const Waveform& wave, int target_rate) {
    wave.validate();
    if (target_rate <= 0) throw ConfigError("resample_to: target rate must be positive");
    if (wave.sample_rate == target_rate) return wave;
    const long g = std::gcd(static_cast<long>(wave.sample_rate), static_cast<long>(target_rate));
    const int up = static_cast<int>(target_rate / g);
    const int down = static_cast<int>(wave.sample_rate / g);
    Waveform out;
    out.samples = downsample(upsample(wave.samples, up), down);
    out.sample_rate = target_rate;
    return out;
}

Mat interpolate_time(const Mat& features, long target_len) {
    const long src_len = features.rows();
    if (src_len < 1 || features.cols() < 1)
        throw std::invalid_argument("interpolate_time: input must be non-empty");
    if (target_len < 1) throw std::invalid_argument("interpolate_time: target length must be >= 1");
    if (target_len == src_len) return features;

    Mat out(target_len, features.cols());
    if (src_len == 1) {
        out.rowwise() = features.row(0);
        return out;
    }
    const double scale = (target_len == 1)
                             ? 0.0
                             : static_cast<double>(src_len - 1) / static_cast<double>(target_len - 1);
    for (long r = 0; r < target_len; ++r) {
        const double pos = r * scale;
        long lo = static_cast<long>(std::floor(pos));
        lo = std::min(lo, src_len - 2);
        const double frac = pos - static_cast<double>(lo);
        out.row(r) = (1.0 - frac) * features.row(lo) + frac * features.row(lo + 1);
    }
    return out;
}

Mat interpolate_time_adjoint(const Mat& grad, long source_len) {
    const long target_len = grad.rows();
    if (source_len < 1 || target_len < 1 || grad.cols() < 1)
        throw std::invalid_argument("interpolate_time_adjoint: empty input");
    if (target_len == source_len) return grad;

    Mat out = Mat::Zero(source_len, grad.cols());
    if (source_len == 1) {
        out.row(0) = grad.colwise().sum();
        return out;
    }
    const double scale = (target_len == 1)
                             ? 0.0
                             : static_cast<double>(source_len - 1) / static_cast<double>(target_len - 1);
    for (long r = 0; r < target_len; ++r) {
        const double pos = r * scale;
        long lo = static_cast<long>(std::floor(pos));
        lo = std::min(lo, source_len - 2);
        const double frac = pos - static_cast<double>(lo);
        out.row(lo) += (1.0 - frac) * grad.row(r);
        out.row(lo + 1) += frac * grad.row(r);
    }
    return out;
}

}  // namespace phaseforge
