// Independent reference implementations used only by tests. These
// deliberately avoid the library's FFT/framing code paths: padding, windows
// and transforms are rebuilt here from first principles so the two routes
// only agree if both are right.
#ifndef PHASEFORGE_TESTS_ORACLES_HPP
#define PHASEFORGE_TESTS_ORACLES_HPP

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct StftSpec {
    int n_fft;
    int hop;
    int win_length;
    bool rectangular = false;
};

// Mirror extension x[-1] -> x[1], x[T] -> x[T-2], any pad width.
inline double sample_reflected(const Vec& x, long i) {
    const long n = x.size();
    if (n == 1) return x[0];
    const long period = 2 * (n - 1);
    long m = i % period;
    if (m < 0) m += period;
    return m < n ? x[m] : x[period - m];
}

// Magnitude spectrogram via an explicit DFT matrix product. Centered
// framing with n_fft/2 reflection padding; periodic Hann window centered
// inside the n_fft frame.
inline Mat stft_magnitude(const Vec& x, const StftSpec& spec) {
    const int N = spec.n_fft;
    const int bins = N / 2 + 1;
    const long frames = x.size() / spec.hop + 1;

    Vec window = Vec::Zero(N);
    const int offset = (N - spec.win_length) / 2;
    for (int n = 0; n < spec.win_length; ++n) {
        window[offset + n] =
            spec.rectangular ? 1.0 : 0.5 - 0.5 * std::cos(2.0 * M_PI * n / spec.win_length);
    }

    Mat cos_basis(bins, N), sin_basis(bins, N);
    for (int f = 0; f < bins; ++f)
        for (int n = 0; n < N; ++n) {
            const double ang = 2.0 * M_PI * f * n / N;
            cos_basis(f, n) = std::cos(ang);
            sin_basis(f, n) = std::sin(ang);
        }

    Mat framed(N, frames);
    for (long k = 0; k < frames; ++k) {
        const long start = k * spec.hop - N / 2;
        for (int n = 0; n < N; ++n) framed(n, k) = window[n] * sample_reflected(x, start + n);
    }
    const Mat re = cos_basis * framed;
    const Mat im = sin_basis * framed;  // sign drops out of magnitudes
    return (re.array().square() + im.array().square()).sqrt();
}

// Composite enhancement loss rebuilt from the published formula: waveform
// L1 plus spectral-convergence and log-magnitude terms at three fixed
// resolutions, all divided by the sample count.
struct CompositeLoss {
    double l1 = 0.0;
    double sc[3] = {0, 0, 0};
    double mag[3] = {0, 0, 0};
    double total = 0.0;
};

inline CompositeLoss composite_loss_oracle(const Vec& ref, const Vec& est) {
    const StftSpec resolutions[3] = {{512, 50, 240}, {1024, 120, 600}, {2048, 240, 1200}};
    constexpr double kLogEps = 1e-7;
    CompositeLoss out;
    const double T = static_cast<double>(ref.size());
    out.l1 = (ref - est).cwiseAbs().sum();
    double bracket = out.l1;
    for (int i = 0; i < 3; ++i) {
        const Mat ref_mag = stft_magnitude(ref, resolutions[i]);
        const Mat est_mag = stft_magnitude(est, resolutions[i]);
        out.sc[i] = (ref_mag - est_mag).norm() / ref_mag.norm();
        out.mag[i] = ((ref_mag.array() + kLogEps).log() - (est_mag.array() + kLogEps).log())
                         .abs()
                         .sum() /
                     T;
        bracket += out.sc[i] + out.mag[i];
    }
    out.total = bracket / T;
    return out;
}

// Central finite difference d f / d x through a mutable probe location.
inline double central_difference(double* slot, double step, const std::function<double()>& eval) {
    const double saved = *slot;
    *slot = saved + step;
    const double hi = eval();
    *slot = saved - step;
    const double lo = eval();
    *slot = saved;
    return (hi - lo) / (2.0 * step);
}

// Relative gap with a denominator floor so near-zero gradients compare on
// an absolute scale instead of amplifying finite-difference noise.
inline double relative_error(double a, double b, double floor_val = 1e-6) {
    const double denom = std::max({std::abs(a), std::abs(b), floor_val});
    return std::abs(a - b) / denom;
}

}  // namespace oracle

#endif  // PHASEFORGE_TESTS_ORACLES_HPP
