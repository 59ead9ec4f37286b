#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "phaseforge/audio.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace phaseforge;

namespace {

Waveform random_wave(long length, uint64_t seed, int rate = 16000) {
    Rng rng(seed);
    Waveform w;
    w.sample_rate = rate;
    w.samples.resize(length);
    for (long i = 0; i < length; ++i) w.samples[i] = rng.uniform(-0.8, 0.8);
    return w;
}

// Sum of sinusoids below max_rel_freq * Nyquist.
Waveform bandlimited_wave(long length, double max_rel_freq, uint64_t seed) {
    Rng rng(seed);
    Waveform w;
    w.samples = Vec::Zero(length);
    for (int k = 0; k < 12; ++k) {
        const double freq = rng.uniform(0.01, max_rel_freq) * 0.5;  // cycles per sample
        const double phase = rng.uniform(0.0, 2.0 * M_PI);
        const double amp = rng.uniform(0.02, 0.12);
        for (long i = 0; i < length; ++i) w.samples[i] += amp * std::sin(2.0 * M_PI * freq * i + phase);
    }
    return w;
}

double relative_frobenius(const Mat& a, const Mat& b) {
    return (a - b).norm() / std::max(b.norm(), 1e-30);
}

}  // namespace

TEST_CASE("stft: unit impulse with rectangular window has flat magnitude") {
    Waveform w;
    w.samples = Vec::Zero(16);
    w.samples[0] = 1.0;
    StftConfig cfg{.n_fft = 8, .hop = 4, .win_length = 8, .window = WindowKind::rectangular};
    const Mat mag = stft(w, cfg).magnitude();

    // Frame 0 covers padded samples [-4, 4); the impulse sits inside it.
    for (int f = 0; f < cfg.bins(); ++f) CHECK(mag(f, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("stft: zero signal gives all-zero magnitudes") {
    Waveform w;
    w.samples = Vec::Zero(777);
    StftConfig cfg{.n_fft = 256, .hop = 64, .win_length = 256};
    CHECK(stft(w, cfg).magnitude().maxCoeff() == 0.0);
}

TEST_CASE("stft: bin-centered sinusoid concentrates energy and matches the DFT oracle") {
    const int n_fft = 128;
    const int bin = 16;
    Waveform w;
    w.samples.resize(1024);
    for (long i = 0; i < w.length(); ++i)
        w.samples[i] = std::sin(2.0 * M_PI * bin * i / n_fft);
    StftConfig cfg{.n_fft = n_fft, .hop = 32, .win_length = n_fft};

    const Mat mag = stft(w, cfg).magnitude();
    const Mat ref = oracle::stft_magnitude(w.samples, {n_fft, cfg.hop, cfg.win_length});
    CHECK(relative_frobenius(mag, ref) < 1e-5);

    // Interior frame: the peak bin should dwarf bins away from the mainlobe.
    const long mid = mag.cols() / 2;
    const double peak = mag(bin, mid);
    for (int f = 0; f < cfg.bins(); ++f) {
        if (std::abs(f - bin) > 2) CHECK(mag(f, mid) < 1e-10 * peak + 1e-9);
    }
}

TEST_CASE("stft: magnitudes match the naive DFT oracle on random signals up to 4096 samples") {
    struct Case {
        long length;
        oracle::StftSpec spec;
    };
    const Case cases[] = {
        {300, {64, 16, 48}},
        {1024, {256, 100, 200}},
        {4096, {512, 50, 240}},
    };
    uint64_t seed = 11;
    for (const auto& c : cases) {
        Waveform w = random_wave(c.length, seed++);
        StftConfig cfg{.n_fft = c.spec.n_fft, .hop = c.spec.hop, .win_length = c.spec.win_length};
        const Mat mag = stft(w, cfg).magnitude();
        const Mat ref = oracle::stft_magnitude(w.samples, c.spec);
        CHECK(relative_frobenius(mag, ref) < 1e-5);
    }
}

TEST_CASE("stft: spectrogram energy is monotone in signal energy") {
    StftConfig cfg{.n_fft = 256, .hop = 64, .win_length = 256};
    Waveform w = random_wave(2000, 5);
    double prev = 0.0;
    for (double scale : {0.25, 0.7, 1.0, 1.9, 4.0}) {
        Waveform scaled;
        scaled.samples = scale * w.samples;
        const double energy = stft(scaled, cfg).magnitude().squaredNorm();
        CHECK(energy > prev);
        prev = energy;
    }
}

TEST_CASE("stft: invalid configs are rejected") {
    Waveform w = random_wave(64, 3);
    CHECK_THROWS_AS(stft(w, StftConfig{.n_fft = 64, .hop = 48, .win_length = 32}), ConfigError);
    CHECK_THROWS_AS(stft(w, StftConfig{.n_fft = 32, .hop = 8, .win_length = 64}), ConfigError);
}

TEST_CASE("stft_adjoint: satisfies the inner-product adjoint identity") {
    StftConfig cfg{.n_fft = 64, .hop = 16, .win_length = 48};
    Waveform w = random_wave(333, 17);
    const ComplexSpectrogram spec = stft(w, cfg);

    Rng rng(99);
    CMat g(spec.values.rows(), spec.values.cols());
    for (long c = 0; c < g.cols(); ++c)
        for (long r = 0; r < g.rows(); ++r) g(r, c) = {rng.normal(), rng.normal()};

    const double lhs = (spec.values.real().cwiseProduct(g.real()) +
                        spec.values.imag().cwiseProduct(g.imag()))
                           .sum();
    const Vec pullback = stft_adjoint(g, w.length(), cfg);
    const double rhs = pullback.dot(w.samples);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("sinc_resample: factor 1 is the identity, bit for bit") {
    Waveform w = random_wave(500, 23);
    const Waveform out = sinc_resample(w, 1, 1);
    REQUIRE(out.length() == w.length());
    for (long i = 0; i < w.length(); ++i) CHECK(out.samples[i] == w.samples[i]);
}

TEST_CASE("sinc_resample: DC stays DC under upsampling") {
    Waveform w;
    w.samples = Vec::Constant(400, 0.5);
    const Waveform up = sinc_resample(w, 4, 1);
    REQUIRE(up.length() == 1600);
    for (long i = 200; i < up.length() - 200; ++i)
        CHECK(up.samples[i] == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("sinc_resample: up-by-4 then down-by-4 round trip on band-limited content") {
    Waveform w = bandlimited_wave(3000, 0.35, 77);
    const Waveform round = sinc_resample(sinc_resample(w, 4, 1), 1, 4);
    REQUIRE(round.length() == w.length());
    const long margin = 200;
    double max_err = 0.0;
    for (long i = margin; i < w.length() - margin; ++i)
        max_err = std::max(max_err, std::abs(round.samples[i] - w.samples[i]));
    CHECK(max_err < 1e-3);
}

TEST_CASE("sinc_resample: output length is round(T * factor)") {
    Waveform w = random_wave(1001, 8);
    CHECK(sinc_resample(w, 3, 1).length() == 3003);
    CHECK(sinc_resample(w, 1, 4).length() == 250);
    CHECK(sinc_resample(w, 1, 2).length() == 501);  // round(500.5)
}

TEST_CASE("sinc_resample: invalid factors are rejected") {
    Waveform w = random_wave(100, 1);
    CHECK_THROWS_AS(sinc_resample(w, 0, 1), ConfigError);
    CHECK_THROWS_AS(sinc_resample(w, -2, 1), ConfigError);
    CHECK_THROWS_AS(sinc_resample(w, 3, 2), ConfigError);
}

TEST_CASE("downsample_adjoint is the exact transpose of downsample") {
    Rng rng(4);
    Vec x(257);
    for (long i = 0; i < x.size(); ++i) x[i] = rng.normal();
    const Vec y = downsample(x, 4);
    Vec g(y.size());
    for (long i = 0; i < g.size(); ++i) g[i] = rng.normal();
    const Vec pullback = downsample_adjoint(g, x.size(), 4);
    CHECK(y.dot(g) == doctest::Approx(pullback.dot(x)).epsilon(1e-12));
}

TEST_CASE("interpolate_time: midpoint, identity and grid-aligned round trip") {
    Mat two(2, 1);
    two << 0.0, 1.0;
    const Mat three = interpolate_time(two, 3);
    CHECK(three(0, 0) == doctest::Approx(0.0));
    CHECK(three(1, 0) == doctest::Approx(0.5));
    CHECK(three(2, 0) == doctest::Approx(1.0));

    Rng rng(31);
    Mat m(5, 3);
    for (long c = 0; c < 3; ++c)
        for (long r = 0; r < 5; ++r) m(r, c) = rng.normal();
    CHECK((interpolate_time(m, 5) - m).cwiseAbs().maxCoeff() == 0.0);

    const Mat round = interpolate_time(interpolate_time(m, 9), 5);
    CHECK((round - m).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("interpolate_time: exact on affine-in-time inputs") {
    Mat ramp(7, 2);
    for (long r = 0; r < 7; ++r) {
        ramp(r, 0) = 0.25 + 0.5 * r;
        ramp(r, 1) = -1.0 + 0.125 * r;
    }
    for (long target : {3L, 13L, 40L}) {
        const Mat out = interpolate_time(ramp, target);
        for (long r = 0; r < target; ++r) {
            const double pos = static_cast<double>(r) * 6.0 / static_cast<double>(target - 1);
            CHECK(out(r, 0) == doctest::Approx(0.25 + 0.5 * pos).epsilon(1e-9));
            CHECK(out(r, 1) == doctest::Approx(-1.0 + 0.125 * pos).epsilon(1e-9));
        }
    }
}

TEST_CASE("interpolate_time: adjoint identity and argument errors") {
    Rng rng(9);
    Mat m(6, 4);
    for (long c = 0; c < 4; ++c)
        for (long r = 0; r < 6; ++r) m(r, c) = rng.normal();
    const Mat out = interpolate_time(m, 11);
    Mat g(11, 4);
    for (long c = 0; c < 4; ++c)
        for (long r = 0; r < 11; ++r) g(r, c) = rng.normal();
    const Mat pullback = interpolate_time_adjoint(g, 6);
    CHECK(out.cwiseProduct(g).sum() ==
          doctest::Approx(pullback.cwiseProduct(m).sum()).epsilon(1e-12));

    CHECK_THROWS_AS(interpolate_time(Mat(0, 3), 4), std::invalid_argument);
    CHECK_THROWS_AS(interpolate_time(m, 0), std::invalid_argument);
}

TEST_CASE("waveform validation rejects non-finite samples") {
    Waveform w;
    w.samples = Vec::Zero(4);
    w.samples[2] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(w.validate(), std::invalid_argument);
}
