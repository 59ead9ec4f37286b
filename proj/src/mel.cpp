#include "phaseforge/mel.hpp"

namespace phaseforge {

Mat mel_filterbank(int num_bands, int n_fft, int sample_rate, double f_min, double f_max) {
    if (num_bands < 1 || n_fft < 2 || sample_rate <= 0)
        throw ConfigError("mel_filterbank: invalid geometry");
    if (f_max <= 0.0) f_max = sample_rate / 2.0;
    const int bins = n_fft / 2 + 1;

    const double mel_lo = hz_to_mel(f_min);
    const double mel_hi = hz_to_mel(f_max);
    Vec edges(num_bands + 2);
    for (int i = 0; i < num_bands + 2; ++i)
        edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (num_bands + 1));

    Mat bank = Mat::Zero(num_bands, bins);
    for (int b = 0; b < num_bands; ++b) {
        const double left = edges[b], center = edges[b + 1], right = edges[b + 2];
        for (int k = 0; k < bins; ++k) {
            const double freq = static_cast<double>(k) * sample_rate / n_fft;
            double w = 0.0;
            if (freq > left && freq < center)
                w = (freq - left) / (center - left);
            else if (freq >= center && freq < right)
                w = (right - freq) / (right - center);
            bank(b, k) = w;
        }
    }
    return bank;
}

}  // namespace phaseforge
