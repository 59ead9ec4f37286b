#ifndef PHASEFORGE_MEL_HPP
#define PHASEFORGE_MEL_HPP

#include "phaseforge/common.hpp"

namespace phaseforge {

// HTK mel scale.
inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular mel filterbank, returned as (num_bands x num_bins). Bin b of
// an n_fft spectrum at sample_rate covers frequency b * sample_rate / n_fft.
Mat mel_filterbank(int num_bands, int n_fft, int sample_rate, double f_min = 0.0,
                   double f_max = -1.0);

}  // namespace phaseforge

#endif  // PHASEFORGE_MEL_HPP
