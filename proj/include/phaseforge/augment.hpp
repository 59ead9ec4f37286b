#ifndef PHASEFORGE_AUGMENT_HPP
#define PHASEFORGE_AUGMENT_HPP

#include "phaseforge/audio.hpp"

#include <string>
#include <vector>

namespace phaseforge {

// Aligned noisy/clean utterance pair (x = y + noise at matching samples).
struct NoisyCleanPair {
    Waveform noisy;
    Waveform clean;
    std::string id;

    void validate() const;
};

struct AugmentConfig {
    double max_shift_s = 0.5;
    double bandstop_fraction = 0.2;  // share of the mel axis removed
    double bandstop_prob = 0.5;      // per-example application probability
    bool shuffle_noises = true;
    uint64_t seed = 0;

    void validate() const;
};

// Scales `noise` so that 10 log10(E_clean / E_noise) equals snr_db, then
// adds it to `clean`. An infinite snr_db means zero noise gain.
NoisyCleanPair mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db,
                          const std::string& id = "");

// Shifts both signals left by one shared offset drawn uniformly from
// [0, max_shift_s * rate], zero-filling the tail.
NoisyCleanPair random_shift(const NoisyCleanPair& pair, const AugmentConfig& cfg, Rng& rng);

// Re-pairs each clean signal with another item's noise (noisy - clean),
// drawing a uniform permutation. The noise multiset is preserved exactly.
std::vector<NoisyCleanPair> shuffle_noises(const std::vector<NoisyCleanPair>& batch, Rng& rng);

// Deterministic core of shuffle_noises for a given permutation.
std::vector<NoisyCleanPair> apply_noise_permutation(const std::vector<NoisyCleanPair>& batch,
                                                    const std::vector<size_t>& permutation);

// One contiguous stop band on the mel axis, expressed in Hz.
struct MelStopBand {
    double lo_hz = 0.0;
    double hi_hz = 0.0;

    bool empty() const { return hi_hz <= lo_hz; }
};

// Uniformly positioned band covering `bandstop_fraction` of the mel axis.
MelStopBand draw_stop_band(const AugmentConfig& cfg, int sample_rate, Rng& rng);

// Removes the band via STFT bin masking with 50%-overlap Hann analysis and
// overlap-add resynthesis.
Waveform apply_band_stop(const Waveform& wave, const MelStopBand& band);

// Draw-and-apply convenience form.
Waveform band_stop_mel(const Waveform& wave, const AugmentConfig& cfg, Rng& rng);

// Sliding fixed-length windows of seg_s seconds every stride_s seconds; a
// trailing remainder is zero-padded to the full segment length.
std::vector<NoisyCleanPair> segment_dataset(const std::vector<NoisyCleanPair>& pairs, double seg_s,
                                            double stride_s);

}  // namespace phaseforge

#endif  // PHASEFORGE_AUGMENT_HPP
