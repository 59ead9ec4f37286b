#ifndef PHASEFORGE_DATASET_HPP
#define PHASEFORGE_DATASET_HPP

#include "phaseforge/augment.hpp"

#include <string>
#include <vector>

namespace phaseforge {

// One JSON-lines manifest record. Two layouts are accepted:
//   {id, clean_path, noisy_path}            -- paired corpora
//   {id, clean_path, noise_path, snr_db}    -- synthetic mixing
// plus an optional "split" field ("train" / "valid").
struct ManifestRecord {
    std::string id;
    std::string clean_path;
    std::string noisy_path;
    std::string noise_path;
    double snr_db = 0.0;
    std::string split;

    bool paired() const { return !noisy_path.empty(); }
};

std::vector<ManifestRecord> load_manifest(const std::string& path);
void save_manifest(const std::string& path, const std::vector<ManifestRecord>& records);

// Loads (and mixes, for synthetic records) one pair, resampling to
// target_rate on ingest when file rates differ.
NoisyCleanPair load_pair(const ManifestRecord& record, int target_rate);

// Explicit split field wins; otherwise the standard validation speakers
// (p286 / p287 utterance-id prefixes) go to validation.
bool is_validation_record(const ManifestRecord& record);

struct SynthConfig {
    int num_utterances = 6;
    int validation_utterances = 1;
    double min_seconds = 1.0;
    double max_seconds = 3.0;
    double snr_lo_db = 0.0;
    double snr_hi_db = 10.0;
    int sample_rate = 16000;
    uint64_t seed = 0;
};

// Writes clean/noise WAVs plus a mixing-mode manifest under out_dir and
// returns the manifest path. The clean signals are harmonic pseudo-speech;
// noise is smoothed white noise.
std::string generate_synthetic_dataset(const std::string& out_dir, const SynthConfig& cfg);

}  // namespace phaseforge

#endif  // PHASEFORGE_DATASET_HPP
