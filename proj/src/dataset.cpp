#include "phaseforge/dataset.hpp"

#include "phaseforge/wav.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>

namespace phaseforge {

std::vector<ManifestRecord> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_manifest: cannot open " + path);
    std::vector<ManifestRecord> records;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& err) {
            throw std::invalid_argument("load_manifest: bad JSON at " + path + ":" +
                                        std::to_string(line_no) + ": " + err.what());
        }
        ManifestRecord rec;
        rec.id = doc.at("id").get<std::string>();
        rec.clean_path = doc.at("clean_path").get<std::string>();
        rec.noisy_path = doc.value("noisy_path", "");
        rec.noise_path = doc.value("noise_path", "");
        rec.snr_db = doc.value("snr_db", 0.0);
        rec.split = doc.value("split", "");
        if (rec.noisy_path.empty() == rec.noise_path.empty())
            throw std::invalid_argument("load_manifest: record '" + rec.id +
                                        "' must carry exactly one of noisy_path / noise_path");
        records.push_back(std::move(rec));
    }
    return records;
}

void save_manifest(const std::string& path, const std::vector<ManifestRecord>& records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("save_manifest: cannot open " + path);
    for (const auto& rec : records) {
        nlohmann::json doc;
        doc["id"] = rec.id;
        doc["clean_path"] = rec.clean_path;
        if (!rec.noisy_path.empty()) doc["noisy_path"] = rec.noisy_path;
        if (!rec.noise_path.empty()) {
            doc["noise_path"] = rec.noise_path;
            doc["snr_db"] = rec.snr_db;
        }
        if (!rec.split.empty()) doc["split"] = rec.split;
        out << doc.dump() << "\n";
    }
}

NoisyCleanPair load_pair(const ManifestRecord& record, int target_rate) {
    const Waveform clean = read_wav_at(record.clean_path, target_rate);
    if (record.paired()) {
        NoisyCleanPair pair;
        pair.id = record.id;
        pair.clean = clean;
        pair.noisy = read_wav_at(record.noisy_path, target_rate);
        pair.validate();
        return pair;
    }
    Waveform noise = read_wav_at(record.noise_path, target_rate);
    if (noise.length() < clean.length())
        throw std::invalid_argument("load_pair: noise shorter than clean for '" + record.id + "'");
    noise.samples.conservativeResize(clean.length());
    return mix_at_snr(clean, noise, record.snr_db, record.id);
}

bool is_validation_record(const ManifestRecord& record) {
    if (!record.split.empty()) return record.split == "valid" || record.split == "validation";
    return record.id.rfind("p286", 0) == 0 || record.id.rfind("p287", 0) == 0;
}

namespace {

// Harmonic stack with a slow random envelope; crude but voiced-sounding.
Waveform synth_clean(long length, int rate, Rng& rng) {
    Waveform w;
    w.sample_rate = rate;
    w.samples = Vec::Zero(length);
    const double f0 = rng.uniform(110.0, 240.0);
    const double vibrato = rng.uniform(2.0, 5.0);
    const double env_rate = rng.uniform(1.5, 4.0);
    for (int harmonic = 1; harmonic <= 6; ++harmonic) {
        const double amp = 0.28 / harmonic;
        const double phase = rng.uniform(0.0, 2.0 * M_PI);
        for (long i = 0; i < length; ++i) {
            const double t = static_cast<double>(i) / rate;
            const double freq = f0 * harmonic * (1.0 + 0.004 * std::sin(2.0 * M_PI * vibrato * t));
            w.samples[i] += amp * std::sin(2.0 * M_PI * freq * t + phase);
        }
    }
    for (long i = 0; i < length; ++i) {
        const double t = static_cast<double>(i) / rate;
        w.samples[i] *= 0.55 + 0.45 * std::sin(2.0 * M_PI * env_rate * t);
    }
    // Ambient floor around -45 dB; recorded speech is never digitally silent
    // between harmonics.
    double floor_state = 0.0;
    for (long i = 0; i < length; ++i) {
        floor_state = 0.7 * floor_state + 0.3 * rng.normal();
        w.samples[i] += 0.005 * floor_state;
    }
    return w;
}

// White noise through a one-pole smoother, renormalized to a fixed RMS.
Waveform synth_noise(long length, int rate, Rng& rng) {
    Waveform w;
    w.sample_rate = rate;
    w.samples.resize(length);
    const double pole = rng.uniform(0.2, 0.9);
    double state = 0.0;
    for (long i = 0; i < length; ++i) {
        state = pole * state + (1.0 - pole) * rng.normal();
        w.samples[i] = state;
    }
    const double rms = std::sqrt(w.samples.squaredNorm() / length);
    w.samples *= 0.15 / std::max(rms, 1e-9);
    return w;
}

}  // namespace

std::string generate_synthetic_dataset(const std::string& out_dir, const SynthConfig& cfg) {
    if (cfg.num_utterances < 1 || cfg.validation_utterances >= cfg.num_utterances)
        throw ConfigError("generate_synthetic_dataset: need at least one training utterance");
    if (cfg.min_seconds <= 0.0 || cfg.max_seconds < cfg.min_seconds)
        throw ConfigError("generate_synthetic_dataset: bad duration range");
    std::filesystem::create_directories(out_dir);

    Rng rng(cfg.seed);
    std::vector<ManifestRecord> records;
    for (int u = 0; u < cfg.num_utterances; ++u) {
        const double seconds = rng.uniform(cfg.min_seconds, cfg.max_seconds);
        const long length = static_cast<long>(std::lround(seconds * cfg.sample_rate));
        const Waveform clean = synth_clean(length, cfg.sample_rate, rng);
        const Waveform noise = synth_noise(length, cfg.sample_rate, rng);

        ManifestRecord rec;
        rec.id = "synth" + std::to_string(u);
        rec.clean_path = (std::filesystem::path(out_dir) / (rec.id + "_clean.wav")).string();
        rec.noise_path = (std::filesystem::path(out_dir) / (rec.id + "_noise.wav")).string();
        rec.snr_db = rng.uniform(cfg.snr_lo_db, cfg.snr_hi_db);
        rec.split = (u >= cfg.num_utterances - cfg.validation_utterances) ? "valid" : "train";
        write_wav(rec.clean_path, clean);
        write_wav(rec.noise_path, noise);
        records.push_back(std::move(rec));
    }
    const std::string manifest_path = (std::filesystem::path(out_dir) / "manifest.jsonl").string();
    save_manifest(manifest_path, records);
    return manifest_path;
}

}  // namespace phaseforge
