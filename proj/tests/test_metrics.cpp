#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "phaseforge/evaluate.hpp"
#include "phaseforge/wav.hpp"
#include "oracles.hpp"

#include <filesystem>
#include <fstream>

using namespace phaseforge;

namespace {

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag)
        : path(std::filesystem::temp_directory_path() /
               ("pf_metrics_" + tag + "_" + std::to_string(::getpid()))) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string str(const std::string& sub = "") const { return (path / sub).string(); }
};

Waveform random_wave(long length, uint64_t seed, double amplitude = 0.5) {
    Rng rng(seed);
    Waveform w;
    w.samples.resize(length);
    for (long i = 0; i < length; ++i) w.samples[i] = rng.uniform(-amplitude, amplitude);
    return w;
}

Waveform sine_wave(long length, double cycles_per_sample, double amplitude = 1.0) {
    Waveform w;
    w.samples.resize(length);
    for (long i = 0; i < length; ++i)
        w.samples[i] = amplitude * std::sin(2.0 * M_PI * cycles_per_sample * i);
    return w;
}

// Deterministic tiny run directory with a trained-for-zero-epochs model.
TrainConfig fixture_config(const TempDir& dir, int utterances, uint64_t seed) {
    SynthConfig synth;
    synth.num_utterances = utterances;
    synth.validation_utterances = 0;
    synth.min_seconds = 0.3;
    synth.max_seconds = 0.4;
    synth.seed = seed;
    const std::string manifest = generate_synthetic_dataset(dir.str("data"), synth);

    TrainConfig cfg;
    cfg.manifest = manifest;
    cfg.out_dir = dir.str("run");
    cfg.segment_s = 0.3;
    cfg.stride_s = 0.3;
    cfg.batch_size = 1;
    cfg.epochs = 0;
    cfg.seed = 5;
    cfg.model.hidden = 4;
    cfg.model.depth = 2;
    cfg.model.upscale = 1;
    cfg.model.stride = 2;
    cfg.model.kernel = 4;
    cfg.model.lstm_layers = 1;
    return cfg;
}

}  // namespace

TEST_CASE("si_snr: identical and scaled estimates hit the +60 dB cap") {
    const Waveform ref = random_wave(4000, 1);
    CHECK(si_snr_db(ref, ref) == 60.0);
    Waveform scaled;
    scaled.samples = 3.0 * ref.samples;
    CHECK(si_snr_db(ref, scaled) == 60.0);
}

TEST_CASE("si_snr: equal-power orthogonal noise lands at 0 dB") {
    const long n = 16000;
    const Waveform ref = sine_wave(n, 25.0 / n);
    Waveform est;
    est.samples.resize(n);
    for (long i = 0; i < n; ++i)
        est.samples[i] = ref.samples[i] + std::cos(2.0 * M_PI * 25.0 * i / n);
    CHECK(si_snr_db(ref, est) == doctest::Approx(0.0).epsilon(0).scale(1).epsilon(0.01));
}

TEST_CASE("si_snr: invariant under positive scaling of the estimate") {
    const Waveform ref = random_wave(3000, 2);
    const Waveform est = random_wave(3000, 3);
    const double base = si_snr_db(ref, est);
    for (double scale : {0.1, 2.0, 17.0}) {
        Waveform scaled;
        scaled.samples = scale * est.samples;
        CHECK(si_snr_db(ref, scaled) == doctest::Approx(base).epsilon(1e-9));
    }
}

TEST_CASE("si_snr: zero reference is an argument error") {
    Waveform silent;
    silent.samples = Vec::Zero(100);
    CHECK_THROWS_AS(si_snr_db(silent, random_wave(100, 4)), std::invalid_argument);
}

TEST_CASE("log_spectral_distance: identity, 2x offset, oracle agreement") {
    const Waveform ref = random_wave(6000, 5, 0.8);
    CHECK(log_spectral_distance_db(ref, ref) == 0.0);

    Waveform doubled;
    doubled.samples = 2.0 * ref.samples;
    CHECK(log_spectral_distance_db(ref, doubled) ==
          doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-3));

    const Waveform est = random_wave(6000, 6, 0.8);
    const Mat ref_mag = oracle::stft_magnitude(ref.samples, {1024, 256, 1024});
    const Mat est_mag = oracle::stft_magnitude(est.samples, {1024, 256, 1024});
    const Mat ref_db = 20.0 * (ref_mag.array() + 1e-10).log10().matrix();
    const Mat est_db = 20.0 * (est_mag.array() + 1e-10).log10().matrix();
    double expected = 0.0;
    for (long k = 0; k < ref_db.cols(); ++k)
        expected +=
            std::sqrt((ref_db.col(k) - est_db.col(k)).squaredNorm() / ref_db.rows());
    expected /= static_cast<double>(ref_db.cols());
    CHECK(log_spectral_distance_db(ref, est) == doctest::Approx(expected).epsilon(1e-4));
}

TEST_CASE("evaluate_estimates: reference-as-estimate caps SI-SNR; means are exact averages") {
    TempDir dir("selfeval");
    const TrainConfig cfg = fixture_config(dir, 3, 31);

    // Estimates directory holding the clean references themselves.
    const std::string est_dir = dir.str("estimates");
    std::filesystem::create_directories(est_dir);
    for (const auto& rec : load_manifest(cfg.manifest)) {
        const NoisyCleanPair pair = load_pair(rec, 16000);
        write_wav(est_dir + "/" + rec.id + ".wav", pair.clean);
    }

    const EvaluationSummary summary =
        evaluate_estimates(cfg.manifest, est_dir, {"SI-SNR", "LSD"});
    double si_sum = 0.0;
    long si_count = 0;
    for (const auto& record : summary.records) {
        if (record.metric != "SI-SNR") continue;
        CHECK(record.value == 60.0);
        si_sum += record.value;
        ++si_count;
    }
    CHECK(si_count == 3);
    CHECK(summary.means.at("SI-SNR") == doctest::Approx(si_sum / si_count).epsilon(1e-9));
}

TEST_CASE("evaluate_manifest: order independence and the frozen regression fixture") {
    TempDir dir("golden");
    TrainConfig cfg = fixture_config(dir, 5, 77);
    const TrainResult run = train(cfg);  // zero epochs: seeded initial weights

    Session session = session_from_checkpoint(run.last_checkpoint);
    const EvaluationSummary summary = evaluate_manifest(session, cfg.manifest, {"SI-SNR", "LSD"});
    REQUIRE(summary.records.size() == 10);

    // Shuffled manifest order must not move the summary.
    auto records = load_manifest(cfg.manifest);
    std::reverse(records.begin(), records.end());
    const std::string reversed = dir.str("reversed.jsonl");
    save_manifest(reversed, records);
    Session session2 = session_from_checkpoint(run.last_checkpoint);
    const EvaluationSummary shuffled = evaluate_manifest(session2, reversed, {"SI-SNR", "LSD"});
    CHECK(summary.means.at("SI-SNR") ==
          doctest::Approx(shuffled.means.at("SI-SNR")).epsilon(1e-12));
    CHECK(summary.means.at("LSD") == doctest::Approx(shuffled.means.at("LSD")).epsilon(1e-12));

    // Golden values produced once by the verified initial build.
    CHECK(summary.means.at("SI-SNR") == doctest::Approx(GOLDEN_SI_SNR).epsilon(1e-6));
    CHECK(summary.means.at("LSD") == doctest::Approx(GOLDEN_LSD).epsilon(1e-6));
}

TEST_CASE("external metric adapter: registered executable runs, unregistered is skipped") {
    TempDir dir("external");
    const TrainConfig cfg = fixture_config(dir, 2, 41);

    const std::string stub = dir.str("fake_metric.sh");
    {
        std::ofstream out(stub);
        out << "#!/bin/sh\necho 2.5\n";
    }
    std::filesystem::permissions(stub, std::filesystem::perms::owner_all);

    const std::string est_dir = dir.str("estimates");
    std::filesystem::create_directories(est_dir);
    for (const auto& rec : load_manifest(cfg.manifest)) {
        const NoisyCleanPair pair = load_pair(rec, 16000);
        write_wav(est_dir + "/" + rec.id + ".wav", pair.clean);
    }

    MetricRegistry registry{{"PESQ", stub}};
    const EvaluationSummary summary =
        evaluate_estimates(cfg.manifest, est_dir, {"PESQ", "VISQOL"}, registry);
    CHECK(summary.means.at("PESQ") == doctest::Approx(2.5));
    REQUIRE(summary.skipped_metrics.size() == 1);
    CHECK(summary.skipped_metrics[0] == "VISQOL");
    for (const auto& record : summary.records) CHECK(record.metric == "PESQ");
}

TEST_CASE("enhance_directory: zeroed final layer gives zero files, reruns overwrite, bad files skip") {
    TempDir dir("enhance");
    TrainConfig cfg = fixture_config(dir, 2, 55);
    const TrainResult run = train(cfg);
    Session session = session_from_checkpoint(run.last_checkpoint);
    for (auto& ref : session.trainable()) {
        if (ref.name == "decoder.1.convtr.weight" || ref.name == "decoder.1.convtr.bias")
            std::fill(ref.value, ref.value + ref.size, 0.0);
    }

    const std::string in_dir = dir.str("noisy");
    std::filesystem::create_directories(in_dir);
    std::vector<long> lengths;
    for (const auto& rec : load_manifest(cfg.manifest)) {
        const NoisyCleanPair pair = load_pair(rec, 16000);
        write_wav(in_dir + "/" + rec.id + ".wav", pair.noisy);
        lengths.push_back(pair.noisy.length());
    }
    std::ofstream(in_dir + "/broken.wav") << "this is not audio";

    const std::string out_dir = dir.str("enhanced");
    const EnhanceStats stats = enhance_directory(session, in_dir, out_dir);
    CHECK(stats.written == 2);
    CHECK(stats.failed == 1);
    REQUIRE(stats.failures.size() == 1);
    CHECK(stats.failures[0].find("broken.wav") != std::string::npos);

    size_t k = 0;
    for (const auto& rec : load_manifest(cfg.manifest)) {
        const Waveform out = read_wav(out_dir + "/" + rec.id + ".wav");
        CHECK(out.length() == lengths[k++]);
        CHECK(out.samples.cwiseAbs().maxCoeff() == 0.0);
    }

    // Idempotent rerun: same bytes on disk.
    const auto before = std::filesystem::file_size(out_dir + "/synth0.wav");
    const EnhanceStats again = enhance_directory(session, in_dir, out_dir);
    CHECK(again.written == 2);
    CHECK(std::filesystem::file_size(out_dir + "/synth0.wav") == before);
}
