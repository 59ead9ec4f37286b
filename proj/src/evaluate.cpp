#include "phaseforge/evaluate.hpp"

#include "phaseforge/report.hpp"
#include "phaseforge/wav.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace phaseforge {

Waveform enhance_waveform(Session& session, const Waveform& noisy) {
    noisy.validate();
    if (session.injection.setting == Setting::conditioning) {
        const LayeredFeatures features = session.provider->extract(noisy);
        ConditioningInput cond;
        cond.features = select(features, session.injection.selection);
        return session.model->forward(noisy, &cond).output;
    }
    return session.model->forward(noisy).output;
}

EnhanceStats enhance_directory(Session& session, const std::string& in_dir,
                               const std::string& out_dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(in_dir))
        throw std::invalid_argument("enhance: input directory not found: " + in_dir);
    fs::create_directories(out_dir);

    std::vector<fs::path> inputs;
    for (const auto& entry : fs::directory_iterator(in_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".wav")
            inputs.push_back(entry.path());
    std::sort(inputs.begin(), inputs.end());

    EnhanceStats stats;
    for (const auto& path : inputs) {
        try {
            const Waveform noisy = read_wav_at(path.string(), session.config.sample_rate);
            const Waveform enhanced = enhance_waveform(session, noisy);
            write_wav((fs::path(out_dir) / path.filename()).string(), enhanced);
            ++stats.written;
        } catch (const std::exception& err) {
            ++stats.failed;
            stats.failures.push_back(path.filename().string() + ": " + err.what());
        }
    }
    return stats;
}

namespace {

bool is_native_metric(const std::string& name) { return name == "SI-SNR" || name == "LSD"; }

void score_pair(EvaluationSummary& summary, const std::string& id, const Waveform& reference,
                const Waveform& estimate, const std::vector<std::string>& metrics,
                const MetricRegistry& registry, const std::string& scratch_dir) {
    std::string ref_path, est_path;  // materialized lazily for external tools
    for (const auto& name : metrics) {
        MetricRecord record;
        record.utterance_id = id;
        record.metric = name;
        if (name == "SI-SNR") {
            record.value = si_snr_db(reference, estimate);
        } else if (name == "LSD") {
            record.value = log_spectral_distance_db(reference, estimate);
        } else {
            const auto it = registry.find(name);
            if (it == registry.end()) continue;  // caller records the skip once
            if (ref_path.empty()) {
                namespace fs = std::filesystem;
                fs::create_directories(scratch_dir);
                ref_path = (fs::path(scratch_dir) / (id + "_ref.wav")).string();
                est_path = (fs::path(scratch_dir) / (id + "_est.wav")).string();
                write_wav(ref_path, reference);
                write_wav(est_path, estimate);
            }
            record.value = run_external_metric(it->second, ref_path, est_path);
        }
        if (const auto range = metric_range(name))
            record.in_range = record.value >= range->first && record.value <= range->second;
        summary.records.push_back(std::move(record));
    }
    if (!ref_path.empty()) {
        std::filesystem::remove(ref_path);
        std::filesystem::remove(est_path);
    }
}

void finalize_summary(EvaluationSummary& summary, const std::vector<std::string>& metrics,
                      const MetricRegistry& registry) {
    for (const auto& name : metrics) {
        if (!is_native_metric(name) && registry.find(name) == registry.end()) {
            summary.skipped_metrics.push_back(name);
            std::cerr << "warning: metric '" << name
                      << "' has no registered adapter; skipping\n";
        }
    }
    std::map<std::string, std::pair<double, long>> sums;
    for (const auto& record : summary.records) {
        sums[record.metric].first += record.value;
        sums[record.metric].second += 1;
    }
    for (const auto& [name, sum] : sums)
        summary.means[name] = sum.first / static_cast<double>(sum.second);
}

}  // namespace

EvaluationSummary evaluate_manifest(Session& session, const std::string& manifest_path,
                                    const std::vector<std::string>& metrics,
                                    const MetricRegistry& registry) {
    const auto records = load_manifest(manifest_path);
    if (records.empty()) throw std::invalid_argument("evaluate: manifest is empty");
    const std::string scratch =
        (std::filesystem::temp_directory_path() / "phaseforge_metric_scratch").string();

    EvaluationSummary summary;
    for (const auto& rec : records) {
        const NoisyCleanPair pair = load_pair(rec, session.config.sample_rate);
        const Waveform enhanced = enhance_waveform(session, pair.noisy);
        score_pair(summary, rec.id, pair.clean, enhanced, metrics, registry, scratch);
    }
    finalize_summary(summary, metrics, registry);
    return summary;
}

EvaluationSummary evaluate_estimates(const std::string& manifest_path,
                                     const std::string& estimates_dir,
                                     const std::vector<std::string>& metrics,
                                     const MetricRegistry& registry, int sample_rate) {
    const auto records = load_manifest(manifest_path);
    if (records.empty()) throw std::invalid_argument("evaluate: manifest is empty");
    const std::string scratch =
        (std::filesystem::temp_directory_path() / "phaseforge_metric_scratch").string();

    EvaluationSummary summary;
    for (const auto& rec : records) {
        const NoisyCleanPair pair = load_pair(rec, sample_rate);
        const std::string est_path =
            (std::filesystem::path(estimates_dir) / (rec.id + ".wav")).string();
        if (!std::filesystem::exists(est_path))
            throw std::invalid_argument("evaluate: missing estimate " + est_path);
        const Waveform estimate = read_wav_at(est_path, sample_rate);
        score_pair(summary, rec.id, pair.clean, estimate, metrics, registry, scratch);
    }
    finalize_summary(summary, metrics, registry);
    return summary;
}

void write_evaluation_report(const EvaluationSummary& summary, const std::string& path) {
    nlohmann::json doc;
    doc["records"] = nlohmann::json::array();
    for (const auto& record : summary.records)
        doc["records"].push_back({{"utterance_id", record.utterance_id},
                                  {"metric", record.metric},
                                  {"value", record.value},
                                  {"in_range", record.in_range}});
    doc["means"] = summary.means;
    doc["skipped_metrics"] = summary.skipped_metrics;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("write_evaluation_report: cannot open " + path);
    out << doc.dump(2) << "\n";
}

LayerAnalysisResult run_layer_analysis(const TrainConfig& base_config, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::vector<std::string> native_metrics = {"SI-SNR", "LSD"};

    // Validation rows come from the manifest split (falling back to the
    // whole set on single-split desk data).
    const auto records = load_manifest(base_config.manifest);
    std::vector<ManifestRecord> valid_records;
    for (const auto& rec : records)
        if (is_validation_record(rec)) valid_records.push_back(rec);
    if (valid_records.empty()) valid_records = records;
    const std::string valid_manifest = (fs::path(out_dir) / "valid_manifest.jsonl").string();
    save_manifest(valid_manifest, valid_records);

    struct Plan {
        std::string label;
        TrainConfig cfg;
    };
    std::vector<Plan> plans;
    const int layers = base_config.provider.num_layers;
    const std::string span = "0-" + std::to_string(layers - 1);

    {
        Plan baseline{"Baseline", base_config};
        baseline.cfg.injection.setting = Setting::base;
        plans.push_back(std::move(baseline));
    }
    for (int layer = 0; layer < layers; ++layer) {
        Plan plan{std::to_string(layer), base_config};
        plan.cfg.injection.setting = Setting::conditioning;
        plan.cfg.injection.selection = LayerSelection::make_fixed(layer);
        plans.push_back(std::move(plan));
    }
    {
        Plan mean{"Avg(" + span + ")", base_config};
        mean.cfg.injection.setting = Setting::conditioning;
        mean.cfg.injection.selection = LayerSelection::make_mean();
        plans.push_back(std::move(mean));
    }
    {
        Plan learned{"Lrn-W-Avg(" + span + ")", base_config};
        learned.cfg.injection.setting = Setting::conditioning;
        learned.cfg.injection.selection = LayerSelection::make_learned(layers);
        plans.push_back(std::move(learned));
    }

    LayerAnalysisResult result;
    std::vector<SelectionRow> rows;
    for (auto& plan : plans) {
        plan.cfg.out_dir = (fs::path(out_dir) / ("run_" + plan.label)).string();
        const TrainResult trained = train(plan.cfg);

        Session session = session_from_checkpoint(trained.best_checkpoint);
        const EvaluationSummary summary =
            evaluate_manifest(session, valid_manifest, native_metrics);

        SelectionRow row;
        row.label = plan.label;
        row.metrics = summary.means;
        row.seed = std::to_string(plan.cfg.seed);
        row.checkpoint_hash = checkpoint_digest(Checkpoint::load(trained.best_checkpoint));
        rows.push_back(std::move(row));

        if (plan.label.rfind("Lrn-W-Avg", 0) == 0) {
            result.weights_csv_path = (fs::path(out_dir) / "layer_weights.csv").string();
            result.weights_svg_path = (fs::path(out_dir) / "layer_weights.svg").string();
            write_layer_weight_report(session.injection.selection, layers, result.weights_csv_path,
                                      result.weights_svg_path);
            result.learned_weights = report_layer_weights(session.injection.selection, layers);
        }
    }

    result.table_csv_path = (fs::path(out_dir) / "layer_analysis.csv").string();
    result.table_markdown_path = (fs::path(out_dir) / "layer_analysis.md").string();
    std::ofstream(result.table_csv_path) << render_selection_table_csv(rows);
    std::ofstream(result.table_markdown_path) << render_selection_table_markdown(rows);
    return result;
}

}  // namespace phaseforge
