#ifndef PHASEFORGE_EVALUATE_HPP
#define PHASEFORGE_EVALUATE_HPP

#include "phaseforge/metrics.hpp"
#include "phaseforge/trainer.hpp"

namespace phaseforge {

// Forward-only enhancement. Conditioning sessions extract phonetic
// features from the noisy input itself, at inference as in training.
Waveform enhance_waveform(Session& session, const Waveform& noisy);

struct EnhanceStats {
    long written = 0;
    long failed = 0;
    std::vector<std::string> failures;  // "<file>: <reason>"
};

// Enhances every .wav under in_dir into out_dir (same filenames, float32).
// Per-file failures are recorded and the batch continues.
EnhanceStats enhance_directory(Session& session, const std::string& in_dir,
                               const std::string& out_dir);

struct MetricRecord {
    std::string utterance_id;
    std::string metric;
    double value = 0.0;
    bool in_range = true;
};

struct EvaluationSummary {
    std::vector<MetricRecord> records;
    std::map<std::string, double> means;
    std::vector<std::string> skipped_metrics;  // requested but unregistered
};

// Enhances each manifest utterance with the session's model and scores the
// requested metrics against the clean references. Native metrics: SI-SNR,
// LSD. Other names resolve through the registry and are skipped (with a
// warning record) when absent.
EvaluationSummary evaluate_manifest(Session& session, const std::string& manifest_path,
                                    const std::vector<std::string>& metrics,
                                    const MetricRegistry& registry = {});

// Same scoring against precomputed estimate files (<utterance id>.wav under
// estimates_dir) instead of running a model.
EvaluationSummary evaluate_estimates(const std::string& manifest_path,
                                     const std::string& estimates_dir,
                                     const std::vector<std::string>& metrics,
                                     const MetricRegistry& registry = {},
                                     int sample_rate = 16000);

void write_evaluation_report(const EvaluationSummary& summary, const std::string& path);

struct LayerAnalysisResult {
    std::string table_csv_path;
    std::string table_markdown_path;
    std::string weights_csv_path;
    std::string weights_svg_path;
    Vec learned_weights;  // softmax table from the learned-selection run
};

// Trains one conditioning model per layer-selection strategy (each provider
// layer, the uniform mean, the learned weighted average) plus an
// unconditioned baseline, evaluates the native metrics on the validation
// split, and emits a selection-comparison table shaped like the layer-sweep
// table plus the learned-weight chart.
LayerAnalysisResult run_layer_analysis(const TrainConfig& base_config, const std::string& out_dir);

}  // namespace phaseforge

#endif  // PHASEFORGE_EVALUATE_HPP
