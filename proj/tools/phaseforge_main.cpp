#include "phaseforge/evaluate.hpp"
#include "phaseforge/report.hpp"
#include "phaseforge/wav.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace phaseforge;

namespace {

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return nlohmann::json::parse(in);
}

TrainConfig load_train_config(const std::string& config_path, uint64_t seed_override,
                              bool seed_given, const std::string& out_override) {
    nlohmann::json doc = config_path.empty() ? nlohmann::json::object() : load_json(config_path);
    apply_env_overrides(doc);
    TrainConfig cfg = train_config_from_json(doc);
    if (seed_given) cfg.seed = seed_override;
    if (!out_override.empty()) cfg.out_dir = out_override;
    return cfg;
}

MetricRegistry parse_metric_bindings(const std::vector<std::string>& bindings) {
    MetricRegistry registry;
    for (const auto& binding : bindings) {
        const size_t eq = binding.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--metric expects NAME=/path/to/executable, got: " + binding);
        registry[binding.substr(0, eq)] = binding.substr(eq + 1);
    }
    return registry;
}

std::vector<std::string> split_names(const std::string& csv) {
    std::vector<std::string> names;
    std::string name;
    std::istringstream in(csv);
    while (std::getline(in, name, ','))
        if (!name.empty()) names.push_back(name);
    return names;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"phaseforge: phonetic-aware speech enhancement workbench"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    uint64_t seed = 0;
    bool seed_given = false;
    app.add_option("--config", config_path, "JSON config file")->capture_default_str();
    app.add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
        seed_given = true;
    });
    app.add_option("--out", out_dir, "output directory override");

    // train
    auto* train_cmd = app.add_subcommand("train", "train an enhancement model");
    std::string resume_path;
    train_cmd->add_option("--resume", resume_path, "checkpoint to resume from");

    // enhance
    auto* enhance_cmd = app.add_subcommand("enhance", "denoise a directory of WAV files");
    std::string checkpoint_path, in_dir;
    enhance_cmd->add_option("--checkpoint", checkpoint_path, "trained checkpoint")->required();
    enhance_cmd->add_option("--in", in_dir, "directory of noisy WAVs")->required();

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "score enhanced audio against references");
    std::string eval_checkpoint, eval_manifest, estimates_dir, metrics_csv = "SI-SNR,LSD";
    std::vector<std::string> metric_bindings;
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint to run");
    eval_cmd->add_option("--manifest", eval_manifest, "dataset manifest (JSON lines)")->required();
    eval_cmd->add_option("--estimates", estimates_dir, "score existing files instead of a model");
    eval_cmd->add_option("--metrics", metrics_csv, "comma-separated metric names");
    eval_cmd->add_option("--metric", metric_bindings,
                         "external metric adapter NAME=/path/to/executable");

    // layer-analysis
    auto* layers_cmd =
        app.add_subcommand("layer-analysis", "sweep layer-selection strategies for conditioning");

    // synth-data
    auto* synth_cmd = app.add_subcommand("synth-data", "generate a desk-scale synthetic dataset");
    SynthConfig synth;
    synth_cmd->add_option("--utterances", synth.num_utterances, "number of utterances");
    synth_cmd->add_option("--validation", synth.validation_utterances, "validation utterances");
    synth_cmd->add_option("--min-seconds", synth.min_seconds, "shortest utterance");
    synth_cmd->add_option("--max-seconds", synth.max_seconds, "longest utterance");
    synth_cmd->add_option("--snr-lo", synth.snr_lo_db, "lowest mixing SNR (dB)");
    synth_cmd->add_option("--snr-hi", synth.snr_hi_db, "highest mixing SNR (dB)");

    // report
    auto* report_cmd = app.add_subcommand("report", "render result tables from a results database");
    std::string db_path;
    report_cmd->add_option("--db", db_path, "results database (JSON)")->required();

    for (auto* sub : {train_cmd, enhance_cmd, eval_cmd, layers_cmd, synth_cmd, report_cmd})
        sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) {
            TrainConfig cfg = load_train_config(config_path, seed, seed_given, out_dir);
            if (!resume_path.empty()) cfg.resume_from = resume_path;
            const TrainResult result = train(cfg);
            std::cout << "steps: " << result.steps << "\n"
                      << "best validation: " << result.best_validation << "\n"
                      << "best checkpoint: " << result.best_checkpoint << "\n"
                      << "last checkpoint: " << result.last_checkpoint << "\n"
                      << "metrics log: " << result.metrics_path << "\n";
        } else if (enhance_cmd->parsed()) {
            Session session = session_from_checkpoint(checkpoint_path);
            if (out_dir.empty()) throw ConfigError("enhance: --out directory is required");
            const EnhanceStats stats = enhance_directory(session, in_dir, out_dir);
            std::cout << "enhanced " << stats.written << " file(s), " << stats.failed
                      << " failure(s)\n";
            for (const auto& failure : stats.failures) std::cerr << "  failed: " << failure << "\n";
        } else if (eval_cmd->parsed()) {
            const auto metrics = split_names(metrics_csv);
            const MetricRegistry registry = parse_metric_bindings(metric_bindings);
            EvaluationSummary summary;
            if (!estimates_dir.empty()) {
                summary = evaluate_estimates(eval_manifest, estimates_dir, metrics, registry);
            } else {
                if (eval_checkpoint.empty())
                    throw ConfigError("evaluate: need --checkpoint or --estimates");
                Session session = session_from_checkpoint(eval_checkpoint);
                summary = evaluate_manifest(session, eval_manifest, metrics, registry);
            }
            for (const auto& [name, mean] : summary.means)
                std::cout << name << ": " << format_double(mean) << "\n";
            const std::string report_path =
                (fs::path(out_dir.empty() ? "." : out_dir) / "evaluation.json").string();
            if (!out_dir.empty()) fs::create_directories(out_dir);
            write_evaluation_report(summary, report_path);
            std::cout << "report: " << report_path << "\n";
        } else if (layers_cmd->parsed()) {
            TrainConfig cfg = load_train_config(config_path, seed, seed_given, "");
            const std::string analysis_dir = out_dir.empty() ? cfg.out_dir + "/layer_analysis" : out_dir;
            const LayerAnalysisResult result = run_layer_analysis(cfg, analysis_dir);
            std::cout << "table: " << result.table_csv_path << "\n"
                      << "markdown: " << result.table_markdown_path << "\n"
                      << "weights: " << result.weights_csv_path << "\n"
                      << "chart: " << result.weights_svg_path << "\n"
                      << "weight sum: " << format_double(result.learned_weights.sum()) << "\n";
        } else if (synth_cmd->parsed()) {
            if (seed_given) synth.seed = seed;
            if (out_dir.empty()) throw ConfigError("synth-data: --out directory is required");
            const std::string manifest = generate_synthetic_dataset(out_dir, synth);
            std::cout << "manifest: " << manifest << "\n";
        } else if (report_cmd->parsed()) {
            const nlohmann::json doc = load_json(db_path);
            const ResultsDb db = load_results_db(db_path);
            const std::string dir = out_dir.empty() ? "." : out_dir;
            fs::create_directories(dir);
            std::ofstream(fs::path(dir) / "main_table.csv") << render_main_table_csv(db);
            std::ofstream(fs::path(dir) / "main_table.md") << render_main_table_markdown(db);
            std::cout << "main table: " << (fs::path(dir) / "main_table.csv").string() << "\n";
            if (doc.contains("selection_rows")) {
                std::vector<SelectionRow> rows;
                for (const auto& entry : doc["selection_rows"]) {
                    SelectionRow row;
                    row.label = entry.at("label").get<std::string>();
                    for (const auto& [name, value] : entry.at("metrics").items())
                        row.metrics[name] = value.get<double>();
                    row.seed = entry.value("seed", "");
                    row.checkpoint_hash = entry.value("checkpoint_hash", "");
                    rows.push_back(std::move(row));
                }
                std::ofstream(fs::path(dir) / "selection_table.csv")
                    << render_selection_table_csv(rows);
                std::ofstream(fs::path(dir) / "selection_table.md")
                    << render_selection_table_markdown(rows);
                std::cout << "selection table: " << (fs::path(dir) / "selection_table.csv").string()
                          << "\n";
            }
            if (doc.contains("layer_weights")) {
                LayerSelection sel = LayerSelection::make_learned(
                    static_cast<int>(doc["layer_weights"].size()));
                for (size_t j = 0; j < doc["layer_weights"].size(); ++j)
                    sel.logits[static_cast<long>(j)] =
                        std::log(std::max(doc["layer_weights"][j].get<double>(), 1e-300));
                write_layer_weight_report(sel, sel.logits.size(),
                                          (fs::path(dir) / "layer_weights.csv").string(),
                                          (fs::path(dir) / "layer_weights.svg").string());
                std::cout << "weight chart: " << (fs::path(dir) / "layer_weights.svg").string()
                          << "\n";
            }
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
