#ifndef PHASEFORGE_TRAINER_HPP
#define PHASEFORGE_TRAINER_HPP

#include "phaseforge/checkpoint.hpp"
#include "phaseforge/dataset.hpp"
#include "phaseforge/objectives.hpp"

#include <memory>

namespace phaseforge {

struct TrainConfig {
    // data
    std::string manifest;
    double segment_s = 4.5;
    double stride_s = 0.5;
    AugmentConfig augment;

    // model + objective
    DemucsConfig model;
    InjectionSpec injection;
    ProviderSpec provider;       // inline provider description
    std::string provider_name = "toy";

    // optimization
    int batch_size = 16;
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    long epochs = 300;
    uint64_t seed = 0;
    int sample_rate = 16000;

    // io
    std::string out_dir = "runs/default";
    std::string resume_from;

    void validate() const;
};

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& doc);

// Applies PHASEFORGE_* environment variables onto a config document:
// PHASEFORGE_learning_rate=1e-3, PHASEFORGE_model__hidden=8 (double
// underscore nests). Values parse as JSON when possible, else as strings.
void apply_env_overrides(nlohmann::json& doc, const std::string& prefix = "PHASEFORGE_");

struct Adam {
    double lr = 3e-4, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long t = 0;
    std::vector<Vec> m, v;

    void init(const std::vector<TensorRef>& params);
    void step(const std::vector<TensorRef>& params);
};

// Loss became non-finite; carries the offending batch and a diagnostic
// snapshot path.
struct TrainAbort : std::runtime_error {
    TrainAbort(const std::string& what, std::string batch, std::string diagnostic)
        : std::runtime_error(what), batch_id(std::move(batch)), diagnostic_path(std::move(diagnostic)) {}
    std::string batch_id;
    std::string diagnostic_path;
};

struct TrainResult {
    std::string best_checkpoint;
    std::string last_checkpoint;
    std::string metrics_path;
    double first_step_loss = 0.0;
    double final_step_loss = 0.0;
    double best_validation = 0.0;
    long steps = 0;
    std::string provider_digest_before;
    std::string provider_digest_after;
};

TrainResult train(const TrainConfig& cfg);

// Everything train() assembles, reusable by inference and verification.
struct Session {
    TrainConfig config;
    std::unique_ptr<PhoneticProvider> provider;  // null for the base setting
    std::unique_ptr<Demucs> model;
    InjectionSpec injection;
    ObjectiveState objective_state;

    // Trainable tensors: model parameters plus learned-selection logits.
    std::vector<TensorRef> trainable();
    void zero_grad();
    ObjectiveEval objective(const Waveform& noisy, const Waveform& clean, bool with_grad);
};

Session build_session(const TrainConfig& cfg);
Session session_from_checkpoint(const std::string& path);
void restore_session_tensors(Session& session, const Checkpoint& ckpt);

// Mean validation loss without augmentation or parameter updates.
double validation_loss(Session& session, const std::vector<NoisyCleanPair>& pairs);

struct GradientProbe {
    std::string tensor;
    long index = 0;
    double analytic = 0.0;
    double fd = 0.0;
    double rel_error = 0.0;
};

struct GradientReport {
    std::vector<GradientProbe> probes;
    double max_rel_error = 0.0;
    double step = 0.0;
    std::string provider_digest_before;
    std::string provider_digest_after;
    bool provider_frozen = true;
    long provider_trainable_tensors = 0;  // always 0: providers are frozen
};

// Central finite differences against the analytic gradients on one probe
// pair drawn from the config's manifest, truncated to probe_samples.
// Relative errors use a denominator floor of 1e-6.
GradientReport gradient_check(const TrainConfig& cfg, int num_probes, double step = 1e-6,
                              long probe_samples = 512);

}  // namespace phaseforge

#endif  // PHASEFORGE_TRAINER_HPP
