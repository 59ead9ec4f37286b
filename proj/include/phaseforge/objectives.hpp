#ifndef PHASEFORGE_OBJECTIVES_HPP
#define PHASEFORGE_OBJECTIVES_HPP

#include "phaseforge/model.hpp"
#include "phaseforge/phonetic.hpp"

#include <array>
#include <optional>

namespace phaseforge {

enum class Setting { base, regularization, supervision, conditioning };

std::string setting_name(Setting s);
Setting setting_from_name(const std::string& name);

// How phonetic information enters training. `tap_layer` of -1 resolves to
// the final encoder layer. The phonetic distance is a mean absolute error.
struct InjectionSpec {
    Setting setting = Setting::base;
    double lambda = 0.1;
    int tap_layer = -1;
    LayerSelection selection = LayerSelection::make_fixed(0);
    uint64_t bridge_seed = 0x7061686f6e65ull;

    void validate(const DemucsConfig& model_cfg, const PhoneticProvider* provider) const;
    int resolved_tap(const DemucsConfig& model_cfg) const;
};

// Per-term values behind a loss evaluation. `l1_wave` is the raw waveform
// L1 norm and `mag` carries its own 1/T; the composite is
//   total = (l1_wave + sum_i (sc[i] + mag[i])) / T + lambda * phonetic.
struct LossBreakdown {
    double l1_wave = 0.0;
    std::array<double, 3> sc{0.0, 0.0, 0.0};
    std::array<double, 3> mag{0.0, 0.0, 0.0};
    double phonetic = 0.0;
    double lambda = 0.0;
    long sample_count = 0;
    double total = 0.0;

    double recombine() const;
};

// The three STFT-loss resolutions, positionally paired:
// (512, 50, 240), (1024, 120, 600), (2048, 240, 1200).
const std::array<StftConfig, 3>& stft_loss_resolutions();

// Frobenius ratio || |S_ref| - |S_est| ||_F / || |S_ref| ||_F.
double spectral_convergence(const Waveform& ref, const Waveform& est, const StftConfig& cfg);

// || log|S_ref| - log|S_est| ||_1 / T with T the waveform sample count and
// the config's eps added inside the log.
double log_magnitude_loss(const Waveform& ref, const Waveform& est, const StftConfig& cfg);

// L1 + multi-resolution STFT composite. When `grad_est` is non-null it
// receives d(total)/d(est samples).
LossBreakdown base_loss(const Waveform& ref, const Waveform& est, Vec* grad_est = nullptr);

// Fixed non-learned orthonormal bridge mapping a tap's channel space onto
// the provider feature space (tap_channels -> feature_dim).
Mat regularization_bridge(long tap_channels, long feature_dim, uint64_t seed);

// Lazily built state that must persist across steps of one training run.
struct ObjectiveState {
    std::optional<Mat> reg_bridge;
};

struct ObjectiveEval {
    LossBreakdown breakdown;
    Waveform enhanced;
};

// Training state has numerically diverged (non-finite model output or loss
// value); distinct from configuration or argument misuse.
struct NonFiniteLoss : std::runtime_error {
    explicit NonFiniteLoss(const std::string& what) : std::runtime_error(what) {}
};

// Evaluates the configured setting on one (noisy, clean) pair; with
// `with_grad`, accumulates gradients into the model parameters and, in
// learned selection mode, into spec.selection.logits_grad.
ObjectiveEval evaluate_objective(Demucs& model, const PhoneticProvider* provider,
                                 InjectionSpec& spec, ObjectiveState& state,
                                 const Waveform& noisy, const Waveform& clean, bool with_grad);

}  // namespace phaseforge

#endif  // PHASEFORGE_OBJECTIVES_HPP
