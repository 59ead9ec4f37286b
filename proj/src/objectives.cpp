#include "phaseforge/objectives.hpp"

namespace phaseforge {

std::string setting_name(Setting s) {
    switch (s) {
        case Setting::base: return "base";
        case Setting::regularization: return "regularization";
        case Setting::supervision: return "supervision";
        case Setting::conditioning: return "conditioning";
    }
    return "base";
}

Setting setting_from_name(const std::string& name) {
    if (name == "base") return Setting::base;
    if (name == "regularization" || name == "reg") return Setting::regularization;
    if (name == "supervision" || name == "sup") return Setting::supervision;
    if (name == "conditioning" || name == "cond") return Setting::conditioning;
    throw ConfigError("unknown setting '" + name + "'");
}

int InjectionSpec::resolved_tap(const DemucsConfig& model_cfg) const {
    return tap_layer < 0 ? model_cfg.depth : tap_layer;
}

void InjectionSpec::validate(const DemucsConfig& model_cfg, const PhoneticProvider* provider) const {
    if (lambda < 0.0) throw ConfigError("InjectionSpec: lambda must be nonnegative");
    if (setting == Setting::base) return;
    if (provider == nullptr)
        throw ConfigError("InjectionSpec: setting '" + setting_name(setting) +
                          "' requires a phonetic provider");
    selection.validate(provider->num_layers());
    if (setting == Setting::conditioning) {
        if (model_cfg.causal) throw ConfigError("conditioning requires non-causal setup");
        if (model_cfg.cond_dim != provider->feature_dim())
            throw ConfigError("InjectionSpec: model cond_dim must equal the provider feature dim");
    }
    if (setting == Setting::supervision && !provider->differentiable())
        throw ConfigError("provider '" + provider->name() +
                          "' is not differentiable; supervision cannot back-propagate through it");
    if (setting == Setting::regularization) {
        const int tap = resolved_tap(model_cfg);
        if (tap < 0 || tap > model_cfg.depth)
            throw ConfigError("InjectionSpec: regularization tap layer out of range");
    }
}

double LossBreakdown::recombine() const {
    double bracket = l1_wave;
    for (int i = 0; i < 3; ++i) bracket += sc[i] + mag[i];
    return bracket / static_cast<double>(sample_count) + lambda * phonetic;
}

const std::array<StftConfig, 3>& stft_loss_resolutions() {
    static const std::array<StftConfig, 3> resolutions = {
        StftConfig{.n_fft = 512, .hop = 50, .win_length = 240},
        StftConfig{.n_fft = 1024, .hop = 120, .win_length = 600},
        StftConfig{.n_fft = 2048, .hop = 240, .win_length = 1200},
    };
    return resolutions;
}

namespace {

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void check_pair(const Waveform& ref, const Waveform& est) {
    ref.validate();
    est.validate();
    if (ref.length() != est.length())
        throw std::invalid_argument("loss: reference and estimate lengths differ");
}

struct ResolutionTerms {
    double sc = 0.0;
    double mag = 0.0;
    CMat grad_values;  // dL_bracket/d(est STFT values); empty without grads
};

// Shared work for one resolution: both magnitudes, both terms, and the
// pullback onto the estimate's complex spectrogram when wanted.
ResolutionTerms resolution_terms(const Waveform& ref, const Waveform& est, const StftConfig& cfg,
                                 bool with_grad) {
    const ComplexSpectrogram ref_spec = stft(ref, cfg);
    const ComplexSpectrogram est_spec = stft(est, cfg);
    const Mat ref_mag = ref_spec.magnitude();
    const Mat est_mag = est_spec.magnitude();
    const double ref_norm = ref_mag.norm();
    if (ref_norm <= 0.0)
        throw std::invalid_argument(
            "spectral loss: reference has zero spectral energy (division by zero); "
            "skip silent segments");

    const double T = static_cast<double>(ref.length());
    const Mat diff = ref_mag - est_mag;
    const double diff_norm = diff.norm();

    ResolutionTerms out;
    out.sc = diff_norm / ref_norm;
    const Mat log_gap =
        (est_mag.array() + cfg.eps).log() - (ref_mag.array() + cfg.eps).log();
    out.mag = log_gap.cwiseAbs().sum() / T;

    if (!with_grad) return out;

    // d sc / d est_mag and d mag / d est_mag.
    Mat mag_grad = Mat::Zero(est_mag.rows(), est_mag.cols());
    if (diff_norm > 0.0) mag_grad = -diff / (diff_norm * ref_norm);
    mag_grad.array() += log_gap.unaryExpr(&sgn).array() / (est_mag.array() + cfg.eps) / T;

    // Pull back through the magnitude: G = dL/d|X| * X / |X|.
    out.grad_values.resize(est_mag.rows(), est_mag.cols());
    for (long c = 0; c < est_mag.cols(); ++c) {
        for (long r = 0; r < est_mag.rows(); ++r) {
            const double m = est_mag(r, c);
            out.grad_values(r, c) =
                m > 0.0 ? est_spec.values(r, c) * (mag_grad(r, c) / m) : std::complex<double>(0.0);
        }
    }
    return out;
}

}  // namespace

double spectral_convergence(const Waveform& ref, const Waveform& est, const StftConfig& cfg) {
    check_pair(ref, est);
    return resolution_terms(ref, est, cfg, false).sc;
}

double log_magnitude_loss(const Waveform& ref, const Waveform& est, const StftConfig& cfg) {
    check_pair(ref, est);
    return resolution_terms(ref, est, cfg, false).mag;
}

LossBreakdown base_loss(const Waveform& ref, const Waveform& est, Vec* grad_est) {
    check_pair(ref, est);
    const long T = ref.length();

    LossBreakdown bd;
    bd.sample_count = T;
    const Vec residual = ref.samples - est.samples;
    bd.l1_wave = residual.cwiseAbs().sum();

    Vec bracket_grad;
    if (grad_est != nullptr) bracket_grad = -residual.unaryExpr(&sgn);

    const auto& resolutions = stft_loss_resolutions();
    for (size_t i = 0; i < resolutions.size(); ++i) {
        const ResolutionTerms terms = resolution_terms(ref, est, resolutions[i], grad_est != nullptr);
        bd.sc[i] = terms.sc;
        bd.mag[i] = terms.mag;
        if (grad_est != nullptr)
            bracket_grad += stft_adjoint(terms.grad_values, T, resolutions[i]);
    }
    bd.total = bd.recombine();
    if (grad_est != nullptr) *grad_est = bracket_grad / static_cast<double>(T);
    return bd;
}

Mat regularization_bridge(long tap_channels, long feature_dim, uint64_t seed) {
    if (tap_channels < 1 || feature_dim < 1)
        throw ConfigError("regularization_bridge: dimensions must be positive");
    Rng rng(seed);
    const int side = static_cast<int>(std::max(tap_channels, feature_dim));
    const Mat q = random_orthogonal(side, rng);
    if (tap_channels >= feature_dim)
        return q.topRows(feature_dim).leftCols(tap_channels);  // orthonormal rows
    return q.leftCols(tap_channels).topRows(feature_dim);      // orthonormal columns
}

namespace {

// Mean-absolute distance plus its sign matrix, the shared core of the
// regularization and supervision phonetic terms.
double mean_abs_with_sign(const Mat& diff, Mat* sign_out) {
    const double count = static_cast<double>(diff.size());
    if (sign_out != nullptr) *sign_out = diff.unaryExpr(&sgn) / count;
    return diff.cwiseAbs().sum() / count;
}

}  // namespace

namespace {

Demucs::Forward checked_forward(Demucs& model, const Waveform& input,
                                const ConditioningInput* cond = nullptr) {
    Demucs::Forward fwd = model.forward(input, cond);
    if (!fwd.output.samples.allFinite())
        throw NonFiniteLoss("model output is non-finite (diverged parameters)");
    return fwd;
}

}  // namespace

ObjectiveEval evaluate_objective(Demucs& model, const PhoneticProvider* provider,
                                 InjectionSpec& spec, ObjectiveState& state,
                                 const Waveform& noisy, const Waveform& clean, bool with_grad) {
    spec.validate(model.config(), provider);
    check_pair(clean, noisy);

    ObjectiveEval result;
    Vec base_grad;
    Vec* base_grad_ptr = with_grad ? &base_grad : nullptr;

    switch (spec.setting) {
        case Setting::base: {
            auto fwd = checked_forward(model, noisy);
            result.breakdown = base_loss(clean, fwd.output, base_grad_ptr);
            result.breakdown.lambda = spec.lambda;
            if (with_grad) model.backward(fwd, base_grad);
            result.enhanced = std::move(fwd.output);
            break;
        }

        case Setting::regularization: {
            auto fwd = checked_forward(model, noisy);
            result.breakdown = base_loss(clean, fwd.output, base_grad_ptr);

            const int tap_index = spec.resolved_tap(model.config());
            const LayeredFeatures features = provider->extract(clean);
            const Mat target = select(features, spec.selection);

            const Mat tap_time = fwd.taps.taps[static_cast<size_t>(tap_index)].transpose();
            const Mat aligned = interpolate_time(tap_time, target.rows());
            const long channels = aligned.cols();
            if (!state.reg_bridge || state.reg_bridge->rows() != target.cols() ||
                state.reg_bridge->cols() != channels)
                state.reg_bridge = regularization_bridge(channels, target.cols(), spec.bridge_seed);

            const Mat projected = aligned * state.reg_bridge->transpose();
            Mat sign;
            result.breakdown.phonetic =
                mean_abs_with_sign(projected - target, with_grad ? &sign : nullptr);
            result.breakdown.lambda = spec.lambda;
            result.breakdown.total = result.breakdown.recombine();

            if (with_grad) {
                const Mat aligned_grad = spec.lambda * sign * (*state.reg_bridge);
                const Mat tap_grad =
                    interpolate_time_adjoint(aligned_grad, tap_time.rows()).transpose();
                model.backward(fwd, base_grad, {{tap_index, tap_grad}});
                select_backward(features, spec.selection, -spec.lambda * sign, false);
            }
            result.enhanced = std::move(fwd.output);
            break;
        }

        case Setting::supervision: {
            auto fwd = checked_forward(model, noisy);
            result.breakdown = base_loss(clean, fwd.output, base_grad_ptr);

            const LayeredFeatures ref_features = provider->extract(clean);
            const LayeredFeatures est_features = provider->extract(fwd.output);
            const Mat ref_sel = select(ref_features, spec.selection);
            const Mat est_sel = select(est_features, spec.selection);

            Mat sign;
            result.breakdown.phonetic =
                mean_abs_with_sign(est_sel - ref_sel, with_grad ? &sign : nullptr);
            result.breakdown.lambda = spec.lambda;
            result.breakdown.total = result.breakdown.recombine();

            if (with_grad) {
                const std::vector<Mat> layer_grads =
                    select_backward(est_features, spec.selection, spec.lambda * sign, true);
                const Vec wave_grad = provider->input_gradient(fwd.output, layer_grads);
                model.backward(fwd, base_grad + wave_grad);
                select_backward(ref_features, spec.selection, -spec.lambda * sign, false);
            }
            result.enhanced = std::move(fwd.output);
            break;
        }

        case Setting::conditioning: {
            const LayeredFeatures features = provider->extract(noisy);
            ConditioningInput cond;
            cond.features = select(features, spec.selection);
            auto fwd = checked_forward(model, noisy, &cond);
            result.breakdown = base_loss(clean, fwd.output, base_grad_ptr);
            result.breakdown.lambda = spec.lambda;
            if (with_grad) {
                const Mat feature_grad = model.backward(fwd, base_grad);
                select_backward(features, spec.selection, feature_grad, false);
            }
            result.enhanced = std::move(fwd.output);
            break;
        }
    }
    if (!std::isfinite(result.breakdown.total))
        throw NonFiniteLoss("loss total is non-finite");
    return result;
}

}  // namespace phaseforge
