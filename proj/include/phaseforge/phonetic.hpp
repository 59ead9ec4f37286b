#ifndef PHASEFORGE_PHONETIC_HPP
#define PHASEFORGE_PHONETIC_HPP

#include "phaseforge/audio.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace phaseforge {

// Uniformly random orthogonal matrix (QR of a Gaussian draw, sign-fixed
// for reproducibility).
Mat random_orthogonal(int dim, Rng& rng);

// Per-hidden-layer feature sequences; layers[j] is frames x dim.
struct LayeredFeatures {
    std::vector<Mat> layers;

    long num_layers() const { return static_cast<long>(layers.size()); }
    long frames() const { return layers.empty() ? 0 : layers.front().rows(); }
    long dim() const { return layers.empty() ? 0 : layers.front().cols(); }
};

// Frozen feature extractor. Implementations expose no trainable tensors;
// their internal constants never change during enhancement training.
class PhoneticProvider {
  public:
    virtual ~PhoneticProvider() = default;

    virtual std::string name() const = 0;
    virtual int num_layers() const = 0;  // layer count including layer 0
    virtual int feature_dim() const = 0;
    virtual double frame_rate() const = 0;
    virtual int sample_rate() const = 0;
    virtual bool differentiable() const = 0;

    virtual LayeredFeatures extract(const Waveform& wave) const = 0;

    // Pullback of per-layer feature gradients onto the input samples.
    // Only meaningful for differentiable providers; others must throw.
    virtual Vec input_gradient(const Waveform& wave,
                               const std::vector<Mat>& layer_grads) const = 0;

    // Byte-level digest of every internal constant; used to verify
    // frozenness across training steps.
    virtual std::string parameter_digest() const = 0;
};

struct ToyProviderConfig {
    int mix_layers = 4;      // layers above the filterbank; num_layers = mix_layers + 1
    int dim = 8;
    double frame_rate = 50.0;  // one vector per 20 ms
    int sample_rate = 16000;
    uint64_t seed = 0;
};

// Deterministic differentiable stand-in for a pretrained speech encoder:
// layer 0 is a log-compressed mel filterbank; each higher layer applies a
// fixed seeded orthogonal mixing followed by tanh.
class ToyProvider : public PhoneticProvider {
  public:
    explicit ToyProvider(const ToyProviderConfig& cfg);

    std::string name() const override { return "toy"; }
    int num_layers() const override { return cfg_.mix_layers + 1; }
    int feature_dim() const override { return cfg_.dim; }
    double frame_rate() const override { return cfg_.frame_rate; }
    int sample_rate() const override { return cfg_.sample_rate; }
    bool differentiable() const override { return true; }

    LayeredFeatures extract(const Waveform& wave) const override;
    Vec input_gradient(const Waveform& wave,
                       const std::vector<Mat>& layer_grads) const override;
    std::string parameter_digest() const override;

    const ToyProviderConfig& config() const { return cfg_; }

  private:
    long frame_count(long num_samples) const;

    ToyProviderConfig cfg_;
    int hop_ = 0, win_ = 0, n_fft_ = 0;
    Vec window_;
    Mat mel_;                    // dim x bins
    std::vector<Mat> mixers_;    // mix_layers orthogonal dim x dim matrices
};

// Adapter for provider executables: invoked as `exe <in.wav> <out.bin>`,
// where out.bin is three little-endian int64 counts (layers, frames, dim)
// followed by layer-major, row-major float64 features. Not differentiable.
class ExternalProvider : public PhoneticProvider {
  public:
    ExternalProvider(std::string provider_name, std::string executable, int num_layers,
                     int dim, double frame_rate, int sample_rate);

    std::string name() const override { return name_; }
    int num_layers() const override { return num_layers_; }
    int feature_dim() const override { return dim_; }
    double frame_rate() const override { return frame_rate_; }
    int sample_rate() const override { return sample_rate_; }
    bool differentiable() const override { return false; }

    LayeredFeatures extract(const Waveform& wave) const override;
    Vec input_gradient(const Waveform&, const std::vector<Mat>&) const override;
    std::string parameter_digest() const override;

  private:
    std::string name_, executable_;
    int num_layers_, dim_, sample_rate_;
    double frame_rate_;
};

// Provider registry entry, loaded from a JSON config file.
struct ProviderSpec {
    std::string kind = "toy";  // "toy" | "external"
    std::string artifact_path;
    int num_layers = 5;
    int dim = 8;
    double frame_rate = 50.0;
    int sample_rate = 16000;
    uint64_t seed = 0;
};

std::map<std::string, ProviderSpec> load_provider_registry(const std::string& path);
std::unique_ptr<PhoneticProvider> make_provider(const std::string& name, const ProviderSpec& spec);

// ------------------------------------------------------- layer selection

struct LayerSelection {
    enum class Mode { fixed, mean, learned };
    Mode mode = Mode::fixed;
    int layer = 0;     // fixed mode
    Vec logits;        // learned mode, one per provider layer
    Vec logits_grad;

    static LayerSelection make_fixed(int layer_index);
    static LayerSelection make_mean();
    static LayerSelection make_learned(int num_layers);  // zero logits = uniform

    void zero_grad() { logits_grad = Vec::Zero(logits.size()); }
    void validate(long num_layers) const;
};

// Effective mixing weights over num_layers layers (one-hot / uniform /
// softmax of the logits). Always nonnegative and summing to 1.
Vec selection_weights(const LayerSelection& sel, long num_layers);

// Weighted combination of the provider layers per the selection.
Mat select(const LayeredFeatures& features, const LayerSelection& sel);

// Pullback of a gradient on select()'s output. Accumulates into
// sel.logits_grad in learned mode; when need_feature_grads is set, also
// returns per-layer gradients (for providers that backprop to their input).
std::vector<Mat> select_backward(const LayeredFeatures& features, LayerSelection& sel,
                                 const Mat& grad_out, bool need_feature_grads);

// Learned-mode weight table (layer index -> weight), summing to 1.
Vec report_layer_weights(const LayerSelection& sel, long num_layers);

// CSV table plus an SVG bar chart of the learned weights.
void write_layer_weight_report(const LayerSelection& sel, long num_layers,
                               const std::string& csv_path, const std::string& svg_path);

}  // namespace phaseforge

#endif  // PHASEFORGE_PHONETIC_HPP
