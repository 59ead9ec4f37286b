#ifndef PHASEFORGE_MODEL_HPP
#define PHASEFORGE_MODEL_HPP

#include "phaseforge/audio.hpp"
#include "phaseforge/nn.hpp"

#include <memory>
#include <utility>
#include <vector>

namespace phaseforge {

enum class CondInit { identity, random };

// Geometry of the waveform U-Net enhancer.
struct DemucsConfig {
    int hidden = 48;          // first encoder layer width (H)
    int upscale = 4;          // input resampling factor (U)
    int stride = 4;           // conv stride (S)
    int kernel = 8;
    int depth = 5;
    bool causal = false;      // causal => unidirectional bottleneck
    int lstm_layers = 2;
    int channel_cap_mult = 8;  // channels capped at channel_cap_mult * hidden
    bool normalize = true;     // divide input by its std, multiply back after
    double normalize_floor = 1e-3;
    int cond_dim = 0;          // conditioning feature dim; 0 = unconditioned
    CondInit cond_init = CondInit::identity;

    void validate() const;
    // Encoder output channels at layer i in [0, depth]; layer 0 is the
    // single-channel input tap.
    long channels(int layer) const;
    long bottleneck_channels() const { return channels(depth); }
};

// Smallest T' >= T such that the upsampled signal divides evenly through
// every strided stage and the decoder reproduces its input length exactly.
long valid_length(long input_length, const DemucsConfig& cfg);

// Upper bound, in input-rate samples, on how far ahead of time t a causal
// model's output at t can see: one total stride block plus the reach of the
// two resampling filters.
long lookahead_budget(const DemucsConfig& cfg);

// Closed-form trainable parameter count for a config (must match the
// instantiated model exactly).
long parameter_count(const DemucsConfig& cfg);

// Per-layer encoder activations e_0..e_depth recorded during a forward
// pass; taps[i] is channels(i) x frames.
struct EncoderTaps {
    std::vector<Mat> taps;
};

// Phonetic features injected at the bottleneck, time-major (frames x dim).
struct ConditioningInput {
    Mat features;
};

class Demucs {
  public:
    Demucs(const DemucsConfig& cfg, uint64_t seed);

    const DemucsConfig& config() const { return cfg_; }

    struct Cache;
    struct Forward {
        Waveform output;
        EncoderTaps taps;
        std::shared_ptr<Cache> cache;
    };

    // Inference + cache for a later backward. Input of any length >= 1 is
    // padded internally to valid_length and the output trimmed back.
    Forward forward(const Waveform& input, const ConditioningInput* cond = nullptr) const;

    // Accumulates parameter gradients given dL/d(output samples); extra
    // gradients on encoder taps may be injected as (layer index, matrix)
    // pairs. Returns dL/d(conditioning features) when conditioned, else an
    // empty matrix.
    Mat backward(const Forward& fwd, const Vec& grad_output,
                 const std::vector<std::pair<int, Mat>>& tap_grads = {});

    void zero_grad();
    std::vector<TensorRef> parameters();

  private:
    struct EncLayer {
        Conv1d conv;  // C_{i-1} -> C_i, kernel/stride
        Conv1d mix;   // C_i -> 2 C_i, 1x1, feeds the GLU
    };
    struct DecLayer {
        Conv1d mix;             // C_i -> 2 C_i, 1x1, feeds the GLU
        ConvTranspose1d convtr;  // C_i -> C_{i-1}
        bool final = false;      // last layer skips the ReLU
    };

    DemucsConfig cfg_;
    std::vector<EncLayer> encoder_;
    std::vector<DecLayer> decoder_;
    SequenceModule sequence_;
    Linear cond_proj_;  // (C_depth + cond_dim) -> C_depth, when cond_dim > 0

    friend struct Cache;
};

// True iff perturbing the input strictly after t + lookahead leaves outputs
// at times <= t unchanged (max abs difference < 1e-6). `magnitude` scales
// the injected perturbation.
bool causality_probe(const Demucs& model, long t, long lookahead, Rng& rng,
                     long probe_length = 4096, double magnitude = 0.1);

}  // namespace phaseforge

#endif  // PHASEFORGE_MODEL_HPP
