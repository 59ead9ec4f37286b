#include "phaseforge/model.hpp"

#include <numeric>

namespace phaseforge {

void DemucsConfig::validate() const {
    if (hidden < 1 || depth < 1 || lstm_layers < 1)
        throw ConfigError("DemucsConfig: hidden, depth and lstm_layers must be >= 1");
    if (stride < 1 || kernel < stride)
        throw ConfigError("DemucsConfig: require kernel >= stride >= 1");
    if (upscale < 1) throw ConfigError("DemucsConfig: upscale must be >= 1");
    if (channel_cap_mult < 1) throw ConfigError("DemucsConfig: channel cap must be >= 1");
    if (cond_dim < 0) throw ConfigError("DemucsConfig: cond_dim must be >= 0");
    if (cond_dim > 0 && causal)
        throw ConfigError("conditioning requires non-causal setup");
    if (normalize_floor <= 0.0) throw ConfigError("DemucsConfig: normalize_floor must be positive");
}

long DemucsConfig::channels(int layer) const {
    if (layer < 0 || layer > depth) throw std::invalid_argument("DemucsConfig::channels: layer out of range");
    if (layer == 0) return 1;
    const long grown = static_cast<long>(hidden) << (layer - 1);
    return std::min(grown, static_cast<long>(channel_cap_mult) * hidden);
}

long valid_length(long input_length, const DemucsConfig& cfg) {
    cfg.validate();
    if (input_length < 1) throw std::invalid_argument("valid_length: input length must be >= 1");
    long total = 1;
    for (int i = 0; i < cfg.depth; ++i) total *= cfg.stride;
    const long block = std::lcm(total, static_cast<long>(cfg.upscale));
    long high = std::max(input_length * cfg.upscale, block);
    const long rem = high % block;
    if (rem != 0) high += block - rem;
    return high / cfg.upscale;
}

long lookahead_budget(const DemucsConfig& cfg) {
    cfg.validate();
    long total = 1;
    for (int i = 0; i < cfg.depth; ++i) total *= cfg.stride;
    const long w = resample_half_width(cfg.upscale);
    const long high_rate_reach = 2 * w + total - 1;
    return (high_rate_reach + cfg.upscale - 1) / cfg.upscale;
}

long parameter_count(const DemucsConfig& cfg) {
    cfg.validate();
    long count = 0;
    for (int i = 1; i <= cfg.depth; ++i) {
        const long cin = cfg.channels(i - 1), cout = cfg.channels(i);
        count += cout * cin * cfg.kernel + cout;      // encoder conv
        count += 2 * cout * cout + 2 * cout;          // encoder 1x1 pre-GLU
        count += 2 * cout * cout + 2 * cout;          // decoder 1x1 pre-GLU
        count += cin * cfg.kernel * cout + cin;       // decoder transposed conv
    }
    const long c = cfg.bottleneck_channels();
    const long per_lstm = 4 * c * c + 4 * c * c + 4 * c;
    const long directions = cfg.causal ? 1 : 2;
    count += directions * cfg.lstm_layers * per_lstm;
    if (!cfg.causal) count += c * 2 * c + c;          // direction merge
    if (cfg.cond_dim > 0) count += c * (c + cfg.cond_dim) + c;
    return count;
}

// ------------------------------------------------------------------ cache

struct Demucs::Cache {
    long input_length = 0;
    long padded_length = 0;
    long high_rate_length = 0;
    Vec sigma;  // per-sample normalization scale at input rate

    struct EncCache {
        Mat conv_out;  // pre-ReLU
        Mat mix_in;    // post-ReLU
        Mat mix_out;   // pre-GLU
    };
    std::vector<EncCache> enc;

    bool conditioned = false;
    long cond_source_rows = 0;
    Mat cond_concat;  // (C + dim) x frames

    Mat seq_in;
    SequenceModule::Cache seq;

    struct DecCache {
        Mat in_sum;      // layer input after the skip add
        Mat mix_out;     // pre-GLU
        Mat convtr_in;   // post-GLU
        Mat convtr_out;  // pre-ReLU (final layer: network output)
    };
    std::vector<DecCache> dec;  // in application order, deepest level first
};

// ------------------------------------------------------------------ model

Demucs::Demucs(const DemucsConfig& cfg, uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    const int pad_total = cfg.kernel - cfg.stride;

    encoder_.resize(cfg.depth);
    for (int i = 1; i <= cfg.depth; ++i) {
        EncLayer& layer = encoder_[i - 1];
        layer.conv.init(static_cast<int>(cfg.channels(i - 1)), static_cast<int>(cfg.channels(i)),
                        cfg.kernel, cfg.stride, rng);
        if (cfg.causal) {
            layer.conv.pad_left = pad_total;
            layer.conv.pad_right = 0;
        } else {
            layer.conv.pad_left = pad_total / 2;
            layer.conv.pad_right = pad_total - pad_total / 2;
        }
        layer.mix.init(static_cast<int>(cfg.channels(i)), static_cast<int>(2 * cfg.channels(i)), 1, 1, rng);
    }

    sequence_.init(static_cast<int>(cfg.bottleneck_channels()), cfg.lstm_layers, !cfg.causal, rng);

    decoder_.resize(cfg.depth);
    for (int j = 0; j < cfg.depth; ++j) {
        const int level = cfg.depth - j;
        DecLayer& layer = decoder_[j];
        layer.mix.init(static_cast<int>(cfg.channels(level)), static_cast<int>(2 * cfg.channels(level)),
                       1, 1, rng);
        layer.convtr.init(static_cast<int>(cfg.channels(level)), static_cast<int>(cfg.channels(level - 1)),
                          cfg.kernel, cfg.stride, rng);
        if (cfg.causal) {
            layer.convtr.trim_left = 0;
            layer.convtr.trim_right = pad_total;
        } else {
            layer.convtr.trim_left = pad_total / 2;
            layer.convtr.trim_right = pad_total - pad_total / 2;
        }
        layer.final = (level == 1);
    }

    if (cfg.cond_dim > 0) {
        const int c = static_cast<int>(cfg.bottleneck_channels());
        if (cfg.cond_init == CondInit::identity)
            cond_proj_.init_identity(c + cfg.cond_dim, c);
        else
            cond_proj_.init(c + cfg.cond_dim, c, rng);
    }
}

namespace {

Vec normalization_scale(const Vec& x, const DemucsConfig& cfg) {
    const long n = x.size();
    Vec sigma(n);
    if (!cfg.normalize) {
        sigma.setOnes();
        return sigma;
    }
    if (cfg.causal) {
        // Running std so the scale at time t only sees samples up to t.
        double sum = 0.0, sum_sq = 0.0;
        for (long t = 0; t < n; ++t) {
            sum += x[t];
            sum_sq += x[t] * x[t];
            const double mean = sum / (t + 1);
            const double var = std::max(0.0, sum_sq / (t + 1) - mean * mean);
            sigma[t] = std::sqrt(var) + cfg.normalize_floor;
        }
    } else {
        const double mean = x.mean();
        const double var = std::max(0.0, x.squaredNorm() / n - mean * mean);
        sigma.setConstant(std::sqrt(var) + cfg.normalize_floor);
    }
    return sigma;
}

}  // namespace

Demucs::Forward Demucs::forward(const Waveform& input, const ConditioningInput* cond) const {
    input.validate();
    if (cond != nullptr && cfg_.cond_dim == 0)
        throw ConfigError("Demucs::forward: model was built without a conditioning path");
    if (cond == nullptr && cfg_.cond_dim > 0)
        throw ConfigError("Demucs::forward: conditioned model requires features");
    if (cond != nullptr && cond->features.cols() != cfg_.cond_dim)
        throw std::invalid_argument("Demucs::forward: conditioning feature dim mismatch");

    Forward result;
    auto cache = std::make_shared<Cache>();
    const long T = input.length();
    cache->input_length = T;
    cache->padded_length = valid_length(T, cfg_);
    cache->sigma = normalization_scale(input.samples, cfg_);

    Vec padded = Vec::Zero(cache->padded_length);
    padded.head(T) = input.samples.cwiseQuotient(cache->sigma);
    const Vec high = upsample(padded, cfg_.upscale);
    cache->high_rate_length = high.size();

    result.taps.taps.resize(cfg_.depth + 1);
    result.taps.taps[0] = high.transpose();  // 1 x L

    cache->enc.resize(cfg_.depth);
    Mat h = result.taps.taps[0];
    for (int i = 0; i < cfg_.depth; ++i) {
        Cache::EncCache& ec = cache->enc[i];
        ec.conv_out = encoder_[i].conv.forward(h);
        ec.mix_in = relu(ec.conv_out);
        ec.mix_out = encoder_[i].mix.forward(ec.mix_in);
        h = glu(ec.mix_out);
        result.taps.taps[i + 1] = h;
    }

    if (cond != nullptr) {
        cache->conditioned = true;
        cache->cond_source_rows = cond->features.rows();
        const Mat aligned = interpolate_time(cond->features, h.cols());  // frames x dim
        cache->cond_concat.resize(h.rows() + cfg_.cond_dim, h.cols());
        cache->cond_concat.topRows(h.rows()) = h;
        cache->cond_concat.bottomRows(cfg_.cond_dim) = aligned.transpose();
        h = cond_proj_.forward(cache->cond_concat);
    }
    cache->seq_in = h;

    h = sequence_.forward(h, cache->seq);

    cache->dec.resize(cfg_.depth);
    for (int j = 0; j < cfg_.depth; ++j) {
        const int level = cfg_.depth - j;
        Cache::DecCache& dc = cache->dec[j];
        dc.in_sum = h + result.taps.taps[level];
        dc.mix_out = decoder_[j].mix.forward(dc.in_sum);
        dc.convtr_in = glu(dc.mix_out);
        dc.convtr_out = decoder_[j].convtr.forward(dc.convtr_in);
        h = decoder_[j].final ? dc.convtr_out : relu(dc.convtr_out);
    }

    const Vec high_out = h.row(0).transpose();
    const Vec down = downsample(high_out, cfg_.upscale);
    result.output.sample_rate = input.sample_rate;
    result.output.samples = down.head(T).cwiseProduct(cache->sigma);
    result.cache = std::move(cache);
    return result;
}

Mat Demucs::backward(const Forward& fwd, const Vec& grad_output,
                     const std::vector<std::pair<int, Mat>>& tap_grads) {
    const Cache& cache = *fwd.cache;
    if (grad_output.size() != cache.input_length)
        throw std::invalid_argument("Demucs::backward: gradient length mismatch");

    Vec grad_down = Vec::Zero(cache.padded_length);
    grad_down.head(cache.input_length) = grad_output.cwiseProduct(cache.sigma);
    const Vec grad_high = downsample_adjoint(grad_down, cache.high_rate_length, cfg_.upscale);

    std::vector<Mat> tap_accum(cfg_.depth + 1);
    for (int i = 0; i <= cfg_.depth; ++i)
        tap_accum[i] = Mat::Zero(fwd.taps.taps[i].rows(), fwd.taps.taps[i].cols());
    for (const auto& [index, grad] : tap_grads) {
        if (index < 0 || index > cfg_.depth)
            throw std::invalid_argument("Demucs::backward: tap index out of range");
        if (grad.rows() != tap_accum[index].rows() || grad.cols() != tap_accum[index].cols())
            throw std::invalid_argument("Demucs::backward: tap gradient shape mismatch");
        tap_accum[index] += grad;
    }

    Mat g = grad_high.transpose();  // 1 x L
    for (int j = cfg_.depth - 1; j >= 0; --j) {
        const int level = cfg_.depth - j;
        const Cache::DecCache& dc = cache.dec[j];
        if (!decoder_[j].final) g = relu_backward(dc.convtr_out, g);
        g = decoder_[j].convtr.backward(dc.convtr_in, g);
        g = glu_backward(dc.mix_out, g);
        g = decoder_[j].mix.backward(dc.in_sum, g);
        tap_accum[level] += g;  // skip connection branch
        // `g` continues into the deeper decoder stage (or sequence module)
    }

    g = sequence_.backward(cache.seq, g);

    Mat cond_grad;
    if (cache.conditioned) {
        const Mat concat_grad = cond_proj_.backward(cache.cond_concat, g);
        g = concat_grad.topRows(concat_grad.rows() - cfg_.cond_dim);
        const Mat feat_grad = concat_grad.bottomRows(cfg_.cond_dim).transpose();  // frames x dim
        cond_grad = interpolate_time_adjoint(feat_grad, cache.cond_source_rows);
    }
    tap_accum[cfg_.depth] += g;

    for (int i = cfg_.depth - 1; i >= 0; --i) {
        const Cache::EncCache& ec = cache.enc[i];
        Mat ge = glu_backward(ec.mix_out, tap_accum[i + 1]);
        ge = encoder_[i].mix.backward(ec.mix_in, ge);
        ge = relu_backward(ec.conv_out, ge);
        ge = encoder_[i].conv.backward(fwd.taps.taps[i], ge);
        tap_accum[i] += ge;
    }
    // tap_accum[0] is the gradient at the network input; nothing upstream owns it.
    return cond_grad;
}

void Demucs::zero_grad() {
    for (auto& layer : encoder_) {
        layer.conv.zero_grad();
        layer.mix.zero_grad();
    }
    sequence_.zero_grad();
    for (auto& layer : decoder_) {
        layer.mix.zero_grad();
        layer.convtr.zero_grad();
    }
    if (cfg_.cond_dim > 0) cond_proj_.zero_grad();
}

std::vector<TensorRef> Demucs::parameters() {
    std::vector<TensorRef> refs;
    for (size_t i = 0; i < encoder_.size(); ++i) {
        encoder_[i].conv.collect("encoder." + std::to_string(i + 1) + ".conv", refs);
        encoder_[i].mix.collect("encoder." + std::to_string(i + 1) + ".mix", refs);
    }
    sequence_.collect("sequence", refs);
    for (size_t j = 0; j < decoder_.size(); ++j) {
        const int level = cfg_.depth - static_cast<int>(j);
        decoder_[j].mix.collect("decoder." + std::to_string(level) + ".mix", refs);
        decoder_[j].convtr.collect("decoder." + std::to_string(level) + ".convtr", refs);
    }
    if (cfg_.cond_dim > 0) cond_proj_.collect("cond_proj", refs);
    return refs;
}

bool causality_probe(const Demucs& model, long t, long lookahead, Rng& rng,
                     long probe_length, double magnitude) {
    if (t < 0 || t >= probe_length) throw std::invalid_argument("causality_probe: t out of range");
    Waveform x;
    x.sample_rate = 16000;
    x.samples.resize(probe_length);
    for (long i = 0; i < probe_length; ++i) x.samples[i] = rng.uniform(-0.5, 0.5);

    const Vec base = model.forward(x).output.samples;
    Waveform perturbed = x;
    for (long i = t + lookahead + 1; i < probe_length; ++i)
        perturbed.samples[i] += magnitude * rng.uniform(-1.0, 1.0);
    const Vec shifted = model.forward(perturbed).output.samples;

    const double diff = (shifted.head(t + 1) - base.head(t + 1)).cwiseAbs().maxCoeff();
    return diff < 1e-6;
}

}  // namespace phaseforge
