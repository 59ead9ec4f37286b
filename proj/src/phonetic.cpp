#include "phaseforge/phonetic.hpp"

#include "phaseforge/mel.hpp"
#include "phaseforge/wav.hpp"

#include <json.hpp>
#include <unsupported/Eigen/FFT>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <unistd.h>

namespace phaseforge {

namespace {

uint64_t fnv1a(const void* data, size_t bytes, uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace

Mat random_orthogonal(int dim, Rng& rng) {
    Mat gauss(dim, dim);
    for (long c = 0; c < dim; ++c)
        for (long r = 0; r < dim; ++r) gauss(r, c) = rng.normal();
    Eigen::HouseholderQR<Mat> qr(gauss);
    Mat q = qr.householderQ();
    const Mat r_mat = qr.matrixQR().triangularView<Eigen::Upper>();
    // Sign-fix so the factorization is unique and therefore reproducible.
    for (long c = 0; c < dim; ++c)
        if (r_mat(c, c) < 0.0) q.col(c) *= -1.0;
    return q;
}

// ------------------------------------------------------------ ToyProvider

ToyProvider::ToyProvider(const ToyProviderConfig& cfg) : cfg_(cfg) {
    if (cfg.mix_layers < 0 || cfg.dim < 1 || cfg.frame_rate <= 0.0 || cfg.sample_rate <= 0)
        throw ConfigError("ToyProvider: invalid config");
    hop_ = static_cast<int>(std::lround(cfg.sample_rate / cfg.frame_rate));
    if (hop_ < 1) throw ConfigError("ToyProvider: frame rate too high for sample rate");
    win_ = hop_ + hop_ / 4;  // 25 ms window at the default 20 ms hop
    n_fft_ = 1;
    while (n_fft_ < win_) n_fft_ *= 2;
    window_ = make_window(WindowKind::hann, win_);
    mel_ = mel_filterbank(cfg.dim, n_fft_, cfg.sample_rate);

    Rng rng(cfg.seed);
    mixers_.reserve(cfg.mix_layers);
    for (int j = 0; j < cfg.mix_layers; ++j) mixers_.push_back(random_orthogonal(cfg.dim, rng));
}

long ToyProvider::frame_count(long num_samples) const {
    const long frames = num_samples / hop_;
    if (frames < 1)
        throw std::invalid_argument("ToyProvider: waveform shorter than one analysis hop");
    return frames;
}

LayeredFeatures ToyProvider::extract(const Waveform& wave) const {
    wave.validate();
    if (wave.sample_rate != cfg_.sample_rate)
        throw std::invalid_argument("ToyProvider: expected " + std::to_string(cfg_.sample_rate) +
                                    " Hz input, got " + std::to_string(wave.sample_rate));
    const long frames = frame_count(wave.length());

    Eigen::FFT<double> fft;
    std::vector<double> buf(static_cast<size_t>(n_fft_), 0.0);
    std::vector<std::complex<double>> spectrum;
    const int bins = n_fft_ / 2 + 1;

    LayeredFeatures out;
    out.layers.resize(num_layers());
    Mat power(bins, frames);
    for (long t = 0; t < frames; ++t) {
        std::fill(buf.begin(), buf.end(), 0.0);
        const long start = t * hop_;
        for (int n = 0; n < win_; ++n) {
            const long src = start + n;
            if (src < wave.length()) buf[static_cast<size_t>(n)] = window_[n] * wave.samples[src];
        }
        fft.fwd(spectrum, buf);
        for (int f = 0; f < bins; ++f) power(f, t) = std::norm(spectrum[static_cast<size_t>(f)]);
    }

    const Mat energies = mel_ * power;  // dim x frames
    out.layers[0] = energies.array().log1p().transpose();  // frames x dim
    for (int j = 0; j < cfg_.mix_layers; ++j)
        out.layers[j + 1] = (out.layers[j] * mixers_[j].transpose()).array().tanh();
    return out;
}

Vec ToyProvider::input_gradient(const Waveform& wave, const std::vector<Mat>& layer_grads) const {
    const LayeredFeatures feats = extract(wave);
    if (layer_grads.size() != feats.layers.size())
        throw std::invalid_argument("ToyProvider::input_gradient: one gradient per layer required");
    const long frames = feats.frames();

    // Walk the mixing stack down to layer 0.
    Mat g = Mat::Zero(frames, cfg_.dim);
    for (int j = cfg_.mix_layers; j >= 1; --j) {
        if (layer_grads[j].size() > 0) g += layer_grads[j];
        const Mat pre_tanh = (1.0 - feats.layers[j].array().square()).matrix();
        g = g.cwiseProduct(pre_tanh) * mixers_[j - 1];
    }
    if (layer_grads[0].size() > 0) g += layer_grads[0];

    // layer0 = log1p(E): dE = g / (1 + E); recover 1 + E = exp(layer0).
    Mat grad_energy = g.transpose();  // dim x frames
    const Mat one_plus_e = feats.layers[0].array().exp().matrix().transpose();
    grad_energy = grad_energy.cwiseQuotient(one_plus_e);
    const Mat grad_power = mel_.transpose() * grad_energy;  // bins x frames

    Eigen::FFT<double> fft;
    const int bins = n_fft_ / 2 + 1;
    std::vector<double> buf(static_cast<size_t>(n_fft_), 0.0);
    std::vector<std::complex<double>> spectrum;
    std::vector<std::complex<double>> full(static_cast<size_t>(n_fft_));
    std::vector<std::complex<double>> time(static_cast<size_t>(n_fft_));

    Vec grad_wave = Vec::Zero(wave.length());
    for (long t = 0; t < frames; ++t) {
        std::fill(buf.begin(), buf.end(), 0.0);
        const long start = t * hop_;
        for (int n = 0; n < win_; ++n) {
            const long src = start + n;
            if (src < wave.length()) buf[static_cast<size_t>(n)] = window_[n] * wave.samples[src];
        }
        fft.fwd(spectrum, buf);
        // d|X|^2 = 2 Re dRe + 2 Im dIm, so the packed complex grad is 2 gP X.
        std::fill(full.begin(), full.end(), std::complex<double>(0.0, 0.0));
        for (int f = 0; f < bins; ++f)
            full[static_cast<size_t>(f)] = 2.0 * grad_power(f, t) * spectrum[static_cast<size_t>(f)];
        fft.inv(time, full);
        for (int n = 0; n < win_; ++n) {
            const long src = start + n;
            if (src < wave.length())
                grad_wave[src] += n_fft_ * time[static_cast<size_t>(n)].real() * window_[n];
        }
    }
    return grad_wave;
}

std::string ToyProvider::parameter_digest() const {
    uint64_t h = fnv1a(window_.data(), sizeof(double) * window_.size());
    h = fnv1a(mel_.data(), sizeof(double) * mel_.size(), h);
    for (const Mat& q : mixers_) h = fnv1a(q.data(), sizeof(double) * q.size(), h);
    char text[32];
    std::snprintf(text, sizeof(text), "%016llx", static_cast<unsigned long long>(h));
    return text;
}

// ------------------------------------------------------- ExternalProvider

ExternalProvider::ExternalProvider(std::string provider_name, std::string executable,
                                   int num_layers, int dim, double frame_rate, int sample_rate)
    : name_(std::move(provider_name)),
      executable_(std::move(executable)),
      num_layers_(num_layers),
      dim_(dim),
      sample_rate_(sample_rate),
      frame_rate_(frame_rate) {
    if (!std::filesystem::exists(executable_))
        throw ProviderError("provider '" + name_ + "' unavailable: executable not found at " +
                            executable_ + "; point the registry artifact_path at the extractor");
}

LayeredFeatures ExternalProvider::extract(const Waveform& wave) const {
    wave.validate();
    if (wave.sample_rate != sample_rate_)
        throw std::invalid_argument("ExternalProvider: expected " + std::to_string(sample_rate_) +
                                    " Hz input, got " + std::to_string(wave.sample_rate));

    const auto dir = std::filesystem::temp_directory_path();
    const std::string stem =
        "phaseforge_" + name_ + "_" + std::to_string(::getpid()) + "_" +
        std::to_string(reinterpret_cast<uintptr_t>(&wave));
    const std::string in_path = (dir / (stem + ".wav")).string();
    const std::string out_path = (dir / (stem + ".bin")).string();
    write_wav(in_path, wave);

    const std::string command = executable_ + " " + in_path + " " + out_path;
    const int rc = std::system(command.c_str());
    std::filesystem::remove(in_path);
    if (rc != 0) {
        std::filesystem::remove(out_path);
        throw ProviderError("provider '" + name_ + "' failed (exit " + std::to_string(rc) +
                            ") running: " + command);
    }

    std::ifstream in(out_path, std::ios::binary);
    if (!in) throw ProviderError("provider '" + name_ + "' produced no output file");
    int64_t counts[3];
    in.read(reinterpret_cast<char*>(counts), sizeof(counts));
    if (!in || counts[0] != num_layers_ || counts[2] != dim_ || counts[1] < 1) {
        std::filesystem::remove(out_path);
        throw ProviderError("provider '" + name_ + "' returned malformed features");
    }
    LayeredFeatures out;
    out.layers.resize(static_cast<size_t>(counts[0]));
    for (auto& layer : out.layers) {
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(counts[1], counts[2]);
        in.read(reinterpret_cast<char*>(rows.data()),
                static_cast<std::streamsize>(sizeof(double) * rows.size()));
        layer = rows;
    }
    const bool ok = static_cast<bool>(in);
    in.close();
    std::filesystem::remove(out_path);
    if (!ok) throw ProviderError("provider '" + name_ + "' output truncated");
    return out;
}

Vec ExternalProvider::input_gradient(const Waveform&, const std::vector<Mat>&) const {
    throw ConfigError("provider '" + name_ +
                      "' is not differentiable; the supervision setting requires a "
                      "differentiable provider");
}

std::string ExternalProvider::parameter_digest() const {
    // External weights live behind the executable; digest the identity.
    const uint64_t h = fnv1a(executable_.data(), executable_.size());
    char text[32];
    std::snprintf(text, sizeof(text), "%016llx", static_cast<unsigned long long>(h));
    return text;
}

// ---------------------------------------------------------------- registry

std::map<std::string, ProviderSpec> load_provider_registry(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("provider registry not found: " + path);
    nlohmann::json doc = nlohmann::json::parse(in);
    std::map<std::string, ProviderSpec> out;
    for (const auto& [name, body] : doc.at("providers").items()) {
        ProviderSpec spec;
        spec.kind = body.value("kind", "toy");
        spec.artifact_path = body.value("artifact_path", "");
        spec.num_layers = body.value("num_layers", spec.num_layers);
        spec.dim = body.value("dim", spec.dim);
        spec.frame_rate = body.value("frame_rate", spec.frame_rate);
        spec.sample_rate = body.value("sample_rate", spec.sample_rate);
        spec.seed = body.value("seed", spec.seed);
        out.emplace(name, spec);
    }
    return out;
}

std::unique_ptr<PhoneticProvider> make_provider(const std::string& name, const ProviderSpec& spec) {
    if (spec.kind == "toy") {
        ToyProviderConfig cfg;
        cfg.mix_layers = spec.num_layers - 1;
        cfg.dim = spec.dim;
        cfg.frame_rate = spec.frame_rate;
        cfg.sample_rate = spec.sample_rate;
        cfg.seed = spec.seed;
        return std::make_unique<ToyProvider>(cfg);
    }
    if (spec.kind == "external") {
        return std::make_unique<ExternalProvider>(name, spec.artifact_path, spec.num_layers,
                                                  spec.dim, spec.frame_rate, spec.sample_rate);
    }
    throw ConfigError("unknown provider kind '" + spec.kind + "' for provider '" + name + "'");
}

// --------------------------------------------------------- layer selection

LayerSelection LayerSelection::make_fixed(int layer_index) {
    LayerSelection sel;
    sel.mode = Mode::fixed;
    sel.layer = layer_index;
    return sel;
}

LayerSelection LayerSelection::make_mean() {
    LayerSelection sel;
    sel.mode = Mode::mean;
    return sel;
}

LayerSelection LayerSelection::make_learned(int num_layers) {
    LayerSelection sel;
    sel.mode = Mode::learned;
    sel.logits = Vec::Zero(num_layers);
    sel.logits_grad = Vec::Zero(num_layers);
    return sel;
}

void LayerSelection::validate(long num_layers) const {
    if (mode == Mode::fixed && (layer < 0 || layer >= num_layers))
        throw std::invalid_argument("LayerSelection: fixed layer index out of range");
    if (mode == Mode::learned && logits.size() != num_layers)
        throw std::invalid_argument("LayerSelection: logits length must equal the layer count");
}

Vec selection_weights(const LayerSelection& sel, long num_layers) {
    sel.validate(num_layers);
    Vec w = Vec::Zero(num_layers);
    switch (sel.mode) {
        case LayerSelection::Mode::fixed:
            w[sel.layer] = 1.0;
            break;
        case LayerSelection::Mode::mean:
            w.setConstant(1.0 / static_cast<double>(num_layers));
            break;
        case LayerSelection::Mode::learned: {
            const Vec shifted = sel.logits.array() - sel.logits.maxCoeff();
            const Vec exps = shifted.array().exp();
            w = exps / exps.sum();
            break;
        }
    }
    return w;
}

Mat select(const LayeredFeatures& features, const LayerSelection& sel) {
    if (features.layers.empty()) throw std::invalid_argument("select: no layers");
    if (sel.mode == LayerSelection::Mode::fixed) {
        sel.validate(features.num_layers());
        return features.layers[static_cast<size_t>(sel.layer)];
    }
    const Vec w = selection_weights(sel, features.num_layers());
    Mat out = Mat::Zero(features.frames(), features.dim());
    for (long j = 0; j < features.num_layers(); ++j) out += w[j] * features.layers[static_cast<size_t>(j)];
    return out;
}

std::vector<Mat> select_backward(const LayeredFeatures& features, LayerSelection& sel,
                                 const Mat& grad_out, bool need_feature_grads) {
    const long n = features.num_layers();
    const Vec w = selection_weights(sel, n);

    std::vector<Mat> layer_grads;
    if (need_feature_grads) {
        layer_grads.resize(static_cast<size_t>(n));
        for (long j = 0; j < n; ++j) layer_grads[static_cast<size_t>(j)] = w[j] * grad_out;
    }

    if (sel.mode == LayerSelection::Mode::learned) {
        Vec scores(n);
        for (long j = 0; j < n; ++j)
            scores[j] = features.layers[static_cast<size_t>(j)].cwiseProduct(grad_out).sum();
        const double mix = w.dot(scores);
        if (sel.logits_grad.size() != n) sel.logits_grad = Vec::Zero(n);
        sel.logits_grad += w.cwiseProduct((scores.array() - mix).matrix());
    }
    return layer_grads;
}

Vec report_layer_weights(const LayerSelection& sel, long num_layers) {
    if (sel.mode != LayerSelection::Mode::learned)
        throw std::invalid_argument("report_layer_weights: selection is not in learned mode");
    return selection_weights(sel, num_layers);
}

void write_layer_weight_report(const LayerSelection& sel, long num_layers,
                               const std::string& csv_path, const std::string& svg_path) {
    const Vec w = report_layer_weights(sel, num_layers);

    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot write " + csv_path);
    csv << "layer,weight\n";
    for (long j = 0; j < num_layers; ++j) csv << j << "," << w[j] << "\n";

    // Minimal bar chart, one bar per layer.
    const int bar_w = 28, gap = 8, height = 160, base = 130;
    const int width = static_cast<int>(num_layers) * (bar_w + gap) + gap;
    std::ofstream svg(svg_path, std::ios::trunc);
    if (!svg) throw std::runtime_error("cannot write " + svg_path);
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
        << "'>\n";
    const double peak = std::max(w.maxCoeff(), 1e-12);
    for (long j = 0; j < num_layers; ++j) {
        const int h = static_cast<int>(std::lround(110.0 * w[j] / peak));
        const int x = gap + static_cast<int>(j) * (bar_w + gap);
        svg << "<rect x='" << x << "' y='" << base - h << "' width='" << bar_w << "' height='" << h
            << "' fill='#4472a8'/>\n";
        svg << "<text x='" << x + bar_w / 2 << "' y='" << base + 16
            << "' font-size='11' text-anchor='middle'>" << j << "</text>\n";
    }
    svg << "</svg>\n";
}

}  // namespace phaseforge
