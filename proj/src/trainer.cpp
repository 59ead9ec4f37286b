#include "phaseforge/trainer.hpp"

#include <filesystem>
#include <fstream>
#include <numeric>

extern char** environ;

namespace phaseforge {

void TrainConfig::validate() const {
    if (manifest.empty()) throw ConfigError("TrainConfig: manifest path is required");
    if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
    if (learning_rate <= 0.0) throw ConfigError("TrainConfig: learning_rate must be positive");
    if (epochs < 0) throw ConfigError("TrainConfig: epochs must be nonnegative");
    if (segment_s <= 0.0 || stride_s <= 0.0)
        throw ConfigError("TrainConfig: segment_s and stride_s must be positive");
    if (sample_rate <= 0) throw ConfigError("TrainConfig: sample_rate must be positive");
    augment.validate();
}

// ----------------------------------------------------------- config JSON

namespace {

nlohmann::json selection_to_json(const LayerSelection& sel) {
    nlohmann::json doc;
    switch (sel.mode) {
        case LayerSelection::Mode::fixed:
            doc["mode"] = "fixed";
            doc["layer"] = sel.layer;
            break;
        case LayerSelection::Mode::mean:
            doc["mode"] = "mean";
            break;
        case LayerSelection::Mode::learned:
            doc["mode"] = "learned";
            break;
    }
    return doc;
}

LayerSelection selection_from_json(const nlohmann::json& doc) {
    const std::string mode = doc.value("mode", "fixed");
    if (mode == "fixed") return LayerSelection::make_fixed(doc.value("layer", 0));
    if (mode == "mean") return LayerSelection::make_mean();
    if (mode == "learned") return LayerSelection::make_learned(0);  // sized at session build
    throw ConfigError("selection: unknown mode '" + mode + "'");
}

}  // namespace

nlohmann::json train_config_to_json(const TrainConfig& cfg) {
    nlohmann::json doc;
    doc["manifest"] = cfg.manifest;
    doc["segment_s"] = cfg.segment_s;
    doc["stride_s"] = cfg.stride_s;
    doc["augment"] = {{"max_shift_s", cfg.augment.max_shift_s},
                      {"bandstop_fraction", cfg.augment.bandstop_fraction},
                      {"bandstop_prob", cfg.augment.bandstop_prob},
                      {"shuffle_noises", cfg.augment.shuffle_noises}};
    doc["model"] = {{"hidden", cfg.model.hidden},
                    {"upscale", cfg.model.upscale},
                    {"stride", cfg.model.stride},
                    {"kernel", cfg.model.kernel},
                    {"depth", cfg.model.depth},
                    {"causal", cfg.model.causal},
                    {"lstm_layers", cfg.model.lstm_layers},
                    {"channel_cap_mult", cfg.model.channel_cap_mult},
                    {"normalize", cfg.model.normalize},
                    {"cond_dim", cfg.model.cond_dim},
                    {"cond_init", cfg.model.cond_init == CondInit::identity ? "identity" : "random"}};
    doc["injection"] = {{"setting", setting_name(cfg.injection.setting)},
                        {"lambda", cfg.injection.lambda},
                        {"tap_layer", cfg.injection.tap_layer},
                        {"selection", selection_to_json(cfg.injection.selection)},
                        {"bridge_seed", cfg.injection.bridge_seed}};
    doc["provider"] = {{"kind", cfg.provider.kind},
                       {"artifact_path", cfg.provider.artifact_path},
                       {"num_layers", cfg.provider.num_layers},
                       {"dim", cfg.provider.dim},
                       {"frame_rate", cfg.provider.frame_rate},
                       {"sample_rate", cfg.provider.sample_rate},
                       {"seed", cfg.provider.seed}};
    doc["provider_name"] = cfg.provider_name;
    doc["batch_size"] = cfg.batch_size;
    doc["learning_rate"] = cfg.learning_rate;
    doc["beta1"] = cfg.beta1;
    doc["beta2"] = cfg.beta2;
    doc["adam_eps"] = cfg.adam_eps;
    doc["epochs"] = cfg.epochs;
    doc["seed"] = cfg.seed;
    doc["sample_rate"] = cfg.sample_rate;
    doc["out_dir"] = cfg.out_dir;
    return doc;
}

TrainConfig train_config_from_json(const nlohmann::json& doc) {
    TrainConfig cfg;
    cfg.manifest = doc.value("manifest", cfg.manifest);
    cfg.segment_s = doc.value("segment_s", cfg.segment_s);
    cfg.stride_s = doc.value("stride_s", cfg.stride_s);
    if (doc.contains("augment")) {
        const auto& a = doc["augment"];
        cfg.augment.max_shift_s = a.value("max_shift_s", cfg.augment.max_shift_s);
        cfg.augment.bandstop_fraction = a.value("bandstop_fraction", cfg.augment.bandstop_fraction);
        cfg.augment.bandstop_prob = a.value("bandstop_prob", cfg.augment.bandstop_prob);
        cfg.augment.shuffle_noises = a.value("shuffle_noises", cfg.augment.shuffle_noises);
    }
    if (doc.contains("model")) {
        const auto& m = doc["model"];
        cfg.model.hidden = m.value("hidden", cfg.model.hidden);
        cfg.model.upscale = m.value("upscale", cfg.model.upscale);
        cfg.model.stride = m.value("stride", cfg.model.stride);
        cfg.model.kernel = m.value("kernel", cfg.model.kernel);
        cfg.model.depth = m.value("depth", cfg.model.depth);
        cfg.model.causal = m.value("causal", cfg.model.causal);
        cfg.model.lstm_layers = m.value("lstm_layers", cfg.model.lstm_layers);
        cfg.model.channel_cap_mult = m.value("channel_cap_mult", cfg.model.channel_cap_mult);
        cfg.model.normalize = m.value("normalize", cfg.model.normalize);
        cfg.model.cond_dim = m.value("cond_dim", cfg.model.cond_dim);
        cfg.model.cond_init =
            m.value("cond_init", std::string("identity")) == "random" ? CondInit::random
                                                                      : CondInit::identity;
    }
    if (doc.contains("injection")) {
        const auto& i = doc["injection"];
        cfg.injection.setting = setting_from_name(i.value("setting", "base"));
        cfg.injection.lambda = i.value("lambda", cfg.injection.lambda);
        cfg.injection.tap_layer = i.value("tap_layer", cfg.injection.tap_layer);
        if (i.contains("selection")) cfg.injection.selection = selection_from_json(i["selection"]);
        cfg.injection.bridge_seed = i.value("bridge_seed", cfg.injection.bridge_seed);
    }
    if (doc.contains("provider")) {
        const auto& p = doc["provider"];
        cfg.provider.kind = p.value("kind", cfg.provider.kind);
        cfg.provider.artifact_path = p.value("artifact_path", cfg.provider.artifact_path);
        cfg.provider.num_layers = p.value("num_layers", cfg.provider.num_layers);
        cfg.provider.dim = p.value("dim", cfg.provider.dim);
        cfg.provider.frame_rate = p.value("frame_rate", cfg.provider.frame_rate);
        cfg.provider.sample_rate = p.value("sample_rate", cfg.provider.sample_rate);
        cfg.provider.seed = p.value("seed", cfg.provider.seed);
    }
    cfg.provider_name = doc.value("provider_name", cfg.provider_name);
    cfg.batch_size = doc.value("batch_size", cfg.batch_size);
    cfg.learning_rate = doc.value("learning_rate", cfg.learning_rate);
    cfg.beta1 = doc.value("beta1", cfg.beta1);
    cfg.beta2 = doc.value("beta2", cfg.beta2);
    cfg.adam_eps = doc.value("adam_eps", cfg.adam_eps);
    cfg.epochs = doc.value("epochs", cfg.epochs);
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.sample_rate = doc.value("sample_rate", cfg.sample_rate);
    cfg.out_dir = doc.value("out_dir", cfg.out_dir);
    return cfg;
}

void apply_env_overrides(nlohmann::json& doc, const std::string& prefix) {
    for (char** env = environ; env != nullptr && *env != nullptr; ++env) {
        const std::string entry(*env);
        if (entry.rfind(prefix, 0) != 0) continue;
        const size_t eq = entry.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = entry.substr(prefix.size(), eq - prefix.size());
        const std::string value = entry.substr(eq + 1);

        nlohmann::json* node = &doc;
        size_t pos = 0;
        while (true) {
            const size_t sep = key.find("__", pos);
            const std::string part = key.substr(pos, sep == std::string::npos ? std::string::npos
                                                                              : sep - pos);
            if (part.empty()) break;
            if (sep == std::string::npos) {
                nlohmann::json parsed;
                try {
                    parsed = nlohmann::json::parse(value);
                } catch (const nlohmann::json::exception&) {
                    parsed = value;
                }
                (*node)[part] = parsed;
                break;
            }
            node = &((*node)[part]);
            pos = sep + 2;
        }
    }
}

// ------------------------------------------------------------------ Adam

void Adam::init(const std::vector<TensorRef>& params) {
    t = 0;
    m.clear();
    v.clear();
    for (const auto& p : params) {
        m.push_back(Vec::Zero(p.size));
        v.push_back(Vec::Zero(p.size));
    }
}

void Adam::step(const std::vector<TensorRef>& params) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (size_t i = 0; i < params.size(); ++i) {
        const auto& p = params[i];
        Eigen::Map<Vec> theta(p.value, p.size);
        Eigen::Map<const Vec> grad(p.grad, p.size);
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad;
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad.cwiseProduct(grad);
        theta.array() -=
            lr * (m[i].array() / bc1) / ((v[i].array() / bc2).sqrt() + eps);
    }
}

// ---------------------------------------------------------------- session

std::vector<TensorRef> Session::trainable() {
    auto refs = model->parameters();
    if (injection.setting != Setting::base &&
        injection.selection.mode == LayerSelection::Mode::learned) {
        auto& sel = injection.selection;
        if (sel.logits_grad.size() != sel.logits.size()) sel.zero_grad();
        refs.push_back({"selection.logits", sel.logits.data(), sel.logits_grad.data(),
                        sel.logits.size()});
    }
    return refs;
}

void Session::zero_grad() {
    model->zero_grad();
    if (injection.selection.logits.size() > 0) injection.selection.zero_grad();
}

ObjectiveEval Session::objective(const Waveform& noisy, const Waveform& clean, bool with_grad) {
    return evaluate_objective(*model, provider.get(), injection, objective_state, noisy, clean,
                              with_grad);
}

Session build_session(const TrainConfig& cfg) {
    cfg.validate();
    Session session;
    session.config = cfg;
    session.injection = cfg.injection;

    if (session.injection.setting != Setting::base) {
        session.provider = make_provider(cfg.provider_name, cfg.provider);
        auto& sel = session.injection.selection;
        if (sel.mode == LayerSelection::Mode::learned &&
            sel.logits.size() != session.provider->num_layers())
            sel = LayerSelection::make_learned(session.provider->num_layers());
        if (session.injection.setting == Setting::conditioning && session.config.model.cond_dim == 0)
            session.config.model.cond_dim = session.provider->feature_dim();
    }
    // Reject bad combinations before any data or training work starts.
    if (session.injection.setting == Setting::conditioning && session.config.model.causal)
        throw ConfigError("conditioning requires non-causal setup");
    session.model = std::make_unique<Demucs>(session.config.model, cfg.seed);
    session.injection.validate(session.config.model, session.provider.get());
    return session;
}

void restore_session_tensors(Session& session, const Checkpoint& ckpt) {
    for (auto& ref : session.trainable()) {
        const TensorBlob* blob = ckpt.find(ref.name);
        if (blob == nullptr)
            throw std::invalid_argument("checkpoint: missing tensor '" + ref.name + "'");
        if (static_cast<long>(blob->values.size()) != ref.size)
            throw std::invalid_argument("checkpoint: size mismatch for tensor '" + ref.name + "'");
        std::copy(blob->values.begin(), blob->values.end(), ref.value);
    }
    if (const TensorBlob* bridge = ckpt.find("objective.reg_bridge")) {
        Mat m(bridge->rows, bridge->cols);
        std::copy(bridge->values.begin(), bridge->values.end(), m.data());
        session.objective_state.reg_bridge = m;
    }
}

Session session_from_checkpoint(const std::string& path) {
    const Checkpoint ckpt = Checkpoint::load(path);
    Session session = build_session(train_config_from_json(ckpt.config));
    restore_session_tensors(session, ckpt);
    return session;
}

double validation_loss(Session& session, const std::vector<NoisyCleanPair>& pairs) {
    if (pairs.empty()) throw std::invalid_argument("validation_loss: no pairs");
    double total = 0.0;
    for (const auto& pair : pairs)
        total += session.objective(pair.noisy, pair.clean, false).breakdown.total;
    return total / static_cast<double>(pairs.size());
}

// ------------------------------------------------------------------ train

namespace {

struct BreakdownAccumulator {
    double l1 = 0, phonetic = 0, total = 0;
    std::array<double, 3> sc{0, 0, 0}, mag{0, 0, 0};
    long count = 0;

    void add(const LossBreakdown& bd) {
        l1 += bd.l1_wave;
        phonetic += bd.phonetic;
        total += bd.total;
        for (int i = 0; i < 3; ++i) {
            sc[i] += bd.sc[i];
            mag[i] += bd.mag[i];
        }
        ++count;
    }

    nlohmann::json mean_json(long step, Setting setting) const {
        const double n = static_cast<double>(std::max<long>(count, 1));
        return {{"step", step},
                {"setting", setting_name(setting)},
                {"l1", l1 / n},
                {"sc", {sc[0] / n, sc[1] / n, sc[2] / n}},
                {"mag", {mag[0] / n, mag[1] / n, mag[2] / n}},
                {"phonetic", phonetic / n},
                {"total", total / n}};
    }
};

Checkpoint make_checkpoint(Session& session, const Adam& adam, long next_epoch, long global_step,
                           double best_validation) {
    Checkpoint ckpt;
    ckpt.config = train_config_to_json(session.config);
    ckpt.epoch = next_epoch;
    ckpt.global_step = global_step;
    ckpt.best_validation = best_validation;
    ckpt.rng_state = derived_rng(session.config.seed, static_cast<uint64_t>(next_epoch), 0).serialize();
    ckpt.provider_digest = session.provider ? session.provider->parameter_digest() : "";

    auto refs = session.trainable();
    for (size_t i = 0; i < refs.size(); ++i) {
        TensorBlob& blob = ckpt.add(refs[i].name, refs[i].size, 1);
        std::copy(refs[i].value, refs[i].value + refs[i].size, blob.values.begin());
        if (adam.m.size() == refs.size()) {
            TensorBlob& bm = ckpt.add("adam.m." + refs[i].name, refs[i].size, 1);
            std::copy(adam.m[i].data(), adam.m[i].data() + refs[i].size, bm.values.begin());
            TensorBlob& bv = ckpt.add("adam.v." + refs[i].name, refs[i].size, 1);
            std::copy(adam.v[i].data(), adam.v[i].data() + refs[i].size, bv.values.begin());
        }
    }
    if (session.objective_state.reg_bridge) {
        const Mat& bridge = *session.objective_state.reg_bridge;
        TensorBlob& blob = ckpt.add("objective.reg_bridge", bridge.rows(), bridge.cols());
        std::copy(bridge.data(), bridge.data() + bridge.size(), blob.values.begin());
    }
    return ckpt;
}

void restore_adam(Adam& adam, const Checkpoint& ckpt, const std::vector<TensorRef>& refs) {
    for (size_t i = 0; i < refs.size(); ++i) {
        const TensorBlob* bm = ckpt.find("adam.m." + refs[i].name);
        const TensorBlob* bv = ckpt.find("adam.v." + refs[i].name);
        if (bm == nullptr || bv == nullptr)
            throw std::invalid_argument("checkpoint: missing optimizer state for '" + refs[i].name +
                                        "'");
        std::copy(bm->values.begin(), bm->values.end(), adam.m[i].data());
        std::copy(bv->values.begin(), bv->values.end(), adam.v[i].data());
    }
    adam.t = ckpt.global_step;
}

}  // namespace

TrainResult train(const TrainConfig& cfg_in) {
    Session session = build_session(cfg_in);
    const TrainConfig& cfg = session.config;
    std::filesystem::create_directories(cfg.out_dir);

    const auto records = load_manifest(cfg.manifest);
    std::vector<NoisyCleanPair> train_pairs, valid_pairs;
    for (const auto& rec : records) {
        NoisyCleanPair pair = load_pair(rec, cfg.sample_rate);
        (is_validation_record(rec) ? valid_pairs : train_pairs).push_back(std::move(pair));
    }
    if (train_pairs.empty()) throw ConfigError("train: manifest has no training records");
    if (valid_pairs.empty()) valid_pairs = train_pairs;  // desk-scale fallback

    const auto train_segments = segment_dataset(train_pairs, cfg.segment_s, cfg.stride_s);
    const auto valid_segments = segment_dataset(valid_pairs, cfg.segment_s, cfg.stride_s);

    Adam adam;
    adam.lr = cfg.learning_rate;
    adam.beta1 = cfg.beta1;
    adam.beta2 = cfg.beta2;
    adam.eps = cfg.adam_eps;
    auto refs = session.trainable();
    adam.init(refs);

    long start_epoch = 0, global_step = 0;
    double best_validation = std::numeric_limits<double>::infinity();
    if (!cfg.resume_from.empty()) {
        const Checkpoint ckpt = Checkpoint::load(cfg.resume_from);
        restore_session_tensors(session, ckpt);
        restore_adam(adam, ckpt, refs);
        start_epoch = ckpt.epoch;
        global_step = ckpt.global_step;
        best_validation = ckpt.best_validation;
    }

    const std::string metrics_path = (std::filesystem::path(cfg.out_dir) / "metrics.jsonl").string();
    std::ofstream metrics(metrics_path, cfg.resume_from.empty() ? std::ios::trunc : std::ios::app);
    if (!metrics) throw std::runtime_error("train: cannot open " + metrics_path);

    TrainResult result;
    result.metrics_path = metrics_path;
    result.provider_digest_before =
        session.provider ? session.provider->parameter_digest() : "";
    result.best_checkpoint = (std::filesystem::path(cfg.out_dir) / "best.ckpt").string();
    result.last_checkpoint = (std::filesystem::path(cfg.out_dir) / "last.ckpt").string();

    for (long epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        // Epoch-derived streams keep runs bit-reproducible and resumable.
        Rng shuffle_rng = derived_rng(cfg.seed, 2 * static_cast<uint64_t>(epoch), 0);
        std::vector<size_t> order(train_segments.size());
        std::iota(order.begin(), order.end(), size_t{0});
        for (size_t i = order.size(); i-- > 1;)
            std::swap(order[i], order[static_cast<size_t>(shuffle_rng.uniform_int(0, static_cast<long>(i)))]);

        for (size_t batch_start = 0, batch_index = 0; batch_start < order.size();
             batch_start += cfg.batch_size, ++batch_index) {
            Rng aug_rng = derived_rng(cfg.seed, 2 * static_cast<uint64_t>(epoch) + 1, batch_index);
            std::vector<NoisyCleanPair> batch;
            for (size_t i = batch_start; i < std::min(order.size(), batch_start + cfg.batch_size); ++i)
                batch.push_back(train_segments[order[i]]);

            if (cfg.augment.max_shift_s > 0.0)
                for (auto& pair : batch) pair = random_shift(pair, cfg.augment, aug_rng);
            if (cfg.augment.shuffle_noises && batch.size() > 1)
                batch = shuffle_noises(batch, aug_rng);
            if (cfg.augment.bandstop_fraction > 0.0) {
                for (auto& pair : batch) {
                    if (aug_rng.uniform() >= cfg.augment.bandstop_prob) continue;
                    // One band per example, removed from both channels so the
                    // additive-noise relation stays intact.
                    const MelStopBand band =
                        draw_stop_band(cfg.augment, pair.clean.sample_rate, aug_rng);
                    pair.noisy = apply_band_stop(pair.noisy, band);
                    pair.clean = apply_band_stop(pair.clean, band);
                }
            }

            session.zero_grad();
            BreakdownAccumulator acc;
            for (const auto& pair : batch) {
                try {
                    acc.add(session.objective(pair.noisy, pair.clean, true).breakdown);
                } catch (const NonFiniteLoss& err) {
                    const std::string diag_path =
                        (std::filesystem::path(cfg.out_dir) / "abort.json").string();
                    nlohmann::json diag = {{"step", global_step + 1},
                                           {"epoch", epoch},
                                           {"batch_id", pair.id},
                                           {"reason", err.what()}};
                    std::ofstream(diag_path) << diag.dump(2) << "\n";
                    throw TrainAbort("train: " + std::string(err.what()) + " at step " +
                                         std::to_string(global_step + 1) + " on batch item '" +
                                         pair.id + "'",
                                     pair.id, diag_path);
                }
            }
            const double scale = 1.0 / static_cast<double>(batch.size());
            for (auto& ref : refs)
                Eigen::Map<Vec>(ref.grad, ref.size) *= scale;

            ++global_step;
            adam.step(refs);

            const nlohmann::json line = acc.mean_json(global_step, session.injection.setting);
            metrics << line.dump() << "\n";
            const double mean_total = line["total"].get<double>();
            if (result.steps == 0 && global_step == 1) result.first_step_loss = mean_total;
            result.final_step_loss = mean_total;
            ++result.steps;
        }

        const double val = validation_loss(session, valid_segments);
        metrics << nlohmann::json{{"step", global_step}, {"epoch", epoch}, {"validation", val}}.dump()
                << "\n";
        if (val < best_validation) {
            best_validation = val;
            make_checkpoint(session, adam, epoch + 1, global_step, best_validation)
                .save(result.best_checkpoint);
        }
        make_checkpoint(session, adam, epoch + 1, global_step, best_validation)
            .save(result.last_checkpoint);
    }

    if (start_epoch >= cfg.epochs) {  // nothing ran; still emit checkpoints
        make_checkpoint(session, adam, start_epoch, global_step, best_validation)
            .save(result.last_checkpoint);
        if (!std::filesystem::exists(result.best_checkpoint))
            make_checkpoint(session, adam, start_epoch, global_step, best_validation)
                .save(result.best_checkpoint);
    }

    result.best_validation = best_validation;
    result.provider_digest_after = session.provider ? session.provider->parameter_digest() : "";
    return result;
}

// --------------------------------------------------------- gradient check

GradientReport gradient_check(const TrainConfig& cfg_in, int num_probes, double step,
                              long probe_samples) {
    Session session = build_session(cfg_in);
    const TrainConfig& cfg = session.config;

    const auto records = load_manifest(cfg.manifest);
    if (records.empty()) throw ConfigError("gradient_check: manifest is empty");
    NoisyCleanPair pair = load_pair(records.front(), cfg.sample_rate);
    if (pair.clean.length() > probe_samples) {
        pair.clean.samples.conservativeResize(probe_samples);
        pair.noisy.samples.conservativeResize(probe_samples);
    }

    GradientReport report;
    report.step = step;
    report.provider_digest_before =
        session.provider ? session.provider->parameter_digest() : "";

    session.zero_grad();
    session.objective(pair.noisy, pair.clean, true);
    auto refs = session.trainable();

    auto loss_value = [&]() {
        return session.objective(pair.noisy, pair.clean, false).breakdown.total;
    };
    auto probe_at = [&](TensorRef& ref, long index) {
        const double saved = ref.value[index];
        const double h = step * std::max(1.0, std::abs(saved));
        ref.value[index] = saved + h;
        const double hi = loss_value();
        ref.value[index] = saved - h;
        const double lo = loss_value();
        ref.value[index] = saved;
        GradientProbe probe;
        probe.tensor = ref.name;
        probe.index = index;
        probe.analytic = ref.grad[index];
        probe.fd = (hi - lo) / (2.0 * h);
        const double denom = std::max({std::abs(probe.analytic), std::abs(probe.fd), 1e-6});
        probe.rel_error = std::abs(probe.analytic - probe.fd) / denom;
        report.probes.push_back(probe);
        report.max_rel_error = std::max(report.max_rel_error, probe.rel_error);
    };

    Rng pick = derived_rng(cfg.seed, 0xFD, 0);
    for (int p = 0; p < num_probes; ++p) {
        auto& ref = refs[static_cast<size_t>(pick.uniform_int(0, static_cast<long>(refs.size()) - 1))];
        probe_at(ref, pick.uniform_int(0, ref.size - 1));
    }
    // Learned selection logits are probed exhaustively; they are the small
    // tensor the conditioning contract cares about.
    for (auto& ref : refs)
        if (ref.name == "selection.logits")
            for (long j = 0; j < ref.size; ++j) probe_at(ref, j);

    report.provider_digest_after =
        session.provider ? session.provider->parameter_digest() : "";
    report.provider_frozen = report.provider_digest_before == report.provider_digest_after;
    return report;
}

}  // namespace phaseforge
