#include "phaseforge/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace phaseforge {

void Checkpoint::save(const std::string& path) const {
    nlohmann::json header;
    header["config"] = config;
    header["epoch"] = epoch;
    header["global_step"] = global_step;
    if (std::isfinite(best_validation)) header["best_validation"] = best_validation;
    header["rng_state"] = rng_state;
    header["provider_digest"] = provider_digest;
    nlohmann::json index = nlohmann::json::array();
    for (const auto& blob : tensors)
        index.push_back({{"name", blob.name}, {"rows", blob.rows}, {"cols", blob.cols}});
    header["tensors"] = index;
    const std::string header_text = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("Checkpoint::save: cannot open " + path);
    out << kFormatTag << "\n";
    const uint64_t header_len = header_text.size();
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    for (const auto& blob : tensors)
        out.write(reinterpret_cast<const char*>(blob.values.data()),
                  static_cast<std::streamsize>(sizeof(double) * blob.values.size()));
    if (!out) throw std::runtime_error("Checkpoint::save: short write to " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("Checkpoint::load: cannot open " + path);
    std::string tag;
    std::getline(in, tag);
    if (tag != kFormatTag)
        throw std::invalid_argument("Checkpoint::load: " + path + " is not a " +
                                    std::string(kFormatTag) + " archive");
    uint64_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw std::invalid_argument("Checkpoint::load: truncated header in " + path);
    const nlohmann::json header = nlohmann::json::parse(header_text);

    Checkpoint ckpt;
    ckpt.config = header.value("config", nlohmann::json::object());
    ckpt.epoch = header.value("epoch", 0L);
    ckpt.global_step = header.value("global_step", 0L);
    if (header.contains("best_validation") && header["best_validation"].is_number())
        ckpt.best_validation = header["best_validation"].get<double>();
    ckpt.rng_state = header.value("rng_state", "");
    ckpt.provider_digest = header.value("provider_digest", "");
    for (const auto& entry : header.at("tensors")) {
        TensorBlob blob;
        blob.name = entry.at("name").get<std::string>();
        blob.rows = entry.at("rows").get<long>();
        blob.cols = entry.at("cols").get<long>();
        blob.values.resize(static_cast<size_t>(blob.rows * blob.cols));
        in.read(reinterpret_cast<char*>(blob.values.data()),
                static_cast<std::streamsize>(sizeof(double) * blob.values.size()));
        ckpt.tensors.push_back(std::move(blob));
    }
    if (!in) throw std::invalid_argument("Checkpoint::load: truncated tensor data in " + path);
    return ckpt;
}

const TensorBlob* Checkpoint::find(const std::string& name) const {
    for (const auto& blob : tensors)
        if (blob.name == name) return &blob;
    return nullptr;
}

TensorBlob& Checkpoint::add(const std::string& name, long rows, long cols) {
    TensorBlob blob;
    blob.name = name;
    blob.rows = rows;
    blob.cols = cols;
    blob.values.resize(static_cast<size_t>(rows * cols), 0.0);
    tensors.push_back(std::move(blob));
    return tensors.back();
}

std::string checkpoint_digest(const Checkpoint& ckpt) {
    uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](const void* data, size_t bytes) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < bytes; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ull;
        }
    };
    mix(&ckpt.epoch, sizeof(ckpt.epoch));
    mix(&ckpt.global_step, sizeof(ckpt.global_step));
    for (const auto& blob : ckpt.tensors) {
        mix(blob.name.data(), blob.name.size());
        mix(blob.values.data(), sizeof(double) * blob.values.size());
    }
    char text[32];
    std::snprintf(text, sizeof(text), "%016llx", static_cast<unsigned long long>(h));
    return text;
}

}  // namespace phaseforge
