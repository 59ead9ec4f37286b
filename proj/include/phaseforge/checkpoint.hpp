#ifndef PHASEFORGE_CHECKPOINT_HPP
#define PHASEFORGE_CHECKPOINT_HPP

#include "phaseforge/common.hpp"

#include <json.hpp>

#include <limits>
#include <string>
#include <vector>

namespace phaseforge {

// Named raw tensor inside a checkpoint archive.
struct TensorBlob {
    std::string name;
    long rows = 0;
    long cols = 1;
    std::vector<double> values;
};

// Single-file training archive: a format tag line, a JSON header (config,
// counters, rng state, tensor index) and raw little-endian float64 data.
struct Checkpoint {
    static constexpr const char* kFormatTag = "phase-forge-ckpt-v1";

    nlohmann::json config;
    long epoch = 0;        // next epoch to run on resume
    long global_step = 0;
    double best_validation = std::numeric_limits<double>::infinity();
    std::string rng_state;
    std::string provider_digest;
    std::vector<TensorBlob> tensors;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);

    const TensorBlob* find(const std::string& name) const;
    TensorBlob& add(const std::string& name, long rows, long cols);
};

// Stable content hash of an archive's tensors and counters, for results
// traceability.
std::string checkpoint_digest(const Checkpoint& ckpt);

}  // namespace phaseforge

#endif  // PHASEFORGE_CHECKPOINT_HPP
