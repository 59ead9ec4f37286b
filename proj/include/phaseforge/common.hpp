#ifndef PHASEFORGE_COMMON_HPP
#define PHASEFORGE_COMMON_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace phaseforge {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

// Invalid pipeline configuration (rejected before any work starts).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A phonetic provider is missing, unusable, or violated its contract.
struct ProviderError : std::runtime_error {
    explicit ProviderError(const std::string& what) : std::runtime_error(what) {}
};

// Deterministic random stream. Distributions are hand rolled on top of
// mt19937_64 so a given seed yields the same draws on every platform.
class Rng {
  public:
    explicit Rng(uint64_t seed = 0) : engine_(seed) {}

    // Uniform on [0, 1) with 53 bits of mantissa.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller (no cached spare, two draws per call).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Uniform integer on [lo, hi], inclusive, via rejection.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
        const uint64_t range = static_cast<uint64_t>(hi - lo) + 1u;
        if (range == 0) return static_cast<int64_t>(engine_());  // full 64-bit span
        const uint64_t limit = UINT64_MAX - UINT64_MAX % range;
        uint64_t draw = engine_();
        while (draw >= limit) draw = engine_();
        return lo + static_cast<int64_t>(draw % range);
    }

    std::string serialize() const {
        std::ostringstream out;
        out << engine_;
        return out.str();
    }

    static Rng deserialize(const std::string& text) {
        Rng r;
        std::istringstream in(text);
        in >> r.engine_;
        if (in.fail()) throw std::invalid_argument("Rng::deserialize: malformed state string");
        return r;
    }

  private:
    std::mt19937_64 engine_;
};

// Stable mixing of (seed, a, b) into a fresh stream, used to derive
// per-epoch / per-batch rng states independent of loop history.
inline Rng derived_rng(uint64_t seed, uint64_t a, uint64_t b = 0) {
    uint64_t h = seed;
    for (uint64_t v : {a + 1, b + 1}) {
        h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        h *= 0xff51afd7ed558ccdull;
        h ^= h >> 33;
    }
    return Rng(h);
}

}  // namespace phaseforge

#endif  // PHASEFORGE_COMMON_HPP
