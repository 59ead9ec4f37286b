#include "phaseforge/metrics.hpp"

#include <cstdio>
#include <memory>

namespace phaseforge {

double si_snr_db(const Waveform& reference, const Waveform& estimate) {
    reference.validate();
    estimate.validate();
    if (reference.length() != estimate.length())
        throw std::invalid_argument("si_snr: signals must have equal length");
    const Vec ref = reference.samples.array() - reference.samples.mean();
    const Vec est = estimate.samples.array() - estimate.samples.mean();
    const double ref_energy = ref.squaredNorm();
    if (ref_energy <= 0.0) throw std::invalid_argument("si_snr: reference has zero energy");

    const Vec target = (est.dot(ref) / ref_energy) * ref;
    const double noise_energy = (est - target).squaredNorm();
    const double target_energy = target.squaredNorm();
    if (noise_energy <= 0.0) return 60.0;
    if (target_energy <= 0.0) return -60.0;
    return std::clamp(10.0 * std::log10(target_energy / noise_energy), -60.0, 60.0);
}

double log_spectral_distance_db(const Waveform& reference, const Waveform& estimate) {
    reference.validate();
    estimate.validate();
    if (reference.length() != estimate.length())
        throw std::invalid_argument("log_spectral_distance: signals must have equal length");
    const StftConfig cfg{.n_fft = 1024, .hop = 256, .win_length = 1024};
    const Mat ref_db =
        20.0 * (stft(reference, cfg).magnitude().array() + 1e-10).log10().matrix();
    const Mat est_db = 20.0 * (stft(estimate, cfg).magnitude().array() + 1e-10).log10().matrix();

    double total = 0.0;
    for (long k = 0; k < ref_db.cols(); ++k)
        total += std::sqrt((ref_db.col(k) - est_db.col(k)).squaredNorm() /
                           static_cast<double>(ref_db.rows()));
    return total / static_cast<double>(ref_db.cols());
}

double run_external_metric(const std::string& executable, const std::string& reference_wav,
                           const std::string& estimate_wav) {
    const std::string command = executable + " " + reference_wav + " " + estimate_wav;
    std::unique_ptr<FILE, int (*)(FILE*)> pipe(::popen(command.c_str(), "r"), ::pclose);
    if (!pipe) throw std::runtime_error("external metric: cannot run " + command);
    char buffer[256];
    std::string output;
    while (std::fgets(buffer, sizeof(buffer), pipe.get()) != nullptr) output += buffer;
    try {
        return std::stod(output);
    } catch (const std::exception&) {
        throw std::runtime_error("external metric printed no parseable value: " + command);
    }
}

std::optional<std::pair<double, double>> metric_range(const std::string& name) {
    if (name == "SI-SNR") return {{-60.0, 60.0}};
    if (name == "LSD") return {{0.0, 200.0}};
    if (name == "PESQ") return {{-0.5, 4.5}};
    if (name == "CSIG" || name == "CBAK" || name == "COVL" || name == "VISQOL") return {{1.0, 5.0}};
    if (name == "STOI") return {{0.0, 1.0}};
    return std::nullopt;
}

}  // namespace phaseforge
