#ifndef PHASEFORGE_METRICS_HPP
#define PHASEFORGE_METRICS_HPP

#include "phaseforge/audio.hpp"

#include <map>
#include <optional>
#include <string>

namespace phaseforge {

// Scale-invariant SNR in dB: zero-mean signals, the estimate projected onto
// the reference. Clamped to [-60, 60]; equality hits the upper cap.
double si_snr_db(const Waveform& reference, const Waveform& estimate);

// RMS over frames of the per-frame RMS log-power gap, in dB. Constants:
// 1024-bin STFT, hop 256, Hann window, 1e-10 amplitude floor inside the log.
double log_spectral_distance_db(const Waveform& reference, const Waveform& estimate);

// name -> executable path; the adapter protocol is
//   <executable> <reference.wav> <estimate.wav>
// printing a single float on stdout.
using MetricRegistry = std::map<std::string, std::string>;

double run_external_metric(const std::string& executable, const std::string& reference_wav,
                           const std::string& estimate_wav);

// Documented value range for a metric name (empty when unknown).
std::optional<std::pair<double, double>> metric_range(const std::string& name);

}  // namespace phaseforge

#endif  // PHASEFORGE_METRICS_HPP
