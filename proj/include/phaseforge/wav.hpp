#ifndef PHASEFORGE_WAV_HPP
#define PHASEFORGE_WAV_HPP

#include "phaseforge/audio.hpp"

#include <string>

namespace phaseforge {

enum class WavEncoding { pcm16, float32 };

// Mono WAV reader. Accepts 16-bit PCM and 32-bit float files.
Waveform read_wav(const std::string& path);

// Reads and resamples to target_rate when the file rate differs.
Waveform read_wav_at(const std::string& path, int target_rate);

void write_wav(const std::string& path, const Waveform& wave,
               WavEncoding encoding = WavEncoding::float32);

}  // namespace phaseforge

#endif  // PHASEFORGE_WAV_HPP
