#include "phaseforge/wav.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <vector>

namespace phaseforge {

namespace {

uint32_t read_u32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const uint8_t* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void append_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<uint8_t>((v >> 24) & 0xff));
}

void append_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
}

}  // namespace

Waveform read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("read_wav: cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw std::invalid_argument("read_wav: not a RIFF/WAVE file: " + path);

    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t rate = 0;
    const uint8_t* data = nullptr;
    uint32_t data_len = 0;

    size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* tag = reinterpret_cast<const char*>(bytes.data() + pos);
        const uint32_t chunk_len = read_u32(bytes.data() + pos + 4);
        const size_t body = pos + 8;
        if (body + chunk_len > bytes.size()) break;
        if (std::memcmp(tag, "fmt ", 4) == 0 && chunk_len >= 16) {
            format = read_u16(bytes.data() + body);
            channels = read_u16(bytes.data() + body + 2);
            rate = read_u32(bytes.data() + body + 4);
            bits = read_u16(bytes.data() + body + 14);
        } else if (std::memcmp(tag, "data", 4) == 0) {
            data = bytes.data() + body;
            data_len = chunk_len;
        }
        pos = body + chunk_len + (chunk_len & 1);
    }
    if (data == nullptr || rate == 0) throw std::invalid_argument("read_wav: missing fmt/data chunk: " + path);
    if (channels != 1) throw std::invalid_argument("read_wav: only mono files are supported: " + path);

    Waveform wave;
    wave.sample_rate = static_cast<int>(rate);
    if (format == 1 && bits == 16) {
        const long n = data_len / 2;
        wave.samples.resize(n);
        for (long i = 0; i < n; ++i) {
            const int16_t s = static_cast<int16_t>(data[2 * i] | (data[2 * i + 1] << 8));
            wave.samples[i] = static_cast<double>(s) / 32768.0;
        }
    } else if (format == 3 && bits == 32) {
        const long n = data_len / 4;
        wave.samples.resize(n);
        for (long i = 0; i < n; ++i) {
            float f;
            std::memcpy(&f, data + 4 * i, 4);
            wave.samples[i] = static_cast<double>(f);
        }
    } else {
        throw std::invalid_argument("read_wav: unsupported encoding (want 16-bit PCM or 32-bit float): " + path);
    }
    wave.validate();
    return wave;
}

Waveform read_wav_at(const std::string& path, int target_rate) {
    Waveform wave = read_wav(path);
    if (wave.sample_rate != target_rate) wave = resample_to(wave, target_rate);
    return wave;
}

void write_wav(const std::string& path, const Waveform& wave, WavEncoding encoding) {
    wave.validate();
    const long n = wave.length();
    const uint16_t bits = encoding == WavEncoding::pcm16 ? 16 : 32;
    const uint32_t data_len = static_cast<uint32_t>(n * bits / 8);

    std::vector<uint8_t> out;
    out.reserve(44 + data_len);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    append_u32(out, 36 + data_len);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    append_u32(out, 16);
    append_u16(out, encoding == WavEncoding::pcm16 ? 1 : 3);
    append_u16(out, 1);
    append_u32(out, static_cast<uint32_t>(wave.sample_rate));
    append_u32(out, static_cast<uint32_t>(wave.sample_rate) * bits / 8);
    append_u16(out, bits / 8);
    append_u16(out, bits);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    append_u32(out, data_len);

    if (encoding == WavEncoding::pcm16) {
        for (long i = 0; i < n; ++i) {
            const long q = std::clamp<long>(std::lround(wave.samples[i] * 32768.0), -32768, 32767);
            append_u16(out, static_cast<uint16_t>(static_cast<int16_t>(q)));
        }
    } else {
        for (long i = 0; i < n; ++i) {
            const float f = static_cast<float>(wave.samples[i]);
            uint32_t u;
            std::memcpy(&u, &f, 4);
            append_u32(out, u);
        }
    }

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw std::runtime_error("write_wav: cannot open " + path + " for writing");
    file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!file) throw std::runtime_error("write_wav: short write to " + path);
}

}  // namespace phaseforge
