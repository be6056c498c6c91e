#include "voiceclef/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace voiceclef::audio {

namespace {

std::vector<char> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedHeader("cannot open file: " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

std::uint32_t u32le(const char* p) {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    return v;
}

std::uint16_t u16le(const char* p) {
    std::uint16_t v;
    std::memcpy(&v, p, 2);
    return v;
}

float clamp_unit(float v) {
    if (std::isnan(v)) return 0.0f;
    return std::clamp(v, -1.0f, 1.0f);
}

void put_u32(std::string& out, std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    out.append(b, 4);
}

void put_u16(std::string& out, std::uint16_t v) {
    char b[2];
    std::memcpy(b, &v, 2);
    out.append(b, 2);
}

}  // namespace

AudioClip read_wav(const std::filesystem::path& path) {
    static_assert(std::endian::native == std::endian::little, "WAV codec assumes little-endian host");
    const std::vector<char> bytes = read_all(path);
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw MalformedHeader("not a RIFF/WAVE file: " + path.string());

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t sample_rate = 0;
    const char* data = nullptr;
    std::uint32_t data_size = 0;
    bool have_fmt = false, have_data = false;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* id = bytes.data() + pos;
        std::uint32_t size = u32le(bytes.data() + pos + 4);
        pos += 8;
        if (pos + size > bytes.size()) throw MalformedHeader("truncated chunk in " + path.string());
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (size < 16) throw MalformedHeader("fmt chunk too small in " + path.string());
            format = u16le(bytes.data() + pos);
            channels = u16le(bytes.data() + pos + 2);
            sample_rate = u32le(bytes.data() + pos + 4);
            bits = u16le(bytes.data() + pos + 14);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data = bytes.data() + pos;
            data_size = size;
            have_data = true;
        }
        pos += size + (size & 1);  // RIFF chunks are word-aligned
    }
    if (!have_fmt || !have_data) throw MalformedHeader("missing fmt or data chunk in " + path.string());
    if (sample_rate == 0) throw MalformedHeader("zero sample rate in " + path.string());
    if (channels != 1 && channels != 2)
        throw UnsupportedEncoding("unsupported channel count " + std::to_string(channels));
    const bool pcm16 = format == 1 && bits == 16;
    const bool float32 = format == 3 && bits == 32;
    if (!pcm16 && !float32)
        throw UnsupportedEncoding("unsupported encoding: format tag " + std::to_string(format) + ", " +
                                  std::to_string(bits) + " bits");
    if (data_size == 0) throw EmptyData("empty data chunk in " + path.string());

    const std::size_t bytes_per_sample = pcm16 ? 2 : 4;
    const std::size_t frame_bytes = bytes_per_sample * channels;
    const std::size_t frames = data_size / frame_bytes;
    if (frames == 0) throw EmptyData("data chunk shorter than one frame in " + path.string());

    AudioClip clip;
    clip.sample_rate = static_cast<int>(sample_rate);
    clip.source_id = path.stem().string();
    clip.samples.resize(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        float acc = 0.0f;
        for (unsigned c = 0; c < channels; ++c) {
            const char* p = data + i * frame_bytes + c * bytes_per_sample;
            if (pcm16) {
                std::int16_t s;
                std::memcpy(&s, p, 2);
                acc += static_cast<float>(s) / 32768.0f;
            } else {
                float s;
                std::memcpy(&s, p, 4);
                acc += clamp_unit(s);
            }
        }
        clip.samples[i] = clamp_unit(acc / static_cast<float>(channels));
    }
    return clip;
}

void write_wav(const AudioClip& clip, const std::filesystem::path& path) {
    const std::uint32_t n = static_cast<std::uint32_t>(clip.samples.size());
    const std::uint32_t data_size = n * 2;

    std::string out;
    out.reserve(44 + data_size);
    out.append("RIFF");
    put_u32(out, 36 + data_size);
    out.append("WAVE");
    out.append("fmt ");
    put_u32(out, 16);
    put_u16(out, 1);  // PCM
    put_u16(out, 1);  // mono
    put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
    put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
    put_u16(out, 2);
    put_u16(out, 16);
    out.append("data");
    put_u32(out, data_size);
    // scale matches the decoder's 1/32768 so a round trip stays within half a
    // quantization step; full scale saturates at 32767
    for (float s : clip.samples) {
        long q = std::lround(static_cast<double>(s) * 32768.0);
        q = std::clamp(q, -32768l, 32767l);
        put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoFailure("cannot open for writing: " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoFailure("write failed: " + path.string());
}

AudioClip resample(const AudioClip& clip, int target_rate) {
    if (target_rate <= 0) throw Error("resample: target rate must be positive");
    if (clip.sample_rate == target_rate) return clip;

    AudioClip out;
    out.sample_rate = target_rate;
    out.source_id = clip.source_id;
    const std::size_t n = clip.samples.size();
    if (n == 0) return out;

    const std::size_t out_len = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * target_rate / clip.sample_rate));
    out.samples.resize(out_len);
    const double step = static_cast<double>(clip.sample_rate) / target_rate;
    for (std::size_t i = 0; i < out_len; ++i) {
        const double pos = i * step;
        std::size_t i0 = static_cast<std::size_t>(pos);
        if (i0 >= n - 1) i0 = n - 1;
        const std::size_t i1 = std::min(i0 + 1, n - 1);
        const double frac = pos - static_cast<double>(i0);
        const double v = (1.0 - frac) * clip.samples[i0] + frac * clip.samples[i1];
        out.samples[i] = clamp_unit(static_cast<float>(v));
    }
    return out;
}

}  // namespace voiceclef::audio
