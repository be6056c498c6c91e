#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "voiceclef/common.hpp"

namespace voiceclef::audio {

/// Mono sample buffer. Samples are always inside [-1, 1]; the decoder clamps.
struct AudioClip {
    std::vector<float> samples;
    int sample_rate = 0;
    std::string source_id;

    double duration() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

struct MalformedHeader : Error {
    using Error::Error;
};
struct UnsupportedEncoding : Error {
    using Error::Error;
};
struct EmptyData : Error {
    using Error::Error;
};
struct IoFailure : Error {
    using Error::Error;
};

/// Decodes a RIFF/WAVE file with PCM 16-bit or IEEE-float 32-bit data and
/// 1 or 2 channels. Stereo collapses to mono by channel averaging; 16-bit
/// samples map to [-1, 1) by division by 32768.
AudioClip read_wav(const std::filesystem::path& path);

/// Writes a mono 16-bit PCM file; samples quantize by round(s*32768)
/// clamped to [-32768, 32767], so read(write(x)) stays within 2^-15.
void write_wav(const AudioClip& clip, const std::filesystem::path& path);

/// Linear-interpolation resampling. Identity (bitwise) when rates match.
/// Output length = round(len * target / source).
AudioClip resample(const AudioClip& clip, int target_rate);

}  // namespace voiceclef::audio
