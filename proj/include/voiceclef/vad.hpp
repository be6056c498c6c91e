#pragma once

#include <vector>

#include "voiceclef/audio.hpp"
#include "voiceclef/common.hpp"

namespace voiceclef::vad {

/// Double-threshold voice activity detection: a frame counts as speech when
/// its short-time energy clears a fraction of the recording's peak frame
/// energy AND its zero-crossing rate stays below a ceiling. Thresholding
/// against the recording's own peak keeps the stage gain-invariant.
struct VadConfig {
    int frame_len = 400;          // 25 ms at 16 kHz
    int hop = 160;                // 10 ms
    double energy_ratio = 0.1;    // fraction of peak frame energy
    double zcr_ceiling = 0.3;     // max zero-crossing rate for voiced speech
    int hangover_frames = 5;      // bridge silences up to this many frames
    double min_segment = 0.3;     // seconds

    void validate() const;
};

/// Half-open sample range [start, end) of one voiced region.
struct Segment {
    std::size_t start = 0;
    std::size_t end = 0;
};

struct ClipTooShort : Error {
    using Error::Error;
};

/// Returns disjoint, ordered voiced segments, each at least min_segment long.
std::vector<Segment> detect_voice_activity(const audio::AudioClip& clip, const VadConfig& cfg);

/// Tiles every segment into consecutive non-overlapping windows of exactly
/// round(clip_len * sample_rate) samples; trailing remainders are dropped.
/// Output clips are named "<source_id>_<index>" with a global running index.
std::vector<audio::AudioClip> segment_clip(const audio::AudioClip& clip,
                                           const std::vector<Segment>& segments,
                                           double clip_len = 0.5);

}  // namespace voiceclef::vad
