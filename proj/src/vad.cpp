#include "voiceclef/vad.hpp"

#include <algorithm>
#include <cmath>

namespace voiceclef::vad {

void VadConfig::validate() const {
    if (!(energy_ratio > 0.0 && energy_ratio < 1.0)) throw Error("vad: energy_ratio must be in (0, 1)");
    if (!(frame_len >= hop && hop > 0)) throw Error("vad: require frame_len >= hop > 0");
    if (!(min_segment > 0.0)) throw Error("vad: min_segment must be positive");
    if (hangover_frames < 0) throw Error("vad: hangover_frames must be >= 0");
}

std::vector<Segment> detect_voice_activity(const audio::AudioClip& clip, const VadConfig& cfg) {
    cfg.validate();
    const std::size_t n = clip.samples.size();
    if (n < static_cast<std::size_t>(cfg.frame_len))
        throw ClipTooShort("clip shorter than one analysis frame");

    const std::size_t frame_len = static_cast<std::size_t>(cfg.frame_len);
    const std::size_t hop = static_cast<std::size_t>(cfg.hop);
    const std::size_t n_frames = (n - frame_len) / hop + 1;

    std::vector<double> energy(n_frames);
    std::vector<double> zcr(n_frames);
    double peak_energy = 0.0;
    for (std::size_t f = 0; f < n_frames; ++f) {
        const float* x = clip.samples.data() + f * hop;
        double e = 0.0;
        std::size_t crossings = 0;
        for (std::size_t i = 0; i < frame_len; ++i) {
            e += static_cast<double>(x[i]) * x[i];
            if (i > 0 && ((x[i - 1] >= 0.0f) != (x[i] >= 0.0f))) ++crossings;
        }
        energy[f] = e;
        zcr[f] = static_cast<double>(crossings) / static_cast<double>(frame_len - 1);
        peak_energy = std::max(peak_energy, e);
    }

    std::vector<Segment> segments;
    if (peak_energy < 1e-12) return segments;  // digital silence

    const double threshold = cfg.energy_ratio * peak_energy;
    std::vector<bool> speech(n_frames);
    for (std::size_t f = 0; f < n_frames; ++f)
        speech[f] = energy[f] >= threshold && zcr[f] <= cfg.zcr_ceiling;

    // collect speech runs, merging across silences of <= hangover_frames
    const std::size_t min_samples =
        static_cast<std::size_t>(std::llround(cfg.min_segment * clip.sample_rate));
    std::size_t f = 0;
    while (f < n_frames) {
        if (!speech[f]) {
            ++f;
            continue;
        }
        std::size_t run_start = f;
        std::size_t run_end = f;  // inclusive frame index of last speech frame
        std::size_t silence = 0;
        std::size_t g = f + 1;
        while (g < n_frames) {
            if (speech[g]) {
                run_end = g;
                silence = 0;
            } else if (++silence > static_cast<std::size_t>(cfg.hangover_frames)) {
                break;
            }
            ++g;
        }
        Segment seg;
        seg.start = run_start * hop;
        // speech reaching the last analysis frame runs to end of signal
        seg.end = run_end == n_frames - 1 ? n : std::min(run_end * hop + frame_len, n);
        if (seg.end - seg.start >= min_samples) segments.push_back(seg);
        f = g + 1;
    }
    return segments;
}

std::vector<audio::AudioClip> segment_clip(const audio::AudioClip& clip,
                                           const std::vector<Segment>& segments,
                                           double clip_len) {
    const std::size_t window =
        static_cast<std::size_t>(std::llround(clip_len * clip.sample_rate));
    std::vector<audio::AudioClip> out;
    if (window == 0) return out;
    std::size_t index = 0;
    for (const Segment& seg : segments) {
        if (seg.start >= seg.end || seg.end > clip.samples.size())
            throw Error("segment out of range for clip");
        const std::size_t count = (seg.end - seg.start) / window;
        for (std::size_t k = 0; k < count; ++k) {
            audio::AudioClip piece;
            piece.sample_rate = clip.sample_rate;
            piece.source_id = clip.source_id + "_" + std::to_string(index++);
            const std::size_t begin = seg.start + k * window;
            piece.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                                 clip.samples.begin() + static_cast<std::ptrdiff_t>(begin + window));
            out.push_back(std::move(piece));
        }
    }
    return out;
}

}  // namespace voiceclef::vad
