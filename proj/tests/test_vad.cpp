#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "support/testutil.hpp"
#include "voiceclef/vad.hpp"

using namespace voiceclef;

namespace {

audio::AudioClip tone_with_silence(const std::vector<std::pair<double, double>>& spans_seconds,
                                   double total_seconds, double freq = 220.0,
                                   double amplitude = 0.5, int rate = 16000) {
    audio::AudioClip clip;
    clip.sample_rate = rate;
    clip.source_id = "tone";
    clip.samples.assign(static_cast<std::size_t>(total_seconds * rate), 0.0f);
    for (const auto& [begin, end] : spans_seconds) {
        const auto b = static_cast<std::size_t>(begin * rate);
        const auto e = static_cast<std::size_t>(end * rate);
        for (std::size_t i = b; i < e && i < clip.samples.size(); ++i)
            clip.samples[i] = static_cast<float>(
                amplitude * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / rate));
    }
    return clip;
}

}  // namespace

TEST_CASE("all-zero clip yields no segments") {
    audio::AudioClip clip;
    clip.sample_rate = 16000;
    clip.samples.assign(16000, 0.0f);
    CHECK(vad::detect_voice_activity(clip, {}).empty());
}

TEST_CASE("clip shorter than one frame is rejected") {
    audio::AudioClip clip;
    clip.sample_rate = 16000;
    clip.samples.assign(100, 0.1f);
    CHECK_THROWS_AS(vad::detect_voice_activity(clip, {}), vad::ClipTooShort);
}

TEST_CASE("single burst boundaries land within two hops of the truth") {
    const auto clip = tone_with_silence({{1.0, 2.0}}, 3.0);
    const auto segments = vad::detect_voice_activity(clip, {});
    REQUIRE(segments.size() == 1);
    const double tolerance = 2.0 * 160;
    CHECK(std::abs(static_cast<double>(segments[0].start) - 16000.0) <= tolerance);
    CHECK(std::abs(static_cast<double>(segments[0].end) - 32000.0) <= tolerance);
}

TEST_CASE("two bursts separated by long silence give two segments") {
    const auto clip = tone_with_silence({{0.5, 1.5}, {4.5, 5.5}}, 6.0);
    const auto segments = vad::detect_voice_activity(clip, {});
    REQUIRE(segments.size() == 2);
    CHECK(segments[0].end <= segments[1].start);
}

TEST_CASE("short silences inside a vowel are bridged by the hangover") {
    // 40 ms gap = 4 frames at the default hop, under the 5-frame hangover
    auto clip = tone_with_silence({{0.5, 1.0}, {1.04, 1.5}}, 2.0);
    const auto segments = vad::detect_voice_activity(clip, {});
    CHECK(segments.size() == 1);
}

TEST_CASE("segments below min_segment are dropped") {
    const auto clip = tone_with_silence({{1.0, 1.2}}, 3.0);  // 0.2 s < 0.3 s minimum
    CHECK(vad::detect_voice_activity(clip, {}).empty());
}

TEST_CASE("white noise fails the zero-crossing gate") {
    audio::AudioClip clip;
    clip.sample_rate = 16000;
    clip.samples.resize(16000);
    nn::Rng rng(5);
    for (auto& s : clip.samples) s = static_cast<float>(rng.uniform(-0.5, 0.5));
    CHECK(vad::detect_voice_activity(clip, {}).empty());
}

TEST_CASE("segment_clip tiles segments into fixed windows and drops remainders") {
    audio::AudioClip clip;
    clip.sample_rate = 16000;
    clip.samples.assign(static_cast<std::size_t>(2.0 * 16000), 0.3f);
    clip.source_id = "src";

    SUBCASE("1.7 s segment yields 3 clips of 8000 samples") {
        const std::vector<vad::Segment> segs{{0, static_cast<std::size_t>(1.7 * 16000)}};
        const auto clips = vad::segment_clip(clip, segs);
        REQUIRE(clips.size() == 3);
        for (const auto& c : clips) CHECK(c.samples.size() == 8000);
        CHECK(clips[0].source_id == "src_0");
        CHECK(clips[2].source_id == "src_2");
    }

    SUBCASE("0.4 s segment yields nothing") {
        const std::vector<vad::Segment> segs{{0, static_cast<std::size_t>(0.4 * 16000)}};
        CHECK(vad::segment_clip(clip, segs).empty());
    }

    SUBCASE("empty segment list yields empty output") {
        CHECK(vad::segment_clip(clip, {}).empty());
    }
}

TEST_CASE("property: output samples never exceed segment samples; no overlap") {
    nn::Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        audio::AudioClip clip;
        clip.sample_rate = 16000;
        clip.samples.assign(16000 + rng.below(32000), 0.1f);
        std::vector<vad::Segment> segs;
        std::size_t cursor = 0;
        while (cursor + 800 < clip.samples.size()) {
            const std::size_t len = 400 + rng.below(12000);
            const std::size_t end = std::min(clip.samples.size(), cursor + len);
            segs.push_back({cursor, end});
            cursor = end + rng.below(4000);
        }
        std::size_t segment_total = 0;
        for (const auto& s : segs) segment_total += s.end - s.start;
        const auto clips = vad::segment_clip(clip, segs);
        std::size_t out_total = 0;
        for (const auto& c : clips) {
            CHECK(c.samples.size() == 8000);
            out_total += c.samples.size();
        }
        CHECK(out_total <= segment_total);
    }
}

TEST_CASE("gain invariance: scaling the recording leaves segmentation unchanged") {
    const auto clip = tone_with_silence({{0.7, 1.9}, {3.1, 4.2}}, 5.0);
    audio::AudioClip quiet = clip;
    for (auto& s : quiet.samples) s *= 0.05f;
    const auto a = vad::detect_voice_activity(clip, {});
    const auto b = vad::detect_voice_activity(quiet, {});
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].start == b[i].start);
        CHECK(a[i].end == b[i].end);
    }
}

TEST_CASE("determinism: identical input gives identical segmentation") {
    const auto clip = tone_with_silence({{0.7, 1.9}}, 3.0);
    const auto a = vad::detect_voice_activity(clip, {});
    const auto b = vad::detect_voice_activity(clip, {});
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].start == b[i].start);
        CHECK(a[i].end == b[i].end);
    }
}
