#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "support/testutil.hpp"
#include "voiceclef/features.hpp"

using namespace voiceclef;

namespace {

std::vector<double> random_signal(std::size_t n, nn::Rng& rng, double amp = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-amp, amp);
    return v;
}

audio::AudioClip sine_clip(double freq, double seconds = 0.5, double amp = 0.5, int rate = 16000) {
    audio::AudioClip clip;
    clip.sample_rate = rate;
    clip.source_id = "sine";
    clip.samples.resize(static_cast<std::size_t>(seconds * rate));
    for (std::size_t i = 0; i < clip.samples.size(); ++i)
        clip.samples[i] = static_cast<float>(
            amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / rate));
    return clip;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / std::sqrt(na * nb);
}

}  // namespace

TEST_CASE("pre_emphasize: identity at a=0, direct substitution otherwise") {
    const std::vector<double> x{1.0, 2.0, 3.0};
    CHECK(dsp::pre_emphasize(x, 0.0) == x);

    const auto y = dsp::pre_emphasize(x, 0.97);
    REQUIRE(y.size() == 3);
    CHECK(y[0] == doctest::Approx(1.0));
    CHECK(y[1] == doctest::Approx(1.03));
    CHECK(y[2] == doctest::Approx(1.06));

    const std::vector<double> constant(64, 2.5);
    const auto z = dsp::pre_emphasize(constant, 0.97);
    for (std::size_t i = 1; i < z.size(); ++i) CHECK(z[i] == doctest::Approx(0.03 * 2.5));
}

TEST_CASE("frame_signal: exact counts from the framing law") {
    nn::Rng rng(3);
    const auto sig1k = random_signal(1000, rng);
    CHECK(dsp::frame_signal(sig1k, 100, 50).rows == 19);

    const auto sig8k = random_signal(8000, rng);
    CHECK(dsp::frame_signal(sig8k, 400, 160).rows == 48);

    const auto tight = random_signal(400, rng);
    const auto frames = dsp::frame_signal(tight, 400, 160);
    CHECK(frames.rows == 1);
    for (std::size_t i = 0; i < 400; ++i) CHECK(frames.at(0, i) == tight[i]);

    CHECK_THROWS_AS(dsp::frame_signal(random_signal(10, rng), 100, 50), dsp::SignalTooShort);
}

TEST_CASE("frame_signal: frame i covers [i*inc, i*inc + win)") {
    std::vector<double> ramp(1000);
    for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i);
    const auto frames = dsp::frame_signal(ramp, 100, 50);
    for (std::size_t f = 0; f < frames.rows; ++f)
        CHECK(frames.at(f, 0) == static_cast<double>(f * 50));
}

TEST_CASE("property: frame count = floor((N - win + inc)/inc) over random geometry") {
    nn::Rng rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
        const int win = 2 + static_cast<int>(rng.below(500));
        const int inc = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(win)));
        const std::size_t n = static_cast<std::size_t>(win) + rng.below(5000);
        const std::vector<double> sig(n, 0.0);
        const auto expected = (n - static_cast<std::size_t>(win) + static_cast<std::size_t>(inc)) /
                              static_cast<std::size_t>(inc);
        CHECK(dsp::frame_signal(sig, win, inc).rows == expected);
    }
}

TEST_CASE("hamming_window: endpoints, midpoint, symmetry") {
    const auto w = dsp::hamming_window(401);
    CHECK(w[0] == doctest::Approx(0.08));
    CHECK(w[400] == doctest::Approx(0.08));
    CHECK(w[200] == doctest::Approx(1.0));
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(w[i] == doctest::Approx(w[w.size() - 1 - i]));
}

TEST_CASE("apply_window: elementwise product per frame") {
    nn::Rng rng(4);
    const auto w = dsp::hamming_window(64);

    dsp::Matrix ones(2, 64);
    std::fill(ones.data.begin(), ones.data.end(), 1.0);
    dsp::apply_window(ones, w);
    for (std::size_t i = 0; i < 64; ++i) CHECK(ones.at(0, i) == w[i]);

    dsp::Matrix zeros(1, 64);
    dsp::apply_window(zeros, w);
    for (double v : zeros.data) CHECK(v == 0.0);

    dsp::Matrix frames(3, 64);
    for (auto& v : frames.data) v = rng.uniform(-1.0, 1.0);
    dsp::Matrix expected = frames;
    dsp::apply_window(frames, w);
    for (std::size_t f = 0; f < 3; ++f)
        for (std::size_t i = 0; i < 64; ++i)
            CHECK(frames.at(f, i) == doctest::Approx(expected.at(f, i) * w[i]));

    dsp::Matrix wrong(1, 32);
    CHECK_THROWS_AS(dsp::apply_window(wrong, w), dsp::DimensionMismatch);
}

TEST_CASE("fft: one-period sine at n_fft=8 puts power 16 in bin 1") {
    std::vector<double> x(8);
    for (std::size_t n = 0; n < 8; ++n)
        x[n] = std::sin(2.0 * std::numbers::pi * static_cast<double>(n) / 8.0);
    const auto power = dsp::fft_power_spectrum(x, 8);
    REQUIRE(power.size() == 5);
    CHECK(power[1] == doctest::Approx(16.0).epsilon(1e-12));
    for (std::size_t k : {0ul, 2ul, 3ul, 4ul}) CHECK(power[k] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("fft: impulse has a flat unit power spectrum") {
    std::vector<double> x(16, 0.0);
    x[0] = 1.0;
    const auto power = dsp::fft_power_spectrum(x, 16);
    for (double p : power) CHECK(p == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fft: rejects non-power-of-two sizes") {
    std::vector<double> x(12, 0.0);
    CHECK_THROWS_AS(dsp::fft_power_spectrum(x, 12), dsp::NotPowerOfTwo);
}

TEST_CASE("fft matches the naive DFT oracle on random frames") {
    nn::Rng rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        const int log2n = 3 + static_cast<int>(rng.below(8));  // 8 .. 1024
        const std::size_t n = 1ull << log2n;
        const auto frame = random_signal(n, rng);
        const auto fast = dsp::fft_complex(frame, static_cast<int>(n));
        const auto slow = testutil::naive_dft(frame, n);
        double max_mag = 0.0, max_diff = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            max_mag = std::max(max_mag, std::abs(slow[k]));
            max_diff = std::max(max_diff, std::abs(fast[k] - slow[k]));
        }
        CHECK(max_diff / max_mag < 1e-9);
    }
}

TEST_CASE("Parseval: time energy equals (1/N) spectrum energy") {
    nn::Rng rng(29);
    for (const std::size_t n : {8ul, 64ul, 512ul}) {
        const auto x = random_signal(n, rng);
        double time_energy = 0.0;
        for (double v : x) time_energy += v * v;
        const auto spectrum = dsp::fft_complex(x, static_cast<int>(n));
        double spec_energy = 0.0;
        for (const auto& c : spectrum) spec_energy += std::norm(c);
        spec_energy /= static_cast<double>(n);
        CHECK(std::abs(time_energy - spec_energy) / time_energy < 1e-9);
    }
}

TEST_CASE("mel scale: anchor values") {
    CHECK(dsp::hz_to_mel(0.0) == 0.0);
    CHECK(dsp::hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
    CHECK(dsp::hz_to_mel(700.0) == doctest::Approx(781.17).epsilon(1e-4));
    CHECK(dsp::mel_to_hz(dsp::hz_to_mel(1234.5)) == doctest::Approx(1234.5));
}

TEST_CASE("filterbank: triangles peak at 1 on ascending center bins") {
    const auto bank = dsp::build_mel_filterbank(40, 512, 16000, 0.0, 8000.0);
    REQUIRE(bank.weights.rows == 40);
    REQUIRE(bank.weights.cols == 257);
    for (std::size_t m = 0; m < 40; ++m) {
        double peak = 0.0;
        for (std::size_t k = 0; k < 257; ++k) peak = std::max(peak, bank.weights.at(m, k));
        CHECK(peak == 1.0);
        if (m) CHECK(bank.center_freqs[m] > bank.center_freqs[m - 1]);
    }
}

TEST_CASE("filterbank: default 128-filter config covers every interior bin") {
    const auto bank = dsp::build_mel_filterbank(128, 512, 16000, 0.0, 8000.0);
    std::vector<double> column_sum(bank.weights.cols, 0.0);
    for (std::size_t m = 0; m < bank.weights.rows; ++m)
        for (std::size_t k = 0; k < bank.weights.cols; ++k) column_sum[k] += bank.weights.at(m, k);
    for (std::size_t k = 0; k < bank.weights.cols; ++k) {
        const double hz = static_cast<double>(k) * 16000.0 / 512.0;
        if (hz > 0.0 && hz < 8000.0 && k > 0 && k < bank.weights.cols - 1)
            CHECK(column_sum[k] > 0.0);
    }
}

TEST_CASE("filterbank: impossible filter counts are rejected") {
    CHECK_THROWS_AS(dsp::build_mel_filterbank(300, 512, 16000, 0.0, 8000.0), dsp::TooManyFilters);
}

TEST_CASE("apply_filterbank: matches the double-loop oracle") {
    const auto bank = dsp::build_mel_filterbank(128, 512, 16000, 0.0, 8000.0);
    nn::Rng rng(31);

    std::vector<double> zero(257, 0.0);
    for (double y : dsp::apply_filterbank(zero, bank)) CHECK(y == 0.0);

    // one-hot at filter 20's center bin
    std::size_t center = 0;
    for (std::size_t k = 0; k < 257; ++k)
        if (bank.weights.at(20, k) == 1.0) center = k;
    std::vector<double> onehot(257, 0.0);
    onehot[center] = 1.0;
    const auto hot = dsp::apply_filterbank(onehot, bank);
    CHECK(hot[20] == 1.0);
    CHECK(hot[19] == bank.weights.at(19, center));
    CHECK(hot[21] == bank.weights.at(21, center));

    std::vector<double> power(257);
    for (auto& p : power) p = rng.uniform(0.0, 100.0);
    const auto fast = dsp::apply_filterbank(power, bank);
    for (std::size_t m = 0; m < bank.weights.rows; ++m) {
        double acc = 0.0;
        for (std::size_t k = 0; k < 257; ++k) acc += bank.weights.at(m, k) * power[k];
        CHECK(std::abs(fast[m] - acc) <= 1e-12 * std::max(1.0, std::abs(acc)));
        CHECK(fast[m] >= 0.0);
    }

    std::vector<double> wrong(100, 0.0);
    CHECK_THROWS_AS(dsp::apply_filterbank(wrong, bank), dsp::DimensionMismatch);
}

TEST_CASE("log_mel_spectrogram: silence floors at log(log_floor)") {
    audio::AudioClip clip;
    clip.sample_rate = 16000;
    clip.samples.assign(8000, 0.0f);
    dsp::FeatureConfig cfg;
    const auto mel = dsp::log_mel_spectrogram(clip, cfg);
    CHECK(mel.rows == 128);
    CHECK(mel.cols == 48);
    for (double v : mel.data) CHECK(v == doctest::Approx(std::log(1e-10)));
}

TEST_CASE("log_mel_spectrogram: 440 Hz sine peaks in the filter containing 440 Hz") {
    dsp::FeatureConfig cfg;
    const auto bank = dsp::build_mel_filterbank(cfg.n_mels, cfg.n_fft, cfg.sample_rate, cfg.fmin, cfg.fmax);
    const auto mel = dsp::log_mel_spectrogram(sine_clip(440.0), cfg);
    for (std::size_t f = 0; f < mel.cols; ++f) {
        std::size_t best = 0;
        for (std::size_t m = 1; m < mel.rows; ++m)
            if (mel.at(m, f) > mel.at(best, f)) best = m;
        CHECK(std::abs(bank.center_freqs[best] - 440.0) <= 65.0);
    }
}

TEST_CASE("pitch smoothing: sines inside one Mel filter give near-identical filterbank vectors") {
    dsp::FeatureConfig cfg;
    cfg.n_mels = 20;
    const auto bank = dsp::build_mel_filterbank(cfg.n_mels, cfg.n_fft, cfg.sample_rate, cfg.fmin, cfg.fmax);

    auto filterbank_of = [&](double freq) {
        std::vector<double> frame(static_cast<std::size_t>(cfg.win));
        for (std::size_t i = 0; i < frame.size(); ++i)
            frame[i] = std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / cfg.sample_rate);
        const auto window = dsp::hamming_window(cfg.win);
        for (std::size_t i = 0; i < frame.size(); ++i) frame[i] *= window[i];
        return dsp::apply_filterbank(dsp::fft_power_spectrum(frame, cfg.n_fft), bank);
    };

    const double f_lo = 6050.0, f_hi = 6100.0;

    // premise: one filter's triangle contains both frequencies
    const auto bin_of = [&](double f) {
        return static_cast<std::size_t>(std::lround(f * cfg.n_fft / cfg.sample_rate));
    };
    bool same_filter = false;
    for (std::size_t m = 0; m < bank.weights.rows; ++m)
        same_filter |= bank.weights.at(m, bin_of(f_lo)) > 0.0 && bank.weights.at(m, bin_of(f_hi)) > 0.0;
    REQUIRE(same_filter);

    const auto a = filterbank_of(f_lo);
    const auto b = filterbank_of(f_hi);
    CHECK(cosine_similarity(a, b) > 0.99);
}

TEST_CASE("dct: constant input has all energy in the discarded 0th term") {
    const std::vector<double> constant(64, 3.7);
    const auto kept = dsp::dct_cepstrum(constant, 20);
    for (double c : kept) CHECK(c == doctest::Approx(0.0).epsilon(1e-12));

    const std::vector<double> zero(64, 0.0);
    for (double c : dsp::dct_cepstrum(zero, 64)) CHECK(c == 0.0);

    CHECK_THROWS_AS(dsp::dct_cepstrum(constant, 65), dsp::OrderTooHigh);
}

TEST_CASE("dct: cepstrum equals raw DCT-II coefficients 1..L") {
    nn::Rng rng(37);
    std::vector<double> s(32);
    for (auto& v : s) v = rng.uniform(-4.0, 4.0);
    const auto full = dsp::dct_ii(s);
    const auto kept = dsp::dct_cepstrum(s, 13);
    for (std::size_t n = 1; n <= 13; ++n) CHECK(kept[n - 1] == doctest::Approx(full[n]).epsilon(1e-12));
}

TEST_CASE("dct: forward then inverse oracle reconstructs the input") {
    nn::Rng rng(41);
    for (const std::size_t m : {8ul, 40ul, 128ul}) {
        std::vector<double> s(m);
        for (auto& v : s) v = rng.uniform(-5.0, 5.0);
        const auto c = dsp::dct_ii(s);
        const auto back = testutil::idct_ii(c);
        for (std::size_t i = 0; i < m; ++i) CHECK(std::abs(back[i] - s[i]) < 1e-9);
    }
}

TEST_CASE("deltas: constant is flat, ramp is one, random matches direct formula") {
    dsp::Matrix constant(3, 10);
    std::fill(constant.data.begin(), constant.data.end(), 4.2);
    for (double v : dsp::delta_coefficients(constant, 1).data) CHECK(v == doctest::Approx(0.0));

    dsp::Matrix ramp(1, 12);
    for (std::size_t t = 0; t < 12; ++t) ramp.at(0, t) = static_cast<double>(t);
    const auto d = dsp::delta_coefficients(ramp, 1);
    for (std::size_t t = 2; t < 10; ++t) CHECK(d.at(0, t) == doctest::Approx(1.0));

    nn::Rng rng(43);
    dsp::Matrix random(4, 20);
    for (auto& v : random.data) v = rng.uniform(-2.0, 2.0);
    const auto got = dsp::delta_coefficients(random, 1);
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t t = 0; t < 20; ++t) {
            auto at = [&](long tt) {
                return random.at(r, static_cast<std::size_t>(std::clamp<long>(tt, 0, 19)));
            };
            const long t_long = static_cast<long>(t);
            const double expected =
                (1.0 * (at(t_long + 1) - at(t_long - 1)) + 2.0 * (at(t_long + 2) - at(t_long - 2))) / 10.0;
            CHECK(got.at(r, t) == doctest::Approx(expected).epsilon(1e-12));
        }
    }

    dsp::Matrix tiny(1, 4);
    CHECK_THROWS_AS(dsp::delta_coefficients(tiny, 1), dsp::TooFewFrames);
}

TEST_CASE("extract_mfcc: shapes, order selection and determinism") {
    const auto clip = sine_clip(300.0);
    dsp::FeatureConfig cfg;

    const auto full = dsp::extract_mfcc(clip, cfg);
    CHECK(full.rows == 128);
    CHECK(full.cols == 48);

    cfg.n_mfcc = 13;
    const auto thirteen = dsp::extract_mfcc(clip, cfg);
    CHECK(thirteen.rows == 13);
    CHECK(thirteen.cols == 48);

    cfg.deltas = 2;
    const auto with_deltas = dsp::extract_mfcc(clip, cfg);
    CHECK(with_deltas.rows == 39);
    CHECK(with_deltas.rows % 13 == 0);

    const auto again = dsp::extract_mfcc(clip, cfg);
    CHECK(again.data == with_deltas.data);
    CHECK(again.config_digest == cfg.digest());
    for (float v : with_deltas.data) CHECK(std::isfinite(v));
}

TEST_CASE("property: kept cepstral coefficients are gain-invariant") {
    // a gain a scales every filter energy by a^2, shifting each frame's log
    // vector by a constant; that shift lives entirely in the discarded 0th
    // DCT term, so coefficients 1..L must not move (away from the log floor)
    const auto loud = sine_clip(700.0, 0.5, 0.5);
    audio::AudioClip quiet = loud;
    for (auto& s : quiet.samples) s *= 0.25f;

    dsp::FeatureConfig cfg;
    cfg.n_mfcc = 13;
    cfg.log_floor = 1e-30;  // keep the floor out of play for this property
    const auto a = dsp::extract_mfcc(loud, cfg);
    const auto b = dsp::extract_mfcc(quiet, cfg);
    REQUIRE(a.data.size() == b.data.size());
    for (std::size_t i = 0; i < a.data.size(); ++i)
        CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-4));
}

TEST_CASE("feature config digest changes with any field") {
    dsp::FeatureConfig a;
    dsp::FeatureConfig b = a;
    CHECK(a.digest() == b.digest());
    b.n_mfcc = 40;
    CHECK(a.digest() != b.digest());
    b = a;
    b.pre_emphasis_enabled = false;
    CHECK(a.digest() != b.digest());
}

TEST_CASE("csv export carries the pinned header and full-precision values") {
    testutil::TempDir dir("features");
    dsp::Matrix m(2, 3);
    m.at(0, 0) = 1.0 / 3.0;
    m.at(1, 2) = -2.5e-7;
    dsp::write_matrix_csv(m, 0xabcdef0123456789ull, dir.path() / "mel.csv");

    std::ifstream in(dir.path() / "mel.csv");
    std::string header, row0, row1;
    std::getline(in, header);
    std::getline(in, row0);
    std::getline(in, row1);
    CHECK(header == "# rows=2 cols=3 config=abcdef0123456789");
    CHECK(row0.rfind("0.33333333333333331,", 0) == 0);  // 17 significant digits
    CHECK(std::stod(row0) == 1.0 / 3.0);                // bit-faithful round trip
    const auto last_comma = row1.rfind(',');
    CHECK(std::stod(row1.substr(last_comma + 1)) == -2.5e-7);
}

TEST_CASE("feature archive round-trips and rejects corruption") {
    testutil::TempDir dir("archive");
    const auto clip = sine_clip(500.0);
    dsp::FeatureConfig cfg;
    cfg.n_mfcc = 13;
    std::vector<dsp::MfccTensor> tensors{dsp::extract_mfcc(clip, cfg)};
    tensors.push_back(tensors.front());
    tensors[1].source_id = "second";

    const auto path = dir.path() / "features.vmfc";
    dsp::write_archive(tensors, path);
    const auto back = dsp::read_archive(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].rows == 13);
    CHECK(back[0].cols == 48);
    CHECK(back[0].data == tensors[0].data);
    CHECK(back[1].source_id == "second");

    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
    f.close();
    CHECK_THROWS_AS(dsp::read_archive(path), dsp::ArchiveError);

    // truncation
    dsp::write_archive(tensors, path);
    std::filesystem::resize_file(path, 40);
    CHECK_THROWS_AS(dsp::read_archive(path), dsp::ArchiveError);

    // an empty archive is valid
    dsp::write_archive({}, dir.path() / "empty.vmfc");
    CHECK(dsp::read_archive(dir.path() / "empty.vmfc").empty());
}
