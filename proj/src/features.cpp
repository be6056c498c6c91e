#include "voiceclef/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include "voiceclef/kernels.hpp"

namespace voiceclef::dsp {

namespace {

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

void append_bytes(std::string& out, const void* p, std::size_t n) {
    out.append(static_cast<const char*>(p), n);
}

template <typename T>
void put(std::string& out, T v) {
    append_bytes(out, &v, sizeof(T));
}

template <typename T>
T take(std::istream& in, const char* what) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ArchiveError(std::string("truncated archive while reading ") + what);
    return v;
}

}  // namespace

void FeatureConfig::validate() const {
    if (pre_emphasis_enabled && !(pre_emphasis >= 0.0 && pre_emphasis < 1.0))
        throw Error("features: pre_emphasis must be in [0, 1)");
    if (win < 2 || inc <= 0) throw Error("features: require win >= 2 and inc > 0");
    if (win > n_fft) throw Error("features: require win <= n_fft");
    if (!is_pow2(n_fft)) throw NotPowerOfTwo("features: n_fft must be a power of two");
    if (n_mels <= 0) throw Error("features: n_mels must be positive");
    if (n_mfcc <= 0 || n_mfcc > n_mels) throw OrderTooHigh("features: require 0 < n_mfcc <= n_mels");
    if (!(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0))
        throw Error("features: require 0 <= fmin < fmax <= sample_rate/2");
    if (deltas < 0 || deltas > 2) throw Error("features: deltas must be 0, 1 or 2");
    if (!(log_floor > 0.0)) throw Error("features: log_floor must be positive");
    if (sample_rate <= 0) throw Error("features: sample_rate must be positive");
}

std::uint64_t FeatureConfig::digest() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "pe=%d a=%.17g win=%d inc=%d nfft=%d nmels=%d fmin=%.17g fmax=%.17g nmfcc=%d deltas=%d floor=%.17g sr=%d",
                  pre_emphasis_enabled ? 1 : 0, pre_emphasis, win, inc, n_fft, n_mels, fmin, fmax,
                  n_mfcc, deltas, log_floor, sample_rate);
    return fnv1a64(buf);
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> pre_emphasize(std::span<const double> x, double a) {
    if (!(a >= 0.0 && a < 1.0)) throw Error("pre_emphasize: coefficient must be in [0, 1)");
    std::vector<double> y(x.size());
    if (x.empty()) return y;
    y[0] = x[0];
    for (std::size_t i = 1; i < x.size(); ++i) y[i] = x[i] - a * x[i - 1];
    return y;
}

Matrix frame_signal(std::span<const double> x, int win, int inc) {
    if (win < 1 || inc < 1) throw Error("frame_signal: win and inc must be positive");
    if (x.size() < static_cast<std::size_t>(win))
        throw SignalTooShort("frame_signal: signal shorter than one frame");
    const std::size_t n_frames = (x.size() - static_cast<std::size_t>(win)) / inc + 1;
    Matrix frames(n_frames, static_cast<std::size_t>(win));
    for (std::size_t f = 0; f < n_frames; ++f)
        std::copy_n(x.data() + f * inc, win, frames.row(f));
    return frames;
}

std::vector<double> hamming_window(int win) {
    if (win < 2) throw Error("hamming_window: win must be >= 2");
    std::vector<double> w(static_cast<std::size_t>(win));
    for (int i = 0; i < win; ++i)
        w[static_cast<std::size_t>(i)] =
            0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (win - 1));
    return w;
}

void apply_window(Matrix& frames, std::span<const double> window) {
    if (window.size() != frames.cols) throw DimensionMismatch("apply_window: window length != frame length");
    for (std::size_t f = 0; f < frames.rows; ++f) {
        double* row = frames.row(f);
        for (std::size_t i = 0; i < frames.cols; ++i) row[i] *= window[i];
    }
}

void fft_inplace(std::vector<std::complex<double>>& buf) {
    const std::size_t n = buf.size();
    if (n == 0 || (n & (n - 1)) != 0) throw NotPowerOfTwo("fft: size must be a power of two");
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j |= bit;
        if (i < j) std::swap(buf[i], buf[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(angle), std::sin(angle));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = buf[i + k];
                const std::complex<double> v = buf[i + k + len / 2] * w;
                buf[i + k] = u + v;
                buf[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

std::vector<std::complex<double>> fft_complex(std::span<const double> frame, int n_fft) {
    if (!is_pow2(n_fft)) throw NotPowerOfTwo("fft: n_fft must be a power of two");
    if (frame.size() > static_cast<std::size_t>(n_fft))
        throw DimensionMismatch("fft: frame longer than n_fft");
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(n_fft));
    for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i];
    fft_inplace(buf);
    return buf;
}

std::vector<double> fft_power_spectrum(std::span<const double> frame, int n_fft) {
    const auto spectrum = fft_complex(frame, n_fft);
    std::vector<double> power(static_cast<std::size_t>(n_fft) / 2 + 1);
    for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(spectrum[k]);
    return power;
}

MelFilterBank build_mel_filterbank(int n_mels, int n_fft, int sample_rate, double fmin, double fmax) {
    if (!is_pow2(n_fft)) throw NotPowerOfTwo("filterbank: n_fft must be a power of two");
    if (n_mels < 1) throw Error("filterbank: n_mels must be positive");
    const int n_bins = n_fft / 2 + 1;
    if (n_mels + 2 > n_bins)
        throw TooManyFilters("filterbank: " + std::to_string(n_mels) + " filters cannot fit in " +
                             std::to_string(n_bins) + " bins");

    const double mel_lo = hz_to_mel(fmin);
    const double mel_hi = hz_to_mel(fmax);
    std::vector<int> points(static_cast<std::size_t>(n_mels) + 2);
    for (int i = 0; i < n_mels + 2; ++i) {
        const double mel = mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1);
        const double hz = mel_to_hz(mel);
        int bin = static_cast<int>(std::lround(hz * n_fft / sample_rate));
        // keep boundaries strictly increasing so every triangle is non-degenerate
        if (i > 0 && bin <= points[static_cast<std::size_t>(i) - 1])
            bin = points[static_cast<std::size_t>(i) - 1] + 1;
        if (bin >= n_bins)
            throw TooManyFilters("filterbank: adjacent center bins collide near bin " +
                                 std::to_string(bin));
        points[static_cast<std::size_t>(i)] = bin;
    }

    MelFilterBank bank;
    bank.weights = Matrix(static_cast<std::size_t>(n_mels), static_cast<std::size_t>(n_bins));
    bank.center_freqs.resize(static_cast<std::size_t>(n_mels));
    for (int m = 0; m < n_mels; ++m) {
        const int left = points[static_cast<std::size_t>(m)];
        const int center = points[static_cast<std::size_t>(m) + 1];
        const int right = points[static_cast<std::size_t>(m) + 2];
        double* row = bank.weights.row(static_cast<std::size_t>(m));
        for (int k = left; k <= right; ++k) {
            if (k < center)
                row[k] = static_cast<double>(k - left) / (center - left);
            else if (k == center)
                row[k] = 1.0;
            else
                row[k] = static_cast<double>(right - k) / (right - center);
        }
        bank.center_freqs[static_cast<std::size_t>(m)] =
            static_cast<double>(center) * sample_rate / n_fft;
    }
    return bank;
}

std::vector<double> apply_filterbank(std::span<const double> power, const MelFilterBank& bank) {
    if (power.size() != bank.weights.cols)
        throw DimensionMismatch("apply_filterbank: power length != filter width");
    std::vector<double> out(bank.weights.rows);
    for (std::size_t m = 0; m < bank.weights.rows; ++m)
        out[m] = kernels::dot(bank.weights.row(m), power.data(), power.size());
    return out;
}

Matrix log_mel_spectrogram(const audio::AudioClip& clip, const FeatureConfig& cfg) {
    cfg.validate();
    const audio::AudioClip resampled = audio::resample(clip, cfg.sample_rate);

    std::vector<double> signal(resampled.samples.begin(), resampled.samples.end());
    if (cfg.pre_emphasis_enabled) signal = pre_emphasize(signal, cfg.pre_emphasis);

    Matrix frames = frame_signal(signal, cfg.win, cfg.inc);
    const std::vector<double> window = hamming_window(cfg.win);
    apply_window(frames, window);

    const MelFilterBank bank =
        build_mel_filterbank(cfg.n_mels, cfg.n_fft, cfg.sample_rate, cfg.fmin, cfg.fmax);

    Matrix out(static_cast<std::size_t>(cfg.n_mels), frames.rows);
    for (std::size_t f = 0; f < frames.rows; ++f) {
        const auto power =
            fft_power_spectrum(std::span<const double>(frames.row(f), frames.cols), cfg.n_fft);
        const auto energies = apply_filterbank(power, bank);
        for (std::size_t m = 0; m < energies.size(); ++m)
            out.at(m, f) = std::log(std::max(energies[m], cfg.log_floor));
    }
    return out;
}

std::vector<double> dct_ii(std::span<const double> s) {
    const std::size_t m_count = s.size();
    std::vector<double> c(m_count, 0.0);
    for (std::size_t n = 0; n < m_count; ++n) {
        double acc = 0.0;
        for (std::size_t m = 0; m < m_count; ++m)
            acc += s[m] * std::cos(std::numbers::pi * static_cast<double>(n) *
                                   (static_cast<double>(m) + 0.5) / static_cast<double>(m_count));
        c[n] = acc;
    }
    return c;
}

std::vector<double> dct_cepstrum(std::span<const double> log_energies, int n_mfcc) {
    const std::size_t m_count = log_energies.size();
    if (n_mfcc < 1 || static_cast<std::size_t>(n_mfcc) > m_count)
        throw OrderTooHigh("dct_cepstrum: order exceeds filter count");
    std::vector<double> c(static_cast<std::size_t>(n_mfcc), 0.0);
    for (int n = 1; n <= n_mfcc; ++n) {
        double acc = 0.0;
        for (std::size_t m = 0; m < m_count; ++m)
            acc += log_energies[m] * std::cos(std::numbers::pi * n *
                                              (static_cast<double>(m) + 0.5) /
                                              static_cast<double>(m_count));
        c[static_cast<std::size_t>(n) - 1] = acc;
    }
    return c;
}

Matrix delta_coefficients(const Matrix& coeffs, int order) {
    if (order != 1 && order != 2) throw Error("delta_coefficients: order must be 1 or 2");
    if (coeffs.cols < 5) throw TooFewFrames("delta_coefficients: need at least 5 frames");
    Matrix current = coeffs;
    for (int o = 0; o < order; ++o) {
        Matrix next(current.rows, current.cols);
        const double denom = 2.0 * (1.0 * 1.0 + 2.0 * 2.0);  // 2 * sum k^2, K = 2
        const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(current.cols) - 1;
        for (std::size_t r = 0; r < current.rows; ++r) {
            const double* row = current.row(r);
            auto clamped = [&](std::ptrdiff_t t) {
                return row[std::clamp<std::ptrdiff_t>(t, 0, last)];
            };
            for (std::ptrdiff_t t = 0; t <= last; ++t) {
                double acc = 0.0;
                for (int k = 1; k <= 2; ++k) acc += k * (clamped(t + k) - clamped(t - k));
                next.at(r, static_cast<std::size_t>(t)) = acc / denom;
            }
        }
        current = std::move(next);
    }
    return current;
}

MfccTensor extract_mfcc(const audio::AudioClip& clip, const FeatureConfig& cfg) {
    cfg.validate();
    const Matrix logmel = log_mel_spectrogram(clip, cfg);
    const std::size_t n_frames = logmel.cols;
    const std::size_t L = static_cast<std::size_t>(cfg.n_mfcc);

    Matrix base(L, n_frames);
    std::vector<double> column(static_cast<std::size_t>(cfg.n_mels));
    for (std::size_t f = 0; f < n_frames; ++f) {
        for (std::size_t m = 0; m < column.size(); ++m) column[m] = logmel.at(m, f);
        const auto ceps = dct_cepstrum(column, cfg.n_mfcc);
        for (std::size_t r = 0; r < L; ++r) base.at(r, f) = ceps[r];
    }

    std::vector<const Matrix*> blocks;
    Matrix d1, d2;
    blocks.push_back(&base);
    if (cfg.deltas >= 1) {
        d1 = delta_coefficients(base, 1);
        blocks.push_back(&d1);
    }
    if (cfg.deltas >= 2) {
        d2 = delta_coefficients(d1, 1);
        blocks.push_back(&d2);
    }

    MfccTensor tensor;
    tensor.rows = L * blocks.size();
    tensor.cols = n_frames;
    tensor.source_id = clip.source_id;
    tensor.config_digest = cfg.digest();
    tensor.data.resize(tensor.rows * tensor.cols);
    std::size_t out_row = 0;
    for (const Matrix* block : blocks) {
        for (std::size_t r = 0; r < block->rows; ++r, ++out_row)
            for (std::size_t c = 0; c < n_frames; ++c)
                tensor.data[out_row * n_frames + c] = static_cast<float>(block->at(r, c));
    }
    return tensor;
}

namespace {

void write_csv_impl(std::size_t rows, std::size_t cols, std::uint64_t digest,
                    const std::filesystem::path& path,
                    const std::function<double(std::size_t, std::size_t)>& get) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + path.string());
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
    out << "# rows=" << rows << " cols=" << cols << " config=" << buf << "\n";
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", get(r, c));
            if (c) out << ',';
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw Error("write failed: " + path.string());
}

}  // namespace

void write_matrix_csv(const Matrix& m, std::uint64_t config_digest, const std::filesystem::path& path) {
    write_csv_impl(m.rows, m.cols, config_digest, path,
                   [&](std::size_t r, std::size_t c) { return m.at(r, c); });
}

void write_tensor_csv(const MfccTensor& t, const std::filesystem::path& path) {
    write_csv_impl(t.rows, t.cols, t.config_digest, path,
                   [&](std::size_t r, std::size_t c) { return static_cast<double>(t.at(r, c)); });
}

void write_archive(const std::vector<MfccTensor>& tensors, const std::filesystem::path& path) {
    std::string out;
    out.append("VMFC");
    put<std::uint32_t>(out, 1);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
    for (const MfccTensor& t : tensors) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rows));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(t.cols));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(t.source_id.size()));
        out.append(t.source_id);
        append_bytes(out, t.data.data(), t.data.size() * sizeof(float));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open for writing: " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw Error("write failed: " + path.string());
}

std::vector<MfccTensor> read_archive(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArchiveError("cannot open archive: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "VMFC", 4) != 0)
        throw ArchiveError("bad archive magic in " + path.string());
    const auto version = take<std::uint32_t>(in, "version");
    if (version != 1) throw ArchiveError("unsupported archive version " + std::to_string(version));
    const auto count = take<std::uint32_t>(in, "tensor count");
    std::vector<MfccTensor> tensors(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        MfccTensor& t = tensors[i];
        t.rows = take<std::uint32_t>(in, "rows");
        t.cols = take<std::uint32_t>(in, "cols");
        const auto id_len = take<std::uint32_t>(in, "source_id length");
        t.source_id.resize(id_len);
        in.read(t.source_id.data(), id_len);
        if (!in) throw ArchiveError("truncated archive while reading source_id");
        t.data.resize(t.rows * t.cols);
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(float)));
        if (!in) throw ArchiveError("truncated archive while reading tensor data");
    }
    return tensors;
}

}  // namespace voiceclef::dsp
