#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "voiceclef/audio.hpp"
#include "voiceclef/common.hpp"

namespace voiceclef::dsp {

struct FeatureConfig {
    bool pre_emphasis_enabled = true;
    double pre_emphasis = 0.97;
    int win = 400;    // frame length in samples
    int inc = 160;    // hop
    int n_fft = 512;  // power of two, >= win
    int n_mels = 128;
    double fmin = 0.0;
    double fmax = 8000.0;  // defaults assume the 16 kHz working rate
    int n_mfcc = 128;
    int deltas = 0;  // 0, 1 or 2 difference orders appended
    double log_floor = 1e-10;
    int sample_rate = 16000;

    void validate() const;
    /// Stable hash of every field; travels with tensors and model files so a
    /// model can refuse features extracted under a different configuration.
    std::uint64_t digest() const;
};

/// Dense row-major matrix of doubles; the DSP stages run in double end to end.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
};

/// Triangular filter weights, one row per filter over the one-sided spectrum.
struct MelFilterBank {
    Matrix weights;                     // [n_mels x (n_fft/2 + 1)]
    std::vector<double> center_freqs;   // Hz, ascending
};

/// Coefficients-by-frames feature tensor, 32-bit storage for archives and
/// the classifier. rows = n_mfcc * (1 + deltas).
struct MfccTensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;  // row-major
    std::string source_id;
    std::uint64_t config_digest = 0;

    float at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct SignalTooShort : Error {
    using Error::Error;
};
struct DimensionMismatch : Error {
    using Error::Error;
};
struct NotPowerOfTwo : Error {
    using Error::Error;
};
struct TooManyFilters : Error {
    using Error::Error;
};
struct OrderTooHigh : Error {
    using Error::Error;
};
struct TooFewFrames : Error {
    using Error::Error;
};
struct ArchiveError : Error {
    using Error::Error;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// y[0] = x[0]; y[n] = x[n] - a*x[n-1].
std::vector<double> pre_emphasize(std::span<const double> x, double a);

/// Frame i covers samples [i*inc, i*inc + win); count = floor((N-win+inc)/inc).
Matrix frame_signal(std::span<const double> x, int win, int inc);

/// Symmetric Hamming window, w[i] = 0.54 - 0.46*cos(2*pi*i/(win-1)).
std::vector<double> hamming_window(int win);

/// Elementwise per-frame product with the window.
void apply_window(Matrix& frames, std::span<const double> window);

/// In-place radix-2 FFT; size must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& buf);

/// Complex spectrum of the zero-padded frame (full n_fft bins).
std::vector<std::complex<double>> fft_complex(std::span<const double> frame, int n_fft);

/// One-sided power spectrum |X[k]|^2 for k = 0..n_fft/2.
std::vector<double> fft_power_spectrum(std::span<const double> frame, int n_fft);

/// n_mels + 2 points equally spaced on the Mel scale between fmin and fmax,
/// mapped to Hz and snapped to strictly increasing FFT bins; filter m is the
/// triangle over bins (m-1, m, m+1) with peak 1 at its center bin.
MelFilterBank build_mel_filterbank(int n_mels, int n_fft, int sample_rate, double fmin, double fmax);

/// Y[m] = dot(weights[m], power).
std::vector<double> apply_filterbank(std::span<const double> power, const MelFilterBank& bank);

/// Full pipeline up to log filterbank energies: [n_mels x frame_num].
Matrix log_mel_spectrogram(const audio::AudioClip& clip, const FeatureConfig& cfg);

/// Raw DCT-II sums c(n) = sum_m s(m)*cos(pi*n*(m+1/2)/M) for n = 0..M-1.
std::vector<double> dct_ii(std::span<const double> s);

/// Cepstral coefficients 1..L (coefficient 0 is discarded).
std::vector<double> dct_cepstrum(std::span<const double> log_energies, int n_mfcc);

/// Regression deltas with window K=2, edge frames replicated. order 2 applies
/// the same transform to the order-1 output.
Matrix delta_coefficients(const Matrix& coeffs, int order);

/// Composition of the stages above; rows = n_mfcc * (1 + deltas). Resamples
/// to cfg.sample_rate when the clip rate differs.
MfccTensor extract_mfcc(const audio::AudioClip& clip, const FeatureConfig& cfg);

/// CSV with header "# rows=<R> cols=<C> config=<digest>" and 17-significant-
/// digit values, one row per line.
void write_matrix_csv(const Matrix& m, std::uint64_t config_digest, const std::filesystem::path& path);
void write_tensor_csv(const MfccTensor& t, const std::filesystem::path& path);

// Feature archive: magic "VMFC", u32 version = 1, u32 tensor count, then per
// tensor u32 rows, u32 cols, length-prefixed source_id, f32 data row-major.
void write_archive(const std::vector<MfccTensor>& tensors, const std::filesystem::path& path);
std::vector<MfccTensor> read_archive(const std::filesystem::path& path);

}  // namespace voiceclef::dsp
