#include "voiceclef/kernels.hpp"

#include <cstdlib>
#include <string>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#endif
#if defined(__ARM_NEON) || defined(__aarch64__)
#include <arm_neon.h>
#endif

namespace voiceclef::kernels {

namespace detail {

double dot_scalar(const float* a, const float* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return acc;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(float* y, float a, const float* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void axpy_scalar(double* y, double a, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

#if defined(__x86_64__) || defined(__i386__)

bool cpu_has_avx2() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

// float inputs widen to double lanes; float*float is exact in double, so the
// only divergence from the scalar reference is summation order.
__attribute__((target("avx2,fma")))
double dot_avx2(const float* a, const float* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 va = _mm256_loadu_ps(a + i);
        __m256 vb = _mm256_loadu_ps(b + i);
        __m256d alo = _mm256_cvtps_pd(_mm256_castps256_ps128(va));
        __m256d ahi = _mm256_cvtps_pd(_mm256_extractf128_ps(va, 1));
        __m256d blo = _mm256_cvtps_pd(_mm256_castps256_ps128(vb));
        __m256d bhi = _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1));
        acc0 = _mm256_fmadd_pd(alo, blo, acc0);
        acc1 = _mm256_fmadd_pd(ahi, bhi, acc1);
    }
    __m256d acc = _mm256_add_pd(acc0, acc1);
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double sum = lanes[0] + lanes[1] + lanes[2] + lanes[3];
    for (; i < n; ++i) sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return sum;
}

__attribute__((target("avx2,fma")))
double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    __m256d acc = _mm256_add_pd(acc0, acc1);
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double sum = lanes[0] + lanes[1] + lanes[2] + lanes[3];
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

__attribute__((target("avx2,fma")))
void axpy_avx2(float* y, float a, const float* x, std::size_t n) {
    const __m256 va = _mm256_set1_ps(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 vy = _mm256_loadu_ps(y + i);
        vy = _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), vy);
        _mm256_storeu_ps(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

__attribute__((target("avx2,fma")))
void axpy_avx2(double* y, double a, const double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

#else

bool cpu_has_avx2() { return false; }

#endif  // x86

#if defined(__ARM_NEON) || defined(__aarch64__)

double dot_neon(const float* a, const float* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        float32x4_t va = vld1q_f32(a + i);
        float32x4_t vb = vld1q_f32(b + i);
        acc0 = vfmaq_f64(acc0, vcvt_f64_f32(vget_low_f32(va)), vcvt_f64_f32(vget_low_f32(vb)));
        acc1 = vfmaq_f64(acc1, vcvt_f64_f32(vget_high_f32(va)), vcvt_f64_f32(vget_high_f32(vb)));
    }
    double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return sum;
}

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

void axpy_neon(float* y, float a, const float* x, std::size_t n) {
    const float32x4_t va = vdupq_n_f32(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        float32x4_t vy = vld1q_f32(y + i);
        vy = vfmaq_f32(vy, va, vld1q_f32(x + i));
        vst1q_f32(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void axpy_neon(double* y, double a, const double* x, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t vy = vld1q_f64(y + i);
        vy = vfmaq_f64(vy, va, vld1q_f64(x + i));
        vst1q_f64(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

#endif  // NEON

}  // namespace detail

namespace {

SimdLevel resolve_level() {
    std::string want = "auto";
    if (const char* env = std::getenv("VOICECLEF_SIMD")) want = env;
    if (want == "scalar") return SimdLevel::scalar;
#if defined(__x86_64__) || defined(__i386__)
    if (want == "avx2" || want == "auto") {
        if (detail::cpu_has_avx2()) return SimdLevel::avx2;
    }
#endif
#if defined(__ARM_NEON) || defined(__aarch64__)
    if (want == "neon" || want == "auto") return SimdLevel::neon;
#endif
    return SimdLevel::scalar;
}

}  // namespace

SimdLevel active_level() {
    static const SimdLevel level = resolve_level();
    return level;
}

const char* level_name(SimdLevel level) {
    switch (level) {
        case SimdLevel::avx2: return "avx2";
        case SimdLevel::neon: return "neon";
        default: return "scalar";
    }
}

double dot(const float* a, const float* b, std::size_t n) {
    switch (active_level()) {
#if defined(__x86_64__) || defined(__i386__)
        case SimdLevel::avx2: return detail::dot_avx2(a, b, n);
#endif
#if defined(__ARM_NEON) || defined(__aarch64__)
        case SimdLevel::neon: return detail::dot_neon(a, b, n);
#endif
        default: return detail::dot_scalar(a, b, n);
    }
}

double dot(const double* a, const double* b, std::size_t n) {
    switch (active_level()) {
#if defined(__x86_64__) || defined(__i386__)
        case SimdLevel::avx2: return detail::dot_avx2(a, b, n);
#endif
#if defined(__ARM_NEON) || defined(__aarch64__)
        case SimdLevel::neon: return detail::dot_neon(a, b, n);
#endif
        default: return detail::dot_scalar(a, b, n);
    }
}

void axpy(float* y, float a, const float* x, std::size_t n) {
    switch (active_level()) {
#if defined(__x86_64__) || defined(__i386__)
        case SimdLevel::avx2: detail::axpy_avx2(y, a, x, n); return;
#endif
#if defined(__ARM_NEON) || defined(__aarch64__)
        case SimdLevel::neon: detail::axpy_neon(y, a, x, n); return;
#endif
        default: detail::axpy_scalar(y, a, x, n); return;
    }
}

void axpy(double* y, double a, const double* x, std::size_t n) {
    switch (active_level()) {
#if defined(__x86_64__) || defined(__i386__)
        case SimdLevel::avx2: detail::axpy_avx2(y, a, x, n); return;
#endif
#if defined(__ARM_NEON) || defined(__aarch64__)
        case SimdLevel::neon: detail::axpy_neon(y, a, x, n); return;
#endif
        default: detail::axpy_scalar(y, a, x, n); return;
    }
}

}  // namespace voiceclef::kernels
