#pragma once

#include <cstddef>

// Data-parallel inner loops shared by the DSP and network code. Every kernel
// has a scalar reference implementation and, where the ISA allows, a SIMD
// variant selected once at startup. Dot products accumulate in double no
// matter the input width, so scalar and SIMD paths differ only by summation
// order.
namespace voiceclef::kernels {

enum class SimdLevel { scalar, avx2, neon };

/// The variant the dispatcher resolved for this process. Controlled by the
/// VOICECLEF_SIMD env var (scalar | avx2 | neon | auto); unsupported requests
/// fall back to scalar.
SimdLevel active_level();
const char* level_name(SimdLevel level);

double dot(const float* a, const float* b, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);

/// y[i] += a * x[i]
void axpy(float* y, float a, const float* x, std::size_t n);
void axpy(double* y, double a, const double* x, std::size_t n);

// Reference kernels and raw variants, exposed for equivalence tests.
namespace detail {

double dot_scalar(const float* a, const float* b, std::size_t n);
double dot_scalar(const double* a, const double* b, std::size_t n);
void axpy_scalar(float* y, float a, const float* x, std::size_t n);
void axpy_scalar(double* y, double a, const double* x, std::size_t n);

bool cpu_has_avx2();

#if defined(__x86_64__) || defined(__i386__)
double dot_avx2(const float* a, const float* b, std::size_t n);
double dot_avx2(const double* a, const double* b, std::size_t n);
void axpy_avx2(float* y, float a, const float* x, std::size_t n);
void axpy_avx2(double* y, double a, const double* x, std::size_t n);
#endif

#if defined(__ARM_NEON) || defined(__aarch64__)
double dot_neon(const float* a, const float* b, std::size_t n);
double dot_neon(const double* a, const double* b, std::size_t n);
void axpy_neon(float* y, float a, const float* x, std::size_t n);
void axpy_neon(double* y, double a, const double* x, std::size_t n);
#endif

}  // namespace detail

}  // namespace voiceclef::kernels
