#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "voiceclef/kernels.hpp"
#include "voiceclef/nn.hpp"

using namespace voiceclef;

namespace {

std::vector<float> random_f32(std::size_t n, nn::Rng& rng) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.uniform(-2.0, 2.0));
    return v;
}

std::vector<double> random_f64(std::size_t n, nn::Rng& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-2.0, 2.0);
    return v;
}

}  // namespace

TEST_CASE("dot: scalar reference basics") {
    const float a[] = {1.0f, 2.0f, 3.0f};
    const float b[] = {4.0f, -5.0f, 6.0f};
    CHECK(kernels::detail::dot_scalar(a, b, 3) == doctest::Approx(12.0));
    CHECK(kernels::detail::dot_scalar(a, b, 0) == 0.0);
}

TEST_CASE("dot/axpy: active variant matches scalar reference on random vectors") {
    nn::Rng rng(7);
    for (std::size_t n : {1ul, 3ul, 7ul, 8ul, 15ul, 64ul, 257ul, 1000ul, 4096ul}) {
        const auto a32 = random_f32(n, rng);
        const auto b32 = random_f32(n, rng);
        const double ref32 = kernels::detail::dot_scalar(a32.data(), b32.data(), n);
        const double got32 = kernels::dot(a32.data(), b32.data(), n);
        CHECK(got32 == doctest::Approx(ref32).epsilon(1e-12));

        const auto a64 = random_f64(n, rng);
        const auto b64 = random_f64(n, rng);
        const double ref64 = kernels::detail::dot_scalar(a64.data(), b64.data(), n);
        const double got64 = kernels::dot(a64.data(), b64.data(), n);
        CHECK(got64 == doctest::Approx(ref64).epsilon(1e-12));

        auto y_ref = random_f32(n, rng);
        auto y_simd = y_ref;
        const auto x32 = random_f32(n, rng);
        kernels::detail::axpy_scalar(y_ref.data(), 0.37f, x32.data(), n);
        kernels::axpy(y_simd.data(), 0.37f, x32.data(), n);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(y_simd[i] == doctest::Approx(y_ref[i]).epsilon(1e-6));

        auto z_ref = random_f64(n, rng);
        auto z_simd = z_ref;
        const auto x64 = random_f64(n, rng);
        kernels::detail::axpy_scalar(z_ref.data(), -1.13, x64.data(), n);
        kernels::axpy(z_simd.data(), -1.13, x64.data(), n);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(z_simd[i] == doctest::Approx(z_ref[i]).epsilon(1e-12));
    }
}

#if defined(__x86_64__) || defined(__i386__)
TEST_CASE("dot/axpy: avx2 variant equivalence when the cpu supports it") {
    if (!kernels::detail::cpu_has_avx2()) return;
    nn::Rng rng(11);
    for (std::size_t n : {5ul, 8ul, 33ul, 512ul, 2049ul}) {
        const auto a = random_f32(n, rng);
        const auto b = random_f32(n, rng);
        CHECK(kernels::detail::dot_avx2(a.data(), b.data(), n) ==
              doctest::Approx(kernels::detail::dot_scalar(a.data(), b.data(), n)).epsilon(1e-12));

        const auto c = random_f64(n, rng);
        const auto d = random_f64(n, rng);
        CHECK(kernels::detail::dot_avx2(c.data(), d.data(), n) ==
              doctest::Approx(kernels::detail::dot_scalar(c.data(), d.data(), n)).epsilon(1e-12));

        auto y_ref = random_f32(n, rng);
        auto y_avx = y_ref;
        kernels::detail::axpy_scalar(y_ref.data(), 2.5f, a.data(), n);
        kernels::detail::axpy_avx2(y_avx.data(), 2.5f, a.data(), n);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(y_avx[i] == doctest::Approx(y_ref[i]).epsilon(1e-6));
    }
}
#endif

TEST_CASE("dot: double accumulation survives cancellation-heavy input") {
    // 1e8 and -1e8 cancel exactly in double; a float accumulator would have
    // already absorbed the +1 into 1e8 and returned 0
    const std::size_t n = 64;
    std::vector<float> a(n, 0.0f), b(n, 1.0f);
    a[0] = 1e8f;
    a[17] = -1e8f;
    a[40] = 1.0f;
    CHECK(kernels::dot(a.data(), b.data(), n) == 1.0);
}

TEST_CASE("active_level reports a valid variant") {
    const auto level = kernels::active_level();
    const std::string name = kernels::level_name(level);
    CHECK((name == "scalar" || name == "avx2" || name == "neon"));
}
