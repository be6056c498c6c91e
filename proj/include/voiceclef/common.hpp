#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#define VOICECLEF_VERSION "1.0.0"

namespace voiceclef {

/// Base class for every error this library throws.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Runs fn(i) for i in [0, n). Parallelizes over worker threads unless
/// VOICECLEF_THREADS caps the count (VOICECLEF_THREADS=1 forces serial).
/// Iterations must be independent; results written by index stay deterministic.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Resolved worker-thread count (hardware concurrency capped by VOICECLEF_THREADS).
unsigned worker_threads();

/// FNV-1a 64-bit over a byte string. Used for config digests and derived seeds.
std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t seed = 14695981039346656037ull);

}  // namespace voiceclef
