#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace lclfqa {

/// Engine used for every seeded draw. mt19937_64 output is fixed by the standard,
/// and the helpers below avoid the implementation-defined std distributions, so
/// seeded runs reproduce across standard libraries.
using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits of one engine output.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, bound); bound must be positive. Rejection sampling, no modulo bias.
inline std::size_t uniform_below(Rng& rng, std::size_t bound) {
    const std::uint64_t n = bound;
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
    std::uint64_t x = rng();
    while (x >= limit) x = rng();
    return static_cast<std::size_t>(x % n);
}

}  // namespace lclfqa
