#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace crgimsc {

// All randomness in the library flows through these helpers so that a fixed
// seed reproduces the exact same stream on every platform; the distribution
// adapters in <random> do not give that guarantee.
using Rng = std::mt19937_64;

// uniform double in [0, 1)
inline double uniform_real(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_real(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_real(rng);
}

// unbiased integer in [0, n), n > 0
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    std::uint64_t x = rng();
    while (x >= limit) x = rng();
    return x % n;
}

// standard normal via Box-Muller
inline double normal(Rng& rng) {
    const double u1 = 1.0 - uniform_real(rng); // (0, 1]
    const double u2 = uniform_real(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// partial Fisher-Yates: a uniform sample of `count` indices from [0, n)
// without replacement
inline std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t count) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = 0; i < count && i + 1 < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, n - i));
        std::swap(perm[i], perm[j]);
    }
    perm.resize(count);
    return perm;
}

} // namespace crgimsc
