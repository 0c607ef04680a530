#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace davide::rng {

/* One root seed per run; every consumer derives its own stream from a fixed
 * substream index so adding a consumer never disturbs the others.
 * Value mapping is done by hand: stdlib distributions are not guaranteed to
 * produce the same sequence across library versions. */

enum Substream : std::uint64_t {
    kArrivals = 1,
    kRuntimes = 2,
    kPowers = 3,
    kNodes = 4,
    kUsers = 5,
    kApps = 6,
    kNoise = 7,
    kPhases = 8,
};

inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t substream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(substream), static_cast<std::uint32_t>(substream >> 32)};
    return std::mt19937_64{seq};
}

// Uniform in [0, 1), 53-bit resolution.
inline double uniform01(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform_real(std::mt19937_64& g, double lo, double hi) {
    return lo + (hi - lo) * uniform01(g);
}

// Uniform integer in [lo, hi], rejection-sampled to kill modulo bias.
inline std::int64_t uniform_int(std::mt19937_64& g, std::int64_t lo, std::int64_t hi) {
    const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    if (range == 0) return static_cast<std::int64_t>(g());  // full 64-bit span
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
    std::uint64_t v;
    do {
        v = g();
    } while (v >= limit);
    return lo + static_cast<std::int64_t>(v % range);
}

inline double exponential(std::mt19937_64& g, double rate) {
    return -std::log1p(-uniform01(g)) / rate;
}

// FNV-1a, used for content hashes and keyed synthetic draws.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace davide::rng
