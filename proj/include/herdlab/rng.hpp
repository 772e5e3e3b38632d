#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace herdlab {

/// 64-bit finalizer (splitmix64 mixing function).
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

/// Counter-based random stream (splitmix64). A stream is fully determined by
/// its 64-bit key, so independent streams can be handed to parallel workers
/// without any shared state.
class RngStream {
public:
    explicit RngStream(std::uint64_t key) : state_(key) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound), bound >= 1. Multiply-shift reduction,
    /// rejecting the biased low fringe so the result is exactly uniform.
    std::uint64_t next_below(std::uint64_t bound) {
        std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            std::uint64_t r = next_u64();
            __uint128_t m = static_cast<__uint128_t>(r) * bound;
            if (static_cast<std::uint64_t>(m) >= threshold)
                return static_cast<std::uint64_t>(m >> 64);
        }
    }

    /// Standard normal via Box-Muller. Consumes two uniforms, caches the
    /// second variate so consumption stays deterministic per call pair.
    double next_gaussian() {
        if (has_cache_) {
            has_cache_ = false;
            return cache_;
        }
        double u1 = next_double();
        double u2 = next_double();
        // Guard against log(0).
        while (u1 <= 0.0) u1 = next_double();
        double rad = std::sqrt(-2.0 * std::log(u1));
        double ang = 2.0 * std::numbers::pi * u2;
        cache_ = rad * std::sin(ang);
        has_cache_ = true;
        return rad * std::cos(ang);
    }

private:
    std::uint64_t state_;
    double cache_ = 0.0;
    bool has_cache_ = false;
};

/// Stream-key domains. Every random decision in the simulator draws from a
/// stream keyed by (seed, domain, day, index), so results do not depend on
/// scheduling or thread count.
enum class RngDomain : std::uint64_t {
    population = 1, // agent -> stock assignment at init
    stock = 2,      // per (day, stock): I-group dispersion over S-groups
    sector = 3,     // per (day, sector): S-group dispersion over M-groups
    market = 4,     // per day: M-group trading decisions
    fixture = 5,    // synthetic panel generation
};

/// Derives a substream key by chained mixing. Documented derivation:
/// key = mix64(mix64(mix64(mix64(seed) ^ domain) ^ a) ^ b).
inline std::uint64_t stream_key(std::uint64_t seed, RngDomain domain,
                                std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ static_cast<std::uint64_t>(domain));
    h = mix64(h ^ a);
    h = mix64(h ^ b);
    return h;
}

inline RngStream substream(std::uint64_t seed, RngDomain domain,
                           std::uint64_t a = 0, std::uint64_t b = 0) {
    return RngStream(stream_key(seed, domain, a, b));
}

} // namespace herdlab
