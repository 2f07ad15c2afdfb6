#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace spil {

/// Seedable counter-based random stream (PCG32 core). Identical
/// (seed, stream_id) pairs produce identical draw sequences; distinct
/// stream ids select distinct PCG increments and are independent.
/// Streams must not be shared across workers; derive one per worker.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id) {
        state_ = 0u;
        inc_ = (stream_id << 1u) | 1u;
        next_u32();
        state_ += seed;
        next_u32();
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    /// Independent substream keyed by k. Children of distinct keys (and of
    /// distinct parents) do not collide in practice.
    RandomStream derive(std::uint64_t k) const {
        return RandomStream(seed_, splitmix64(stream_id_ ^ splitmix64(k + 0x9E3779B97F4A7C15ull)));
    }

    std::uint32_t next_u32() {
        std::uint64_t old = state_;
        state_ = old * 6364136223846793005ull + inc_;
        std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    std::uint64_t next_u64() {
        std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    /// Unbiased integer in [0, n). n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n) {
        std::uint64_t threshold = (0ull - n) % n;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    /// Standard normal draw (Box-Muller, pairs cached).
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        // u1 in (0, 1] so log(u1) is finite.
        double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double t = 2.0 * std::numbers::pi * u2;
        cached_ = r * std::sin(t);
        has_cached_ = true;
        return r * std::cos(t);
    }

private:
    static std::uint64_t splitmix64(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

    std::uint64_t state_ = 0;
    std::uint64_t inc_ = 1;
    std::uint64_t seed_ = 0;
    std::uint64_t stream_id_ = 0;
    bool has_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace spil
