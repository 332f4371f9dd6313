#pragma once

/**
 * Seeded counter-based PRNG (splitmix64 core) for deterministic,
 * replayable decode sessions. Identical seed + identical call sequence
 * yields bit-identical outputs on every platform we target.
 *
 * RandomSource is the minimal interface the verification and drafting
 * paths consume; tests substitute scripted sources to steer individual
 * probability branches.
 */

#include <cmath>
#include <cstdint>

namespace specdec {

struct RandomSource {
    virtual ~RandomSource() = default;

    /// Uniform double in [0, 1), 53-bit resolution.
    virtual double uniform01() = 0;
};

class Rng final : public RandomSource {
public:
    explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    double uniform01() override {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in (0, 1]; safe as a log() argument.
    double uniform_pos() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller.
    double normal() {
        const double u1 = uniform_pos();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::uint64_t state_;
};

/// splitmix64 finalizer, used for seed derivation and context hashing.
inline std::uint64_t mix_u64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Deterministic seed mixing for (cell, trial) grids and salted streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t h = base;
    h = mix_u64(h ^ (0x9E3779B97F4A7C15ULL + a * 0xBF58476D1CE4E5B9ULL));
    h = mix_u64(h ^ (0xC2B2AE3D27D4EB4FULL + b * 0x94D049BB133111EBULL));
    return h;
}

} // namespace specdec
