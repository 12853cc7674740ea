#pragma once

#include <cstdint>
#include <random>

namespace peakrl {

/// Seeded random stream. Draws are derived from the raw 64-bit engine output
/// so a seed reproduces the same sequence bit for bit on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed), seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Requires n > 0.
    std::size_t index(std::size_t n) {
        // Lemire-style rejection keeps the draw unbiased.
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return static_cast<std::size_t>(x % bound);
    }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
};

/// SplitMix64 finalizer; replication r of master seed m uses
/// derive_seed(m, r) = splitmix64(m + (r + 1) * 0x9E3779B97F4A7C15).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication) {
    return splitmix64(master + (replication + 1) * 0x9E3779B97F4A7C15ULL);
}

} // namespace peakrl
