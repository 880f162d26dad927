#pragma once

#include <cstdint>

namespace mcduct {

/// splitmix64: tiny, fast, deterministic across platforms. Used for sampling,
/// shuffles, initialization, and dropout masks; statistical quality is ample
/// for those jobs.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    /// Deterministic derived seed for substream k.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t k) {
        Rng r(seed ^ (0xA0761D6478BD642FULL * (k + 1)));
        return r.next_u64();
    }

private:
    std::uint64_t state_;
};

}  // namespace mcduct
