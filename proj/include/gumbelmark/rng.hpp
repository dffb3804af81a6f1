#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace gumbelmark {

// Seeded source for routing/skip coins and unwatermarked draws. Kept apart
// from the PRF so experiments are reproducible without touching the key.
// Conversions are done by hand so streams are identical across standard
// libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

    void seed(std::uint64_t s) { eng_.seed(s); }
    std::uint64_t next_u64() { return eng_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    // Uniform on (0, 1).
    double uniform_open() { return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53; }
    bool bernoulli(double p) { return uniform() < p; }

    // Index drawn proportionally to weights (which need not sum to 1).
    std::size_t categorical(std::span<const double> weights);

    double exponential() { return -std::log(uniform_open()); }
    double normal();

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// SplitMix64 finalizer; derives independent per-trial seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace gumbelmark
