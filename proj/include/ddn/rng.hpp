#pragma once

#include <cmath>
#include <cstdint>

namespace ddn {

/// Seedable xoshiro256++ generator with splitmix64 state expansion.
///
/// Everything random in this library flows through this generator so that a
/// seed fully determines datasets, parameter initialization, and training
/// trajectories on every platform. Normal variates come from a Box-Muller
/// transform of the uniform output, not from std::normal_distribution, whose
/// algorithm is implementation-defined.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
    }

    /// Deterministically derive a sub-stream seed (data/init/train/... streams).
    static uint64_t derive_seed(uint64_t master, uint64_t stream) {
        uint64_t x = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
        return splitmix64(x);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, n), rejection-sampled.
    uint64_t below(uint64_t n) {
        const uint64_t threshold = (0 - n) % n;
        uint64_t r = next_u64();
        while (r < threshold) r = next_u64();
        return r % n;
    }

    /// Standard normal via Box-Muller; the paired variate is cached.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        // uniform() can return 0; shift into (0, 1] for the log.
        double u1 = 1.0 - uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    float normal_f() { return static_cast<float>(normal()); }

private:
    static uint64_t splitmix64(uint64_t& x) {
        uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t state_[4];
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace ddn
