#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "pcnlab/core.hpp"

namespace pcnlab {

// Self-contained generator (xoshiro256** seeded via splitmix64) so that
// runs are bit-reproducible across standard libraries and platforms.
// std::uniform_*_distribution is implementation-defined and must not be
// used anywhere results are persisted.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Collapses (root seed, stream tags) into one substream seed. Purpose
// tags keep independent draws independent: adding a strategy or metric
// must not perturb topology sampling.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = root;
    std::uint64_t h = splitmix64(s);
    s ^= a * 0x9e3779b97f4a7c15ULL;
    h ^= splitmix64(s);
    s ^= b * 0xc2b2ae3d27d4eb4fULL;
    h ^= splitmix64(s);
    s ^= c * 0x165667b19e3779f9ULL;
    h ^= splitmix64(s);
    return h;
}

namespace stream {
// Purpose tags for derive_seed.
inline constexpr std::uint64_t kTopology = 1;
inline constexpr std::uint64_t kSybil = 2;
inline constexpr std::uint64_t kProbe = 3;
inline constexpr std::uint64_t kRandomPlan = 4;
inline constexpr std::uint64_t kRegen = 5;
}  // namespace stream

class Rng {
public:
    explicit Rng(std::uint64_t seed = 1) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Unbiased integer in [0, n) (rejection sampling).
    std::uint64_t bounded(std::uint64_t n) {
        if (n == 0) throw InvalidConfig("Rng::bounded: n must be positive");
        const std::uint64_t threshold = -n % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Inclusive integer range.
    Satoshi uniform_int(Satoshi lo, Satoshi hi) {
        if (lo > hi) throw InvalidConfig("Rng::uniform_int: empty range");
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<Satoshi>(span == 0 ? next_u64() : bounded(span));
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    double exponential(double mean) {
        // 1 - u avoids log(0).
        return -mean * std::log(1.0 - uniform01());
    }

    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(bounded(static_cast<std::uint64_t>(n)));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4]{};
};

}  // namespace pcnlab
