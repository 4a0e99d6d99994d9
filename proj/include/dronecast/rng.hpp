// SPDX-License-Identifier: Apache-2.0
//
// Deterministic random number streams. Every consumer derives its own stream
// from the master seed and a stable label, so adding an entity to a scenario
// never perturbs the draws seen by the others. The generator is xoshiro256**
// seeded through splitmix64; distributions are implemented here rather than
// taken from <random> so that sequences are identical across standard library
// implementations.

#pragma once

#include <cstdint>
#include <cmath>
#include <string_view>

namespace dronecast {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = detail::splitmix64(sm);
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

    // Uniform in [0, 1).
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    // Box-Muller; draws two uniforms per call, no cached spare.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(kTau * u2);
    }

    double rayleigh(double sigma) {
        double u = uniform01();
        while (u >= 1.0) u = uniform01();
        return sigma * std::sqrt(-2.0 * std::log(1.0 - u));
    }

    // Knuth product method below lambda=30, normal approximation above.
    int poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        if (lambda < 30.0) {
            const double limit = std::exp(-lambda);
            double prod = uniform01();
            int n = 0;
            while (prod > limit) {
                prod *= uniform01();
                ++n;
            }
            return n;
        }
        const double x = std::round(normal(lambda, std::sqrt(lambda)));
        return x < 0.0 ? 0 : static_cast<int>(x);
    }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

private:
    static constexpr double kTau = 6.28318530717958647692;

    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4] = {};
};

// Stream seed derived from the master seed and a stable label.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
    std::uint64_t s = master ^ detail::fnv1a64(label);
    return detail::splitmix64(s);
}

inline Rng derive_rng(std::uint64_t master, std::string_view label) {
    return Rng(derive_seed(master, label));
}

}  // namespace dronecast
