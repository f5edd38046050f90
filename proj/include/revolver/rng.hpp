#pragma once

#include <cstdint>
#include <cmath>

namespace revolver {

// Counter-based seed derivation: every random stream in the artifact is
// derived from one 64-bit master seed plus a (subsystem, counter) pair, so
// identical configs reproduce identical runs.
namespace rng_detail {
inline uint64_t splitmix64(uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace rng_detail

enum class RngStreamId : uint64_t {
    EnvReset = 1,
    Exploration = 2,
    BufferSample = 3,
    TargetNoise = 4,
    NetInit = 5,
    BetaSample = 6,
    TheoryTrial = 7,
    Eval = 8,
    Misc = 9,
};

inline uint64_t derive_seed(uint64_t master, RngStreamId stream, uint64_t counter) {
    uint64_t s = master;
    (void)rng_detail::splitmix64(s);
    s ^= static_cast<uint64_t>(stream) * 0xd1342543de82ef95ULL;
    (void)rng_detail::splitmix64(s);
    s ^= counter * 0xaf251af3b0f025b5ULL;
    return rng_detail::splitmix64(s);
}

// Small deterministic generator (splitmix64 core). Distributions are
// hand-rolled so output does not depend on the standard library's
// implementation-defined distribution algorithms.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed), has_cached_normal_(false), cached_normal_(0.0) {}
    Rng(uint64_t master, RngStreamId stream, uint64_t counter)
        : Rng(derive_seed(master, stream, counter)) {}

    uint64_t next_u64() { return rng_detail::splitmix64(state_); }

    // Uniform on [0, 1).
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Integer uniform on [0, n).
    uint64_t below(uint64_t n) {
        // Rejection-free modulo is fine here; n is always tiny relative to 2^64.
        return next_u64() % n;
    }

    // Standard normal, Box-Muller with one cached value.
    double normal() {
        if (has_cached_normal_) {
            has_cached_normal_ = false;
            return cached_normal_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 1e-300) u1 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_normal_ = r * std::sin(a);
        has_cached_normal_ = true;
        return r * std::cos(a);
    }

private:
    uint64_t state_;
    bool has_cached_normal_;
    double cached_normal_;
};

}  // namespace revolver
