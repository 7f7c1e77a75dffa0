#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rbmcal {

// 64-bit avalanche mix (splitmix64 finalizer).
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    return mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

// Collision-resistant seed for a named substream. All batch operations take a
// seed (not a shared engine) so chains/cells can run in any order or thread
// layout and still produce identical output.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t substream = 0) {
    return hash_combine(hash_combine(master, stream), substream);
}

// mt19937_64 with hand-rolled distributions. The engine is bit-exact per the
// standard; std:: distributions are not, so we do not use them.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed ^ 0x5851f42d4c957f2dULL)) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1)
    double uniform01() { return double(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform01() < p; }

    std::uint64_t below(std::uint64_t bound) { return engine_() % bound; }

    // Box-Muller, cosine branch only; two uniforms per draw, no cached state.
    double normal(double mean, double sigma) {
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log1p(-u1));
        return mean + sigma * r * std::cos(6.283185307179586476925286766559 * u2);
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace rbmcal
