#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sfcorch {

/// Seeded RNG with explicit transforms so the draw sequence is fully pinned
/// by this code (stdlib distributions are not used).
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    int uniform_int(int n) { return static_cast<int>(eng_() % static_cast<uint64_t>(n)); }

    /// Standard normal via Box-Muller (no cached spare).
    double gauss() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double gauss(double mean, double stddev) { return mean + stddev * gauss(); }

    /// Split off an independent stream (for per-link fading tables etc.).
    Rng fork(uint64_t stream) { return Rng(eng_() ^ (stream * 0x9e3779b97f4a7c15ull)); }

private:
    std::mt19937_64 eng_;
};

}  // namespace sfcorch
