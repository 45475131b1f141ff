#pragma once
// Deterministic random primitives. std::mt19937_64 has a fully specified
// output sequence, and all distribution shaping is done by hand, so a given
// seed produces bit-identical draws on every standard library.

#include <cmath>
#include <cstdint>
#include <random>

namespace cogcap {

// SplitMix64 finalizer. Used to derive independent stream seeds from a
// master seed and a stream index without correlated low bits.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller; the sine companion is discarded to keep the draw count
    // per call fixed.
    double normal(double mean, double stddev) {
        const double u1 = 1.0 - uniform(); // (0, 1], keeps the log finite
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * radius * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Exponential with the given mean.
    double exponential(double mean) {
        return -mean * std::log(1.0 - uniform());
    }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

} // namespace cogcap
