#pragma once
// Energy-detector model. The detector averages |y(i)|^2 over the NB complex
// samples collected during the sensing window and declares the channel busy
// when the average exceeds the threshold. Under circularly symmetric
// Gaussian noise (variance noise_var) and owner signal (variance
// primary_interference_var) the false-alarm and detection probabilities are
// chi-square tails, expressed through the regularized lower gamma function.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

#include "cogcap/rng.hpp"
#include "cogcap/special_functions.hpp"

namespace cogcap {

struct SensingConfig {
    double threshold = 1.7;                 // detector energy threshold
    double sense_duration = 0.026;          // seconds spent sensing per slot
    double bandwidth = 1000.0;              // Hz
    double noise_var = 1.0;                 // per-sample noise power
    double primary_interference_var = 1.0;  // added per-sample power when the owner transmits
};

struct SensingOperatingPoint {
    double p_f = 0.0;
    double p_d = 0.0;
};

// Number of complex samples in the sensing window. The analytic tails are
// only defined for an integer count, so fractional products are rounded to
// the nearest integer; round_error reports how far the product was from it.
inline int sample_count(const SensingConfig& c, double* round_error = nullptr) {
    const double nb = c.sense_duration * c.bandwidth;
    const double rounded = std::max(1.0, std::round(nb));
    if (round_error) *round_error = nb - rounded;
    return static_cast<int>(rounded);
}

inline void validate(const SensingConfig& c) {
    if (!(c.threshold >= 0.0))
        throw std::invalid_argument("sensing threshold must be nonnegative");
    if (!(c.sense_duration > 0.0))
        throw std::invalid_argument("sense_duration must be positive");
    if (!(c.bandwidth > 0.0))
        throw std::invalid_argument("bandwidth must be positive");
    if (!(c.noise_var > 0.0))
        throw std::invalid_argument("noise_var must be positive");
    if (!(c.primary_interference_var >= 0.0))
        throw std::invalid_argument("primary_interference_var must be nonnegative");
}

// Pr(declare busy | channel idle) = 1 - P(NB*lambda/noise_var, NB).
inline double false_alarm_probability(const SensingConfig& c) {
    validate(c);
    const int nb = sample_count(c);
    return 1.0 - regularized_lower_gamma(nb * c.threshold / c.noise_var, nb);
}

// Pr(declare busy | channel busy): same tail with the owner's power added.
inline double detection_probability(const SensingConfig& c) {
    validate(c);
    const int nb = sample_count(c);
    const double total_var = c.noise_var + c.primary_interference_var;
    return 1.0 - regularized_lower_gamma(nb * c.threshold / total_var, nb);
}

// Recovers (noise_var, primary_interference_var) from a target operating
// point. Both tails are strictly monotone in their variance, so each
// reduces to one inversion of the gamma function:
//   p_f = 1 - P(NB*lambda/noise_var, NB)        -> noise_var
//   p_d = 1 - P(NB*lambda/total_var, NB)        -> total_var
inline std::pair<double, double> invert_operating_point(const SensingOperatingPoint& target,
                                                        double threshold,
                                                        double sense_duration,
                                                        double bandwidth) {
    if (!(target.p_f > 0.0 && target.p_f < 1.0) || !(target.p_d > 0.0 && target.p_d < 1.0))
        throw std::invalid_argument("invert_operating_point: targets must lie in (0, 1)");
    if (!(target.p_d > target.p_f))
        throw std::invalid_argument("invert_operating_point: p_d must exceed p_f "
                                    "(busy statistics dominate idle statistics)");
    if (!(threshold > 0.0))
        throw std::invalid_argument("invert_operating_point: threshold must be positive");

    SensingConfig probe;
    probe.threshold = threshold;
    probe.sense_duration = sense_duration;
    probe.bandwidth = bandwidth;
    const int nb = sample_count(probe);

    const double x_f = inverse_lower_gamma(1.0 - target.p_f, nb);
    const double x_d = inverse_lower_gamma(1.0 - target.p_d, nb);
    const double noise_var = nb * threshold / x_f;
    const double total_var = nb * threshold / x_d;
    const double interference_var = total_var - noise_var;
    if (!(interference_var > 0.0))
        throw std::runtime_error("invert_operating_point: inversion produced "
                                 "nonpositive interference power");
    return {noise_var, interference_var};
}

// Sample-level detector: draws the NB complex Gaussian samples, forms the
// average energy and compares against the threshold. Returns true for
// "busy". Each complex sample is two independent real Gaussians carrying
// half the per-sample variance. Deterministic for a given seed.
inline bool simulate_detection(const SensingConfig& c, bool primary_active, std::uint64_t rng_seed) {
    validate(c);
    Rng rng(rng_seed);
    const int nb = sample_count(c);
    const double var = c.noise_var + (primary_active ? c.primary_interference_var : 0.0);
    const double component_sd = std::sqrt(var / 2.0);
    double energy = 0.0;
    for (int i = 0; i < nb; ++i) {
        const double re = rng.normal(0.0, component_sd);
        const double im = rng.normal(0.0, component_sd);
        energy += re * re + im * im;
    }
    return energy / nb > c.threshold;
}

// In-place detector reusing a caller-owned stream; used by the slot
// simulator's validation mode where one stream drives the whole trace.
inline bool simulate_detection(const SensingConfig& c, bool primary_active, Rng& rng) {
    const int nb = sample_count(c);
    const double var = c.noise_var + (primary_active ? c.primary_interference_var : 0.0);
    const double component_sd = std::sqrt(var / 2.0);
    double energy = 0.0;
    for (int i = 0; i < nb; ++i) {
        const double re = rng.normal(0.0, component_sd);
        const double im = rng.normal(0.0, component_sd);
        energy += re * re + im * im;
    }
    return energy / nb > c.threshold;
}

} // namespace cogcap
