#pragma once
// Shared parameter set for the two-tier link adaptation model: a secondary
// link that senses the channel each slot and transmits at a conservative
// (rate_low, power_low) tier when the owner looks busy, or an aggressive
// (rate_high, power_high) tier when it looks idle.
//
// Everything here is linear scale. dB values are converted at the config
// boundary and never appear in the math.

#include <cmath>
#include <stdexcept>
#include <string>

#include "cogcap/rng.hpp"

namespace cogcap {

// Outage-threshold convention for the fading gain z. HighRateApprox drops
// the -1 from the exact Shannon inversion, i.e. alpha = 2^(r/B)/SNR instead
// of (2^(r/B)-1)/SNR. It is the default because the reference curves this
// library reproduces were generated with that form; Exact is the
// self-consistent alternative.
enum class ThresholdMode { HighRateApprox, Exact };

inline const char* to_string(ThresholdMode mode) {
    return mode == ThresholdMode::HighRateApprox ? "paper" : "exact";
}

inline ThresholdMode parse_threshold_mode(const std::string& text) {
    if (text == "paper") return ThresholdMode::HighRateApprox;
    if (text == "exact") return ThresholdMode::Exact;
    throw std::invalid_argument("threshold_mode must be 'paper' or 'exact', got '" + text + "'");
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

struct SystemParams {
    double rho = 0.7;              // prior probability the owner occupies a slot
    double theta = 0.02;           // QoS exponent, 1/bit
    double slot_seconds = 0.1;     // frame duration T
    double sense_seconds = 0.026;  // sensing window N at the head of each frame
    double bandwidth_hz = 1000.0;  // B

    double rate_low = 1000.0;      // bits/sec, used when the slot is sensed busy
    double rate_high = 10000.0;    // bits/sec, used when the slot is sensed idle
    double power_low = 1.0;        // transmit power paired with rate_low
    double power_high = 2.0;       // transmit power paired with rate_high

    // Received SNR (linear) at the secondary receiver for each combination of
    // true channel occupancy and chosen tier. Busy-channel values include the
    // owner's interference, hence the much lower figures.
    double snr_busy_low = db_to_linear(6.9);
    double snr_busy_high = db_to_linear(10.0);
    double snr_idle_low = db_to_linear(30.7);
    double snr_idle_high = db_to_linear(40.0);

    // Probability the owner's receiver reports a failed slot (NACK) given the
    // secondary interfered at the low / high power tier.
    double pr_nack_low = 0.3;
    double pr_nack_high = 0.9;

    double fading_mean = 1.0;      // mean of the channel power gain z

    double p_f = 0.0012;           // sensing false-alarm probability
    double p_d = 0.7705;           // sensing detection probability

    ThresholdMode threshold_mode = ThresholdMode::HighRateApprox;
};

// Throws std::invalid_argument naming the offending field. Equality is
// allowed between the two tiers so that degenerate configurations
// (rate_low = rate_high, power_low = power_high) remain constructible for
// limit checks.
inline void validate(const SystemParams& p) {
    auto probability = [](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
    };
    probability(p.rho, "rho");
    probability(p.p_f, "p_f");
    probability(p.p_d, "p_d");
    probability(p.pr_nack_low, "pr_nack_low");
    probability(p.pr_nack_high, "pr_nack_high");
    if (p.pr_nack_low > p.pr_nack_high)
        throw std::invalid_argument("pr_nack_low must not exceed pr_nack_high");
    if (!(p.theta > 0.0))
        throw std::invalid_argument("theta must be positive");
    if (!(p.slot_seconds > 0.0))
        throw std::invalid_argument("slot_seconds must be positive");
    if (!(p.sense_seconds > 0.0 && p.sense_seconds < p.slot_seconds))
        throw std::invalid_argument("sense_seconds must lie in (0, slot_seconds)");
    if (!(p.bandwidth_hz > 0.0))
        throw std::invalid_argument("bandwidth_hz must be positive");
    if (!(p.rate_low >= 0.0) || !(p.rate_high >= 0.0))
        throw std::invalid_argument("rates must be nonnegative");
    if (p.rate_low > p.rate_high)
        throw std::invalid_argument("rate_low must not exceed rate_high");
    if (!(p.power_low >= 0.0) || p.power_low > p.power_high)
        throw std::invalid_argument("powers must satisfy 0 <= power_low <= power_high");
    if (!(p.snr_busy_low > 0.0) || !(p.snr_busy_high > 0.0) ||
        !(p.snr_idle_low > 0.0) || !(p.snr_idle_high > 0.0))
        throw std::invalid_argument("SNR values must be positive");
    if (!(p.fading_mean > 0.0))
        throw std::invalid_argument("fading_mean must be positive");
}

// Channel power gain distribution. The chain builders and the simulator are
// templated on this concept: tail(alpha) = Pr(z > alpha) and sample(rng)
// draws one slot's gain. Exponential z (Rayleigh envelope) is the shipped
// implementation.
struct ExponentialFading {
    double mean = 1.0;

    double tail(double alpha) const {
        if (alpha < 0.0) return 1.0;
        return std::exp(-alpha / mean);
    }

    double sample(Rng& rng) const { return rng.exponential(mean); }
};

} // namespace cogcap
