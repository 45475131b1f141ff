#pragma once
// Slot-level Markov service models for the secondary link.
//
// Each slot falls into one of four sensing outcomes: the channel is busy and
// detected busy (BB), busy but missed (MD), idle but flagged busy (FA), or
// idle and correctly identified (II). Crossed with the fading ON/OFF outcome
// this gives the eight "normal" states 1..8 (odd = ON, even = OFF). Failed
// owner slots trigger exactly one retransmission, which the two systems
// handle differently:
//
//   NoFeedback (12 states): the secondary is unaware of the retransmission
//   and senses as usual. States 9/10 cover a detected retransmission slot
//   (low tier), states 11/12 a missed one (high tier).
//
//   Feedback (10 states): the secondary overhears the NACK, skips sensing in
//   the next slot and transmits the low tier across the whole slot. States
//   9/10 are that NACK-followup slot (ON/OFF).
//
// Every row that does not follow a NACK distributes over states 1..8 with
// the same base probabilities p_1..p_8; only the explicitly described rows
// 1..4 add NACK-branch columns. Rows for states 5..8 and the retransmission
// states reuse the base pattern, which also encodes the retransmit-once
// rule: a retransmission slot never spawns another NACK.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "cogcap/matrix.hpp"
#include "cogcap/params.hpp"
#include "cogcap/quadratic.hpp"

namespace cogcap {

enum class SensingOutcome { BB, MD, FA, II, RetxBB, RetxMD, NackSlot };
enum class ChannelState { On, Off };

inline const char* to_string(SensingOutcome o) {
    switch (o) {
        case SensingOutcome::BB: return "BB";
        case SensingOutcome::MD: return "MD";
        case SensingOutcome::FA: return "FA";
        case SensingOutcome::II: return "II";
        case SensingOutcome::RetxBB: return "RetxBB";
        case SensingOutcome::RetxMD: return "RetxMD";
        default: return "NackSlot";
    }
}

struct StateDescriptor {
    std::size_t index = 0; // 1-based, matching the transition matrix order
    SensingOutcome sensing_outcome = SensingOutcome::BB;
    ChannelState channel = ChannelState::Off;
    double tx_power = 0.0;
    double tx_rate = 0.0;       // bits/sec attempted in the slot
    double effective_bits = 0.0; // bits delivered per frame when the slot is ON
};

struct MarkovModel {
    std::vector<StateDescriptor> states;
    Matrix R;
    SystemKind tag = SystemKind::NoFeedback;
    // Feedback only: NACK-followup bits counted as rate*(T-N) instead of
    // rate*T, matching the closed-form coefficient convention.
    bool appendix_k1 = false;
    double slot_seconds = 0.0;
    double bandwidth_hz = 0.0;

    // Diagonal of the MGF matrix: phi_i = e^(-theta * effective_bits_i).
    std::vector<double> phi(double theta) const {
        std::vector<double> d(states.size());
        for (std::size_t i = 0; i < states.size(); ++i)
            d[i] = std::exp(-theta * states[i].effective_bits);
        return d;
    }
};

// Outage threshold on the fading gain for tier/occupancy combination l:
// level 1 = busy+low, 2 = busy+high, 3 = idle+low, 4 = idle+high.
inline double on_threshold(int level, const SystemParams& p) {
    double rate = 0.0;
    double snr = 0.0;
    switch (level) {
        case 1: rate = p.rate_low;  snr = p.snr_busy_low;  break;
        case 2: rate = p.rate_high; snr = p.snr_busy_high; break;
        case 3: rate = p.rate_low;  snr = p.snr_idle_low;  break;
        case 4: rate = p.rate_high; snr = p.snr_idle_high; break;
        default: throw std::invalid_argument("on_threshold: level must be 1..4");
    }
    const double pow2 = std::exp2(rate / p.bandwidth_hz);
    const double numerator = p.threshold_mode == ThresholdMode::Exact ? pow2 - 1.0 : pow2;
    return numerator / snr;
}

// Pr(z > alpha_level) under the configured fading law.
template <class Fading>
double on_probability(int level, const SystemParams& p, const Fading& fading) {
    return fading.tail(on_threshold(level, p));
}

inline double on_probability(int level, const SystemParams& p) {
    return on_probability(level, p, ExponentialFading{p.fading_mean});
}

// Entry probabilities of the eight normal states. OFF entries are computed
// as exact complements of the ON entries so the eight sum to 1 at machine
// precision.
template <class Fading>
std::array<double, 8> base_probabilities(const SystemParams& p, const Fading& fading) {
    const double on1 = on_probability(1, p, fading);
    const double on2 = on_probability(2, p, fading);
    const double on3 = on_probability(3, p, fading);
    const double on4 = on_probability(4, p, fading);
    return {
        p.rho * p.p_d * on1,
        p.rho * p.p_d * (1.0 - on1),
        p.rho * (1.0 - p.p_d) * on2,
        p.rho * (1.0 - p.p_d) * (1.0 - on2),
        (1.0 - p.rho) * p.p_f * on3,
        (1.0 - p.rho) * p.p_f * (1.0 - on3),
        (1.0 - p.rho) * (1.0 - p.p_f) * on4,
        (1.0 - p.rho) * (1.0 - p.p_f) * (1.0 - on4),
    };
}

inline std::array<double, 8> base_probabilities(const SystemParams& p) {
    return base_probabilities(p, ExponentialFading{p.fading_mean});
}

namespace detail {

inline void check_rows_stochastic(const MarkovModel& m) {
    for (std::size_t i = 0; i < m.R.rows(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < m.R.cols(); ++j) {
            const double v = m.R(i, j);
            if (v < 0.0 || v > 1.0)
                throw std::logic_error("chain construction bug: entry outside [0,1]");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::logic_error("chain construction bug: row does not sum to 1");
    }
}

inline StateDescriptor normal_state(std::size_t index, SensingOutcome outcome, bool on,
                                    double power, double rate, double usable_seconds) {
    StateDescriptor s;
    s.index = index;
    s.sensing_outcome = outcome;
    s.channel = on ? ChannelState::On : ChannelState::Off;
    s.tx_power = power;
    s.tx_rate = rate;
    s.effective_bits = on ? rate * usable_seconds : 0.0;
    return s;
}

} // namespace detail

template <class Fading>
MarkovModel build_no_feedback_chain(const SystemParams& p, const Fading& fading) {
    validate(p);
    const auto base = base_probabilities(p, fading);
    const double on1 = on_probability(1, p, fading);
    const double on2 = on_probability(2, p, fading);
    const double usable = p.slot_seconds - p.sense_seconds;

    MarkovModel m;
    m.tag = SystemKind::NoFeedback;
    m.slot_seconds = p.slot_seconds;
    m.bandwidth_hz = p.bandwidth_hz;
    m.R = Matrix(12, 12);

    using SO = SensingOutcome;
    m.states = {
        detail::normal_state(1, SO::BB, true, p.power_low, p.rate_low, usable),
        detail::normal_state(2, SO::BB, false, p.power_low, p.rate_low, usable),
        detail::normal_state(3, SO::MD, true, p.power_high, p.rate_high, usable),
        detail::normal_state(4, SO::MD, false, p.power_high, p.rate_high, usable),
        detail::normal_state(5, SO::FA, true, p.power_low, p.rate_low, usable),
        detail::normal_state(6, SO::FA, false, p.power_low, p.rate_low, usable),
        detail::normal_state(7, SO::II, true, p.power_high, p.rate_high, usable),
        detail::normal_state(8, SO::II, false, p.power_high, p.rate_high, usable),
        detail::normal_state(9, SO::RetxBB, true, p.power_low, p.rate_low, usable),
        detail::normal_state(10, SO::RetxBB, false, p.power_low, p.rate_low, usable),
        detail::normal_state(11, SO::RetxMD, true, p.power_high, p.rate_high, usable),
        detail::normal_state(12, SO::RetxMD, false, p.power_high, p.rate_high, usable),
    };

    // Rows 1..4: normal pattern scaled by the no-NACK probability, plus the
    // four retransmission columns. The owner's detection/fading outcome in
    // the retransmission slot is drawn afresh.
    for (std::size_t row = 0; row < 4; ++row) {
        const double nack = row < 2 ? p.pr_nack_low : p.pr_nack_high;
        for (std::size_t j = 0; j < 8; ++j) m.R(row, j) = base[j] * (1.0 - nack);
        m.R(row, 8) = p.p_d * nack * on1;
        m.R(row, 9) = p.p_d * nack * (1.0 - on1);
        m.R(row, 10) = (1.0 - p.p_d) * nack * on2;
        m.R(row, 11) = (1.0 - p.p_d) * nack * (1.0 - on2);
    }
    // Rows 5..12: plain base pattern, no NACK branches.
    for (std::size_t row = 4; row < 12; ++row)
        for (std::size_t j = 0; j < 8; ++j) m.R(row, j) = base[j];

    detail::check_rows_stochastic(m);
    return m;
}

inline MarkovModel build_no_feedback_chain(const SystemParams& p) {
    return build_no_feedback_chain(p, ExponentialFading{p.fading_mean});
}

template <class Fading>
MarkovModel build_feedback_chain(const SystemParams& p, bool appendix_k1, const Fading& fading) {
    validate(p);
    const auto base = base_probabilities(p, fading);
    const double on1 = on_probability(1, p, fading);
    const double usable = p.slot_seconds - p.sense_seconds;

    MarkovModel m;
    m.tag = SystemKind::Feedback;
    m.appendix_k1 = appendix_k1;
    m.slot_seconds = p.slot_seconds;
    m.bandwidth_hz = p.bandwidth_hz;
    m.R = Matrix(10, 10);

    using SO = SensingOutcome;
    m.states.assign(8, StateDescriptor{});
    for (std::size_t i = 0; i < 8; ++i) {
        const bool on = i % 2 == 0;
        const SO outcome = i < 2 ? SO::BB : i < 4 ? SO::MD : i < 6 ? SO::FA : SO::II;
        const bool low_tier = outcome == SO::BB || outcome == SO::FA;
        m.states[i] = detail::normal_state(i + 1, outcome, on,
                                           low_tier ? p.power_low : p.power_high,
                                           low_tier ? p.rate_low : p.rate_high, usable);
    }
    // NACK-followup slot: sensing is skipped, so the low tier runs for the
    // whole slot. The appendix_k1 convention instead counts only T-N worth
    // of bits, which is what the closed-form coefficients assume.
    const double nack_slot_seconds = appendix_k1 ? usable : p.slot_seconds;
    m.states.push_back(detail::normal_state(9, SO::NackSlot, true, p.power_low,
                                            p.rate_low, nack_slot_seconds));
    m.states.push_back(detail::normal_state(10, SO::NackSlot, false, p.power_low,
                                            p.rate_low, nack_slot_seconds));

    // Rows 1..4: the NACK branch goes straight to the followup slot. The
    // secondary does not sense there, so no detection factor appears; the
    // ON/OFF split uses the busy low-tier threshold (the owner is
    // retransmitting).
    for (std::size_t row = 0; row < 4; ++row) {
        const double nack = row < 2 ? p.pr_nack_low : p.pr_nack_high;
        for (std::size_t j = 0; j < 8; ++j) m.R(row, j) = base[j] * (1.0 - nack);
        m.R(row, 8) = nack * on1;
        m.R(row, 9) = nack * (1.0 - on1);
    }
    for (std::size_t row = 4; row < 10; ++row)
        for (std::size_t j = 0; j < 8; ++j) m.R(row, j) = base[j];

    detail::check_rows_stochastic(m);
    return m;
}

inline MarkovModel build_feedback_chain(const SystemParams& p, bool appendix_k1 = false) {
    return build_feedback_chain(p, appendix_k1, ExponentialFading{p.fading_mean});
}

// Phi(-theta) R: row i of R scaled by the state's MGF value.
inline Matrix mgf_weighted_matrix(const MarkovModel& m, double theta) {
    const std::vector<double> phi = m.phi(theta);
    Matrix out = m.R;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j)
            out(i, j) *= phi[i];
    return out;
}

} // namespace cogcap
