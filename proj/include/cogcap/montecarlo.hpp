#pragma once
// Slot-level simulator for both systems plus the estimators that close the
// loop against the analytic engine: a restart-batch log-MGF estimator of the
// effective capacity and a queue-tail decay fit.
//
// Per-slot draw order is fixed (occupancy, sensing, fading, NACK) so a seed
// fully determines a trace on every platform.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cogcap/capacity.hpp"
#include "cogcap/markov.hpp"
#include "cogcap/params.hpp"
#include "cogcap/quadratic.hpp"
#include "cogcap/rng.hpp"
#include "cogcap/sensing.hpp"

namespace cogcap {

enum class PuState { Busy, Idle, Retransmitting };
enum class SensedState { Busy, Idle, Skipped };
enum class FeedbackSignal { Ack, Nack, None };

struct SlotOutcome {
    PuState pu_state = PuState::Idle;
    SensedState sensing = SensedState::Idle;
    double su_rate = 0.0;   // bits/sec attempted
    double su_power = 0.0;
    bool channel_on = false;
    double served_bits = 0.0;
    FeedbackSignal feedback = FeedbackSignal::None;
};

struct SimEstimate {
    double point = 0.0;
    double half_width_95 = 0.0;
    std::size_t frames = 0;
    std::size_t batches = 0;
    std::uint64_t seed = 0;
};

struct SimulationOptions {
    // When set, sensing decisions come from the sample-level energy detector
    // instead of Bernoulli(p_d)/Bernoulli(p_f) draws.
    const SensingConfig* detector = nullptr;
};

inline std::size_t chain_state_count(SystemKind system) {
    return system == SystemKind::NoFeedback ? 12 : 10;
}

// Maps a simulated slot back onto the chain's 0-based state index.
inline std::size_t chain_state_index(const SlotOutcome& slot, SystemKind system) {
    const std::size_t off = slot.channel_on ? 0 : 1;
    if (slot.pu_state == PuState::Retransmitting) {
        if (system == SystemKind::Feedback) return 8 + off;
        return slot.sensing == SensedState::Busy ? 8 + off : 10 + off;
    }
    const bool busy = slot.pu_state == PuState::Busy;
    const bool sensed_busy = slot.sensing == SensedState::Busy;
    if (busy) return (sensed_busy ? 0 : 2) + off;
    return (sensed_busy ? 4 : 6) + off;
}

// Core slot generator. The visitor receives each SlotOutcome in order.
template <class Fading, class Visitor>
void simulate_slots(const SystemParams& p, SystemKind system, std::size_t frames, Rng& rng,
                    const SimulationOptions& opt, const Fading& fading, Visitor&& visit) {
    validate(p);
    const double usable = p.slot_seconds - p.sense_seconds;
    const double a1 = on_threshold(1, p);
    const double a2 = on_threshold(2, p);
    const double a3 = on_threshold(3, p);
    const double a4 = on_threshold(4, p);

    bool pending_retx = false;
    for (std::size_t t = 0; t < frames; ++t) {
        SlotOutcome slot;
        if (pending_retx && system == SystemKind::Feedback) {
            // Overheard NACK: skip sensing, run the low tier the whole slot.
            slot.pu_state = PuState::Retransmitting;
            slot.sensing = SensedState::Skipped;
            slot.channel_on = fading.sample(rng) > a1;
            slot.su_rate = p.rate_low;
            slot.su_power = p.power_low;
            slot.served_bits = slot.channel_on ? p.rate_low * p.slot_seconds : 0.0;
            pending_retx = false;
        } else if (pending_retx) {
            // Unnoticed retransmission: sense and adapt as usual. The owner
            // retransmits exactly once, so no NACK is drawn here.
            slot.pu_state = PuState::Retransmitting;
            const bool sensed_busy = opt.detector ? simulate_detection(*opt.detector, true, rng)
                                                  : rng.bernoulli(p.p_d);
            slot.sensing = sensed_busy ? SensedState::Busy : SensedState::Idle;
            slot.channel_on = fading.sample(rng) > (sensed_busy ? a1 : a2);
            slot.su_rate = sensed_busy ? p.rate_low : p.rate_high;
            slot.su_power = sensed_busy ? p.power_low : p.power_high;
            slot.served_bits = slot.channel_on ? slot.su_rate * usable : 0.0;
            pending_retx = false;
        } else {
            const bool busy = rng.bernoulli(p.rho);
            slot.pu_state = busy ? PuState::Busy : PuState::Idle;
            const bool sensed_busy = opt.detector
                                         ? simulate_detection(*opt.detector, busy, rng)
                                         : rng.bernoulli(busy ? p.p_d : p.p_f);
            slot.sensing = sensed_busy ? SensedState::Busy : SensedState::Idle;
            const double alpha = busy ? (sensed_busy ? a1 : a2) : (sensed_busy ? a3 : a4);
            slot.channel_on = fading.sample(rng) > alpha;
            slot.su_rate = sensed_busy ? p.rate_low : p.rate_high;
            slot.su_power = sensed_busy ? p.power_low : p.power_high;
            slot.served_bits = slot.channel_on ? slot.su_rate * usable : 0.0;
            if (busy) {
                // NACK odds follow the secondary's power tier in the slot.
                const bool nack = rng.bernoulli(sensed_busy ? p.pr_nack_low : p.pr_nack_high);
                slot.feedback = nack ? FeedbackSignal::Nack : FeedbackSignal::Ack;
                pending_retx = nack;
            }
        }
        visit(slot);
    }
}

inline std::vector<SlotOutcome> simulate_service(const SystemParams& p, SystemKind system,
                                                 std::size_t frames, std::uint64_t seed,
                                                 const SimulationOptions& opt = {}) {
    if (frames < 1)
        throw std::invalid_argument("simulate_service: frames must be at least 1");
    std::vector<SlotOutcome> trace;
    trace.reserve(frames);
    Rng rng(seed);
    simulate_slots(p, system, frames, rng, opt, ExponentialFading{p.fading_mean},
                   [&trace](const SlotOutcome& s) { trace.push_back(s); });
    return trace;
}

struct OccupancyRow {
    std::size_t state = 0; // 1-based, matching StateDescriptor::index
    double analytic = 0.0;
    double empirical = 0.0;
    double std_error = 0.0; // batch-means standard error with a small floor
    double z = 0.0;
};

// Per-state occupancy of a trace against the chain's stationary vector.
// The standard error comes from batch means (the trace is autocorrelated),
// floored by the binomial error the stationary probability implies so that
// states too rare to show up in the trace score a small |z|, not a huge one.
inline std::vector<OccupancyRow> compare_occupancy(const std::vector<SlotOutcome>& trace,
                                                   const MarkovModel& model,
                                                   std::size_t batches = 100) {
    if (trace.empty())
        throw std::invalid_argument("compare_occupancy: empty trace");
    if (batches < 2 || batches > trace.size())
        throw std::invalid_argument("compare_occupancy: need 2 <= batches <= frames");
    const std::size_t n_states = model.states.size();
    const std::vector<double> pi = stationary_distribution(model.R);

    const std::size_t batch_len = trace.size() / batches;
    const std::size_t used = batch_len * batches;
    std::vector<std::vector<double>> batch_freq(batches, std::vector<double>(n_states, 0.0));
    for (std::size_t t = 0; t < used; ++t) {
        const std::size_t b = t / batch_len;
        batch_freq[b][chain_state_index(trace[t], model.tag)] += 1.0;
    }
    for (auto& freq : batch_freq)
        for (double& v : freq) v /= static_cast<double>(batch_len);

    std::vector<OccupancyRow> rows(n_states);
    for (std::size_t s = 0; s < n_states; ++s) {
        double mean = 0.0;
        for (std::size_t b = 0; b < batches; ++b) mean += batch_freq[b][s];
        mean /= static_cast<double>(batches);
        double var = 0.0;
        for (std::size_t b = 0; b < batches; ++b) {
            const double d = batch_freq[b][s] - mean;
            var += d * d;
        }
        var /= static_cast<double>(batches - 1);
        const double binomial_se =
            std::sqrt(pi[s] * (1.0 - pi[s]) / static_cast<double>(used));
        const double se =
            std::max({std::sqrt(var / static_cast<double>(batches)), binomial_se, 1e-12});
        rows[s].state = s + 1;
        rows[s].analytic = pi[s];
        rows[s].empirical = mean;
        rows[s].std_error = se;
        rows[s].z = (mean - pi[s]) / se;
    }
    return rows;
}

inline double empirical_average_power(const std::vector<SlotOutcome>& trace) {
    double sum = 0.0;
    for (const SlotOutcome& s : trace) sum += s.su_power;
    return sum / static_cast<double>(trace.size());
}

namespace detail {

struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double v) {
        const double y = v - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

// Per-restart-segment summary of the MGF blocks: compensated sum of
// exp(l - shift) over blocks, where l = -theta * S_block.
struct SegmentSummary {
    double sum_shifted = 0.0;
    std::size_t blocks = 0;
};

} // namespace detail

struct EstimatorOptions {
    std::size_t segments = 100;        // independent restarts
    std::size_t segment_frames = 10000;
    std::size_t bootstrap = 1000;      // resamples for the 95% interval
};

// Log-MGF estimator over independent restart segments. Blocks of
// batch_length consecutive frames are cut within each segment and
//     Lambda(-theta) ~ (1/n) ln( mean over blocks of e^(-theta S_block) )
// is evaluated in the log domain with compensated summation. The 95%
// half-width is a percentile bootstrap over whole segments. Short blocks
// trade a small positive bias (order ln(c)/n) against the underflow and
// variance blowup of long ones; the default n = 10 keeps both near 1%.
inline SimEstimate estimate_effective_capacity(const SystemParams& p, SystemKind system,
                                               double theta, std::size_t batch_length,
                                               std::uint64_t seed,
                                               const EstimatorOptions& opt = {}) {
    if (!(theta > 0.0))
        throw std::invalid_argument("estimate_effective_capacity: theta must be positive");
    if (batch_length < 1)
        throw std::invalid_argument("estimate_effective_capacity: batch_length must be positive");
    if (opt.segments < 30)
        throw std::invalid_argument("estimate_effective_capacity: need at least 30 restart segments");
    if (opt.segment_frames < batch_length)
        throw std::invalid_argument("estimate_effective_capacity: segment shorter than one batch");

    const std::size_t blocks_per_segment = opt.segment_frames / batch_length;
    std::vector<std::vector<double>> log_values(opt.segments);
    double shift = -std::numeric_limits<double>::infinity();

    for (std::size_t s = 0; s < opt.segments; ++s) {
        Rng rng(derive_seed(seed, s));
        std::vector<double>& logs = log_values[s];
        logs.reserve(blocks_per_segment);
        double block_bits = 0.0;
        std::size_t in_block = 0;
        SimulationOptions mode;
        simulate_slots(p, system, blocks_per_segment * batch_length, rng, mode,
                       ExponentialFading{p.fading_mean}, [&](const SlotOutcome& slot) {
                           block_bits += slot.served_bits;
                           if (++in_block == batch_length) {
                               logs.push_back(-theta * block_bits);
                               block_bits = 0.0;
                               in_block = 0;
                           }
                       });
        for (double l : logs) shift = std::max(shift, l);
    }

    bool any_service = false;
    for (const auto& logs : log_values)
        for (double l : logs)
            if (l != 0.0) any_service = true;
    if (!any_service)
        throw std::runtime_error("estimate_effective_capacity: degenerate trace "
                                 "(every batch carries zero service)");

    std::vector<detail::SegmentSummary> summaries(opt.segments);
    detail::KahanSum total;
    std::size_t total_blocks = 0;
    for (std::size_t s = 0; s < opt.segments; ++s) {
        detail::KahanSum seg;
        for (double l : log_values[s]) seg.add(std::exp(l - shift));
        summaries[s].sum_shifted = seg.sum;
        summaries[s].blocks = log_values[s].size();
        total.add(seg.sum);
        total_blocks += summaries[s].blocks;
    }

    const double norm = theta * p.slot_seconds * p.bandwidth_hz * static_cast<double>(batch_length);
    auto to_ec = [&](double pooled_mean_log) { return -pooled_mean_log / norm; };
    const double lambda_log = shift + std::log(total.sum / static_cast<double>(total_blocks));

    SimEstimate est;
    est.point = to_ec(lambda_log);
    est.frames = opt.segments * opt.segment_frames;
    est.batches = opt.segments;
    est.seed = seed;

    if (opt.bootstrap >= 2) {
        Rng boot(derive_seed(seed, 0x626f6f74ull));
        std::vector<double> replicates;
        replicates.reserve(opt.bootstrap);
        for (std::size_t r = 0; r < opt.bootstrap; ++r) {
            detail::KahanSum sum;
            std::size_t blocks = 0;
            for (std::size_t k = 0; k < opt.segments; ++k) {
                const std::size_t pick =
                    std::min<std::size_t>(opt.segments - 1,
                                          static_cast<std::size_t>(boot.uniform() * opt.segments));
                sum.add(summaries[pick].sum_shifted);
                blocks += summaries[pick].blocks;
            }
            replicates.push_back(to_ec(shift + std::log(sum.sum / static_cast<double>(blocks))));
        }
        std::sort(replicates.begin(), replicates.end());
        const std::size_t lo = static_cast<std::size_t>(0.025 * (replicates.size() - 1));
        const std::size_t hi = static_cast<std::size_t>(0.975 * (replicates.size() - 1));
        est.half_width_95 = 0.5 * (replicates[hi] - replicates[lo]);
    }
    return est;
}

// Trace-based variant (single run, no restarts): blocks are treated as
// independent and the interval comes from a delta-method normal
// approximation of ln(mean).
inline SimEstimate estimate_effective_capacity(const std::vector<double>& served_bits_per_frame,
                                               double theta, std::size_t batch_length,
                                               double slot_seconds, double bandwidth_hz) {
    if (!(theta > 0.0))
        throw std::invalid_argument("estimate_effective_capacity: theta must be positive");
    if (batch_length < 1)
        throw std::invalid_argument("estimate_effective_capacity: batch_length must be positive");
    const std::size_t blocks = served_bits_per_frame.size() / batch_length;
    if (blocks < 30)
        throw std::invalid_argument("estimate_effective_capacity: need at least 30 batches");

    std::vector<double> logs(blocks);
    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < blocks; ++b) {
        double bits = 0.0;
        for (std::size_t i = 0; i < batch_length; ++i)
            bits += served_bits_per_frame[b * batch_length + i];
        logs[b] = -theta * bits;
        shift = std::max(shift, logs[b]);
    }
    bool any_service = false;
    for (double l : logs)
        if (l != 0.0) any_service = true;
    if (!any_service)
        throw std::runtime_error("estimate_effective_capacity: degenerate trace "
                                 "(every batch carries zero service)");

    detail::KahanSum sum;
    for (double l : logs) sum.add(std::exp(l - shift));
    const double mean = sum.sum / static_cast<double>(blocks);
    double var = 0.0;
    for (double l : logs) {
        const double d = std::exp(l - shift) - mean;
        var += d * d;
    }
    var /= static_cast<double>(blocks - 1);

    const double norm = theta * slot_seconds * bandwidth_hz * static_cast<double>(batch_length);
    SimEstimate est;
    est.point = -(shift + std::log(mean)) / norm;
    // se of ln(mean) by the delta method, mapped through the normalization
    est.half_width_95 = 1.96 * std::sqrt(var / static_cast<double>(blocks)) / (mean * norm);
    est.frames = served_bits_per_frame.size();
    est.batches = blocks;
    return est;
}

// FIFO queue fed at a constant arrival rate (bits/frame) by the simulated
// service. Fits ln Pr(Q >= q) over log-spaced tail levels between 1e-4 and
// min(0.1, 0.8 * Pr(Q > 0)) and returns the negated slope. A queue that
// never backlogs yields an infinite sentinel (the decay is too fast to
// measure at this arrival rate).
inline SimEstimate estimate_queue_tail_exponent(const SystemParams& p, SystemKind system,
                                                double arrival_rate, std::size_t frames,
                                                std::uint64_t seed) {
    validate(p);
    if (frames < 1000)
        throw std::invalid_argument("estimate_queue_tail_exponent: need at least 1000 frames");
    const MarkovModel model = system == SystemKind::NoFeedback ? build_no_feedback_chain(p)
                                                               : build_feedback_chain(p, false);
    const double mean_bits = mean_service_rate(model) * p.slot_seconds * p.bandwidth_hz;
    if (!(arrival_rate < mean_bits))
        throw std::runtime_error("estimate_queue_tail_exponent: queue unstable "
                                 "(arrival rate >= mean service rate)");

    const std::size_t warmup = std::min<std::size_t>(frames / 10, 100000);
    std::vector<double> backlog;
    backlog.reserve(frames - warmup);
    double q = 0.0;
    std::size_t t = 0;
    Rng rng(seed);
    SimulationOptions mode;
    simulate_slots(p, system, frames, rng, mode, ExponentialFading{p.fading_mean},
                   [&](const SlotOutcome& slot) {
                       q = std::max(q + arrival_rate - slot.served_bits, 0.0);
                       if (t++ >= warmup) backlog.push_back(q);
                   });

    std::sort(backlog.begin(), backlog.end());
    const double n = static_cast<double>(backlog.size());
    std::size_t positive = 0;
    for (std::size_t i = backlog.size(); i-- > 0;) {
        if (backlog[i] > 0.0) ++positive;
        else break;
    }
    const double pr_positive = static_cast<double>(positive) / n;
    SimEstimate est;
    est.frames = frames;
    est.seed = seed;
    if (pr_positive == 0.0) {
        est.point = std::numeric_limits<double>::infinity();
        return est;
    }

    const double p_hi = std::min(0.1, 0.8 * pr_positive);
    const double p_lo = std::max(1e-4, 10.0 / n);
    if (!(p_lo < p_hi))
        throw std::runtime_error("estimate_queue_tail_exponent: insufficient tail samples");

    const std::size_t levels = 12;
    std::vector<double> qs, ys;
    for (std::size_t k = 0; k < levels; ++k) {
        const double frac = static_cast<double>(k) / static_cast<double>(levels - 1);
        const double prob = std::exp(std::log(p_hi) + frac * (std::log(p_lo) - std::log(p_hi)));
        const std::size_t idx = std::min<std::size_t>(
            backlog.size() - 1, static_cast<std::size_t>((1.0 - prob) * n));
        const double quantile = backlog[idx];
        if (!qs.empty() && quantile <= qs.back()) continue; // duplicate level
        qs.push_back(quantile);
        ys.push_back(std::log(prob));
    }
    if (qs.size() < 3)
        throw std::runtime_error("estimate_queue_tail_exponent: insufficient tail samples");

    const double m = static_cast<double>(qs.size());
    double qbar = 0.0, ybar = 0.0;
    for (std::size_t i = 0; i < qs.size(); ++i) {
        qbar += qs[i];
        ybar += ys[i];
    }
    qbar /= m;
    ybar /= m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < qs.size(); ++i) {
        sxx += (qs[i] - qbar) * (qs[i] - qbar);
        sxy += (qs[i] - qbar) * (ys[i] - ybar);
    }
    const double slope = sxy / sxx;
    double rss = 0.0;
    for (std::size_t i = 0; i < qs.size(); ++i) {
        const double r = ys[i] - ybar - slope * (qs[i] - qbar);
        rss += r * r;
    }
    const double se = std::sqrt(rss / (m - 2.0) / sxx);

    est.point = -slope;
    est.half_width_95 = 1.96 * se;
    est.batches = qs.size();
    return est;
}

} // namespace cogcap
