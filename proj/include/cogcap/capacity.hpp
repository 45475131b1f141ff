#pragma once
// Effective-capacity engine.
//
// The service offered by either chain is a Markov-modulated process, so its
// effective capacity at QoS exponent theta is
//     EC(theta) = -ln sp(Phi(-theta) R) / theta   [bits per frame]
// where sp() is the spectral radius. The same quantity divided by T*B is
// reported as bits/sec/Hz. Both chains also admit a closed-form root: their
// weighted matrices have rank structure that reduces the characteristic
// polynomial to lambda^2 - a*lambda - b, and the coefficients can be read
// off any model directly (appendix_quadratic_coefficients). Cross-checking
// the two paths is the backbone of the test suite.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "cogcap/markov.hpp"
#include "cogcap/matrix.hpp"
#include "cogcap/params.hpp"
#include "cogcap/quadratic.hpp"
#include "cogcap/rng.hpp"
#include "cogcap/sensing.hpp"

namespace cogcap {

enum class ECMethod { PowerIteration, QuadraticClosedForm };

struct ECResult {
    double spectral_radius = 1.0;
    double ec_bits_per_frame = 0.0;
    double ec_normalized = 0.0; // bits/sec/Hz, per-frame value over T*B
    ECMethod method = ECMethod::PowerIteration;
    std::vector<double> stationary;
    double avg_power = 0.0;
};

inline double average_power(const MarkovModel& m, const std::vector<double>& stationary) {
    double power = 0.0;
    for (std::size_t i = 0; i < m.states.size(); ++i)
        power += stationary[i] * m.states[i].tx_power;
    return power;
}

inline double average_power(const MarkovModel& m) {
    return average_power(m, stationary_distribution(m.R));
}

// Long-run service rate in bits/sec/Hz: the theta -> 0 limit of the
// effective capacity, computed directly from the stationary distribution.
inline double mean_service_rate(const MarkovModel& m) {
    const std::vector<double> pi = stationary_distribution(m.R);
    double bits = 0.0;
    for (std::size_t i = 0; i < m.states.size(); ++i)
        bits += pi[i] * m.states[i].effective_bits;
    return bits / (m.slot_seconds * m.bandwidth_hz);
}

namespace detail {

inline ECResult finish_result(const MarkovModel& m, double theta, double sp, ECMethod method) {
    if (!(sp > 0.0))
        throw std::runtime_error("effective_capacity: spectral radius underflowed to zero");
    if (sp >= 1.0 + 1e-9)
        throw std::runtime_error("effective_capacity: spectral radius " + std::to_string(sp) +
                                 " exceeds 1 (inconsistent model)");
    ECResult r;
    r.spectral_radius = sp;
    r.ec_bits_per_frame = sp >= 1.0 ? 0.0 : -std::log(sp) / theta;
    r.ec_normalized = r.ec_bits_per_frame / (m.slot_seconds * m.bandwidth_hz);
    r.method = method;
    r.stationary = stationary_distribution(m.R);
    r.avg_power = average_power(m, r.stationary);
    return r;
}

} // namespace detail

inline ECResult effective_capacity(const MarkovModel& m, double theta) {
    if (!(theta > 0.0))
        throw std::invalid_argument("effective_capacity: theta must be positive");
    const double sp = spectral_radius(mgf_weighted_matrix(m, theta));
    return detail::finish_result(m, theta, sp, ECMethod::PowerIteration);
}

// Reads the quadratic coefficients off a model. Writing phi_i for the MGF
// values, p_j for the base column pattern (taken from a retransmission row)
// and n_m for the NACK-branch mass leaving normal state m:
//     a = sum_{m=1..8} phi_m (1 - n_m) p_m
//     b = sum_{m=1..4} phi_m p_m * sum_{c in NACK columns} phi_c R(m, c)
// For the feedback chain this matches the printed closed form only when the
// NACK-followup MGF uses the sensing-gap convention, hence the precondition
// on the appendix_k1 build flag.
inline QuadraticCoefficients appendix_quadratic_coefficients(const MarkovModel& m, double theta) {
    if (!(theta > 0.0))
        throw std::invalid_argument("appendix_quadratic_coefficients: theta must be positive");
    if (m.tag == SystemKind::Feedback && !m.appendix_k1)
        throw std::invalid_argument("appendix_quadratic_coefficients: feedback model must be "
                                    "built with the appendix_k1 convention");
    const std::vector<double> phi = m.phi(theta);
    const std::size_t n = m.R.rows();

    std::array<double, 8> p{};
    for (std::size_t j = 0; j < 8; ++j) p[j] = m.R(4, j); // any retransmission row

    QuadraticCoefficients q;
    q.system_tag = m.tag;
    for (std::size_t s = 0; s < 8; ++s) {
        double nack_mass = 0.0;
        for (std::size_t c = 8; c < n; ++c) nack_mass += m.R(s, c);
        q.a += phi[s] * (1.0 - nack_mass) * p[s];
    }
    for (std::size_t s = 0; s < 4; ++s) {
        double weighted = 0.0;
        for (std::size_t c = 8; c < n; ++c) weighted += phi[c] * m.R(s, c);
        q.b += phi[s] * p[s] * weighted;
    }
    return q;
}

// Closed-form counterpart of effective_capacity.
inline ECResult effective_capacity_closed_form(const MarkovModel& m, double theta) {
    if (!(theta > 0.0))
        throw std::invalid_argument("effective_capacity: theta must be positive");
    const QuadraticCoefficients q = appendix_quadratic_coefficients(m, theta);
    const double sp = q.a == 0.0 && q.b == 0.0 ? 0.0 : positive_quadratic_root(q);
    return detail::finish_result(m, theta, sp, ECMethod::QuadraticClosedForm);
}

// ---------------------------------------------------------------------------
// Randomized ordering check: feedback exploitation should never reduce the
// effective capacity, equivalently the no-feedback quadratic should carry
// the larger b coefficient. verify_theorem_1 samples parameter draws from
// the operating envelope below, evaluates both chains under both
// NACK-followup MGF conventions, and reports violations instead of hiding
// them.

struct TheoremViolation {
    std::size_t draw_index = 0;
    bool strict_convention = false; // false: appendix_k1 comparison
    SystemParams params;
    double ec_no_feedback = 0.0;
    double ec_feedback = 0.0;
    double b_no_feedback = 0.0;
    double b_feedback = 0.0;
};

struct TheoremReport {
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    std::size_t ec_violations_appendix = 0;
    std::size_t ec_violations_strict = 0;
    std::size_t b_violations = 0;
    // Smallest relative EC gap (ec_feedback - ec_no_feedback)/ec_no_feedback
    // seen across draws, per convention; negative numbers are violations.
    double worst_ec_margin_appendix = std::numeric_limits<double>::infinity();
    double worst_ec_margin_strict = std::numeric_limits<double>::infinity();
    double min_b_gap = std::numeric_limits<double>::infinity(); // min of b_nf - b_fb
    std::vector<TheoremViolation> violations; // capped
};

// Operating envelope for the random draws: slot 50..200 ms, sensing
// 5..50% of the slot, bandwidth 500..2000 Hz, low tier 0.5..2 bit/s/Hz,
// high tier 8.5..14 bit/s/Hz, busy-channel SNR 3..9 dB with a 2..5 dB tier
// spread, idle-channel SNR 18..28 dB (low) / 24..32 dB (high) above the
// corresponding busy value, occupancy 5..95%, theta log-uniform
// 0.005..0.08, fading mean 0.5..2, NACK probabilities an ordered pair in
// 0.02..0.98, detection 0.55..0.995, false alarm 0.0005..0.2. The
// threshold convention is inherited from the base params, and so are the
// NACK probabilities when the base pins them to a common value (that is how
// a caller constrains the check to, say, a NACK-free regime).
inline SystemParams sample_theorem_params(const SystemParams& base, Rng& rng) {
    auto uniform = [&rng](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
    SystemParams p = base;
    p.slot_seconds = uniform(0.05, 0.2);
    p.sense_seconds = uniform(0.05, 0.5) * p.slot_seconds;
    p.bandwidth_hz = uniform(500.0, 2000.0);
    p.rate_low = uniform(0.5, 2.0) * p.bandwidth_hz;
    p.rate_high = uniform(8.5, 14.0) * p.bandwidth_hz;
    const double snr_busy_low_db = uniform(3.0, 9.0);
    const double snr_busy_high_db = snr_busy_low_db + uniform(2.0, 5.0);
    p.snr_busy_low = db_to_linear(snr_busy_low_db);
    p.snr_busy_high = db_to_linear(snr_busy_high_db);
    p.snr_idle_low = db_to_linear(snr_busy_low_db + uniform(18.0, 28.0));
    p.snr_idle_high = db_to_linear(snr_busy_high_db + uniform(24.0, 32.0));
    p.rho = uniform(0.05, 0.95);
    p.theta = std::exp(uniform(std::log(0.005), std::log(0.08)));
    p.fading_mean = uniform(0.5, 2.0);
    const double na = uniform(0.02, 0.98);
    const double nb = uniform(0.02, 0.98);
    if (base.pr_nack_low == base.pr_nack_high) {
        p.pr_nack_low = base.pr_nack_low;
        p.pr_nack_high = base.pr_nack_high;
    } else {
        p.pr_nack_low = std::min(na, nb);
        p.pr_nack_high = std::max(na, nb);
    }
    p.p_d = uniform(0.55, 0.995);
    p.p_f = uniform(0.0005, 0.2);
    return p;
}

inline TheoremReport verify_theorem_1(const SystemParams& base, std::size_t trials,
                                      std::uint64_t rng_seed) {
    if (trials < 1)
        throw std::invalid_argument("verify_theorem_1: trials must be at least 1");
    TheoremReport report;
    report.trials = trials;
    report.seed = rng_seed;

    for (std::size_t i = 0; i < trials; ++i) {
        Rng rng(derive_seed(rng_seed, i)); // per-draw stream, order-independent
        const SystemParams p = sample_theorem_params(base, rng);

        const MarkovModel nf = build_no_feedback_chain(p);
        const MarkovModel fb_strict = build_feedback_chain(p, false);
        const MarkovModel fb_appendix = build_feedback_chain(p, true);

        const double ec_nf = effective_capacity(nf, p.theta).ec_bits_per_frame;
        const double ec_fb_strict = effective_capacity(fb_strict, p.theta).ec_bits_per_frame;
        const double ec_fb_appendix = effective_capacity(fb_appendix, p.theta).ec_bits_per_frame;

        const QuadraticCoefficients qn = appendix_quadratic_coefficients(nf, p.theta);
        const QuadraticCoefficients qf = appendix_quadratic_coefficients(fb_appendix, p.theta);

        const double scale = std::max(ec_nf, 1e-300);
        const double margin_appendix = (ec_fb_appendix - ec_nf) / scale;
        const double margin_strict = (ec_fb_strict - ec_nf) / scale;
        report.worst_ec_margin_appendix = std::min(report.worst_ec_margin_appendix, margin_appendix);
        report.worst_ec_margin_strict = std::min(report.worst_ec_margin_strict, margin_strict);
        report.min_b_gap = std::min(report.min_b_gap, qn.b - qf.b);

        const double tol = 1e-10;
        const bool ec_bad_appendix = margin_appendix < -tol;
        const bool ec_bad_strict = margin_strict < -tol;
        const bool b_bad = qf.b > qn.b + 1e-12 * std::max(qn.b, qf.b);
        if (ec_bad_appendix) ++report.ec_violations_appendix;
        if (ec_bad_strict) ++report.ec_violations_strict;
        if (b_bad) ++report.b_violations;
        if ((ec_bad_appendix || ec_bad_strict || b_bad) && report.violations.size() < 32) {
            TheoremViolation v;
            v.draw_index = i;
            v.strict_convention = ec_bad_strict && !ec_bad_appendix;
            v.params = p;
            v.ec_no_feedback = ec_nf;
            v.ec_feedback = ec_bad_strict ? ec_fb_strict : ec_fb_appendix;
            v.b_no_feedback = qn.b;
            v.b_feedback = qf.b;
            report.violations.push_back(v);
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Rate search and parameter sweeps.

struct GridRange {
    double lo = 0.0;
    double hi = 0.0;
};

struct RateSearchResult {
    double r_1_opt = 0.0;
    double r_2_opt = 0.0;
    double ec_opt = 0.0; // bits/sec/Hz
    GridRange r1_range, r2_range;
    std::size_t resolution = 0;
};

namespace detail {

inline std::vector<double> linspace(double lo, double hi, std::size_t points) {
    if (points == 0) return {};
    if (points == 1 || hi <= lo) return {lo};
    std::vector<double> out(points);
    const double step = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i)
        out[i] = lo + step * static_cast<double>(i);
    out.back() = hi;
    return out;
}

} // namespace detail

// Coarse grid search over (rate_low, rate_high) followed by one refinement
// pass at a tenth of the coarse spacing around the incumbent. Pairs with
// rate_low >= rate_high are skipped.
inline RateSearchResult optimize_rates(const SystemParams& base, SystemKind system, double theta,
                                       GridRange r1_range, GridRange r2_range,
                                       std::size_t resolution, bool appendix_k1 = false) {
    if (!(theta > 0.0))
        throw std::invalid_argument("optimize_rates: theta must be positive");
    if (resolution < 1 || r1_range.hi < r1_range.lo || r2_range.hi < r2_range.lo)
        throw std::invalid_argument("optimize_rates: empty search range");

    auto evaluate = [&](double r1, double r2) {
        SystemParams p = base;
        p.rate_low = r1;
        p.rate_high = r2;
        p.theta = theta;
        const MarkovModel m = system == SystemKind::NoFeedback
                                  ? build_no_feedback_chain(p)
                                  : build_feedback_chain(p, appendix_k1);
        return effective_capacity(m, theta).ec_normalized;
    };

    RateSearchResult best;
    best.r1_range = r1_range;
    best.r2_range = r2_range;
    best.resolution = resolution;
    best.ec_opt = -1.0;

    auto search = [&](const std::vector<double>& r1s, const std::vector<double>& r2s) {
        for (double r1 : r1s) {
            for (double r2 : r2s) {
                if (!(r1 < r2)) continue;
                const double ec = evaluate(r1, r2);
                if (ec > best.ec_opt) {
                    best.ec_opt = ec;
                    best.r_1_opt = r1;
                    best.r_2_opt = r2;
                }
            }
        }
    };

    search(detail::linspace(r1_range.lo, r1_range.hi, resolution),
           detail::linspace(r2_range.lo, r2_range.hi, resolution));
    if (best.ec_opt < 0.0)
        throw std::invalid_argument("optimize_rates: no feasible grid point with r1 < r2");

    const double step1 = resolution > 1 ? (r1_range.hi - r1_range.lo) / static_cast<double>(resolution - 1) : 0.0;
    const double step2 = resolution > 1 ? (r2_range.hi - r2_range.lo) / static_cast<double>(resolution - 1) : 0.0;
    if (step1 > 0.0 || step2 > 0.0) {
        const auto fine1 = detail::linspace(std::max(r1_range.lo, best.r_1_opt - step1),
                                            std::min(r1_range.hi, best.r_1_opt + step1), 21);
        const auto fine2 = detail::linspace(std::max(r2_range.lo, best.r_2_opt - step2),
                                            std::min(r2_range.hi, best.r_2_opt + step2), 21);
        search(fine1, fine2);
    }
    return best;
}

enum class SweepVariable { Theta, Rho, NFraction, Lambda };

inline const char* to_string(SweepVariable v) {
    switch (v) {
        case SweepVariable::Theta: return "theta";
        case SweepVariable::Rho: return "rho";
        case SweepVariable::NFraction: return "n_fraction";
        default: return "lambda";
    }
}

inline SweepVariable parse_sweep_variable(const std::string& text) {
    if (text == "theta") return SweepVariable::Theta;
    if (text == "rho") return SweepVariable::Rho;
    if (text == "n_fraction") return SweepVariable::NFraction;
    if (text == "lambda") return SweepVariable::Lambda;
    throw std::invalid_argument("sweep variable must be one of theta, rho, n_fraction, lambda");
}

struct SweepRow {
    double x = 0.0;
    double ec_no_feedback = 0.0;
    double ec_feedback = 0.0;
    double pavg_no_feedback = 0.0;
    double pavg_feedback = 0.0;
    double p_f = 0.0;
    double p_d = 0.0;
};

// One row per grid value. Sweeping the sensing window or the detector
// threshold changes the operating point, so those sweeps recompute
// p_f/p_d from the detector model per point and require a SensingConfig.
inline std::vector<SweepRow> sweep(const SystemParams& base, SweepVariable variable,
                                   const std::vector<double>& grid, bool appendix_k1 = false,
                                   const SensingConfig* sensing = nullptr) {
    if (grid.empty())
        throw std::invalid_argument("sweep: empty grid");
    if ((variable == SweepVariable::NFraction || variable == SweepVariable::Lambda) && !sensing)
        throw std::invalid_argument("sweep: sensing configuration required when sweeping "
                                    "the sensing window or detector threshold");
    std::vector<SweepRow> rows;
    rows.reserve(grid.size());
    for (double x : grid) {
        SystemParams p = base;
        SensingConfig c;
        if (sensing) c = *sensing;
        switch (variable) {
            case SweepVariable::Theta:
                p.theta = x;
                break;
            case SweepVariable::Rho:
                p.rho = x;
                break;
            case SweepVariable::NFraction:
                p.sense_seconds = x * p.slot_seconds;
                c.sense_duration = p.sense_seconds;
                c.bandwidth = p.bandwidth_hz;
                p.p_f = false_alarm_probability(c);
                p.p_d = detection_probability(c);
                break;
            case SweepVariable::Lambda:
                c.threshold = x;
                c.sense_duration = p.sense_seconds;
                c.bandwidth = p.bandwidth_hz;
                p.p_f = false_alarm_probability(c);
                p.p_d = detection_probability(c);
                break;
        }
        const MarkovModel nf = build_no_feedback_chain(p);
        const MarkovModel fb = build_feedback_chain(p, appendix_k1);
        const ECResult rn = effective_capacity(nf, p.theta);
        const ECResult rf = effective_capacity(fb, p.theta);
        SweepRow row;
        row.x = x;
        row.ec_no_feedback = rn.ec_normalized;
        row.ec_feedback = rf.ec_normalized;
        row.pavg_no_feedback = rn.avg_power;
        row.pavg_feedback = rf.avg_power;
        row.p_f = p.p_f;
        row.p_d = p.p_d;
        rows.push_back(row);
    }
    return rows;
}

} // namespace cogcap
