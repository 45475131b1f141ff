#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cogcap/capacity.hpp"
#include "cogcap/markov.hpp"
#include "cogcap/montecarlo.hpp"
#include "cogcap/params.hpp"
#include "cogcap/sensing.hpp"

namespace {

cogcap::SystemParams defaults() { return cogcap::SystemParams{}; }

cogcap::SensingConfig default_sensing() {
    const auto [noise, interference] =
        cogcap::invert_operating_point({0.0012, 0.7705}, 1.7, 0.026, 1000.0);
    cogcap::SensingConfig c;
    c.noise_var = noise;
    c.primary_interference_var = interference;
    return c;
}

std::vector<double> served_bits(const std::vector<cogcap::SlotOutcome>& trace) {
    std::vector<double> out;
    out.reserve(trace.size());
    for (const auto& s : trace) out.push_back(s.served_bits);
    return out;
}

}  // namespace

TEST_CASE("traces are reproducible from the seed", "[montecarlo]") {
    const auto p = defaults();
    const auto a = cogcap::simulate_service(p, cogcap::SystemKind::Feedback, 5000, 11);
    const auto b = cogcap::simulate_service(p, cogcap::SystemKind::Feedback, 5000, 11);
    REQUIRE(a.size() == b.size());
    bool identical = true;
    for (std::size_t i = 0; i < a.size(); ++i) {
        identical = identical && a[i].served_bits == b[i].served_bits &&
                    a[i].pu_state == b[i].pu_state && a[i].sensing == b[i].sensing &&
                    a[i].feedback == b[i].feedback && a[i].channel_on == b[i].channel_on;
    }
    CHECK(identical);

    const auto c = cogcap::simulate_service(p, cogcap::SystemKind::Feedback, 5000, 12);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i)
        differs = differs || a[i].served_bits != c[i].served_bits;
    CHECK(differs);

    CHECK_THROWS_AS(cogcap::simulate_service(p, cogcap::SystemKind::Feedback, 0, 1),
                    std::invalid_argument);
}

TEST_CASE("an always-idle owner never triggers NACK machinery", "[montecarlo]") {
    cogcap::SystemParams p = defaults();
    p.rho = 0.0;
    for (auto system : {cogcap::SystemKind::NoFeedback, cogcap::SystemKind::Feedback}) {
        const auto trace = cogcap::simulate_service(p, system, 20000, 5);
        for (const auto& s : trace) {
            CHECK(s.pu_state == cogcap::PuState::Idle);
            CHECK(s.feedback == cogcap::FeedbackSignal::None);
            CHECK(s.sensing != cogcap::SensedState::Skipped);
        }
    }
}

TEST_CASE("slots after a NACK follow the per-system retransmission rules", "[montecarlo]") {
    const auto p = defaults();

    const auto fb = cogcap::simulate_service(p, cogcap::SystemKind::Feedback, 50000, 17);
    std::size_t followups = 0;
    for (std::size_t t = 0; t + 1 < fb.size(); ++t) {
        const bool nack = fb[t].feedback == cogcap::FeedbackSignal::Nack;
        const auto& next = fb[t + 1];
        if (nack) {
            ++followups;
            CHECK(next.pu_state == cogcap::PuState::Retransmitting);
            CHECK(next.sensing == cogcap::SensedState::Skipped);
            CHECK(next.su_rate == p.rate_low);
            CHECK(next.su_power == p.power_low);
            const bool full_slot = next.served_bits == p.rate_low * p.slot_seconds;
            CHECK((next.served_bits == 0.0 || full_slot));
            CHECK(next.feedback == cogcap::FeedbackSignal::None);
        } else {
            CHECK(next.pu_state != cogcap::PuState::Retransmitting);
        }
    }
    CHECK(followups > 1000);  // the regime actually exercises the branch

    const auto nf = cogcap::simulate_service(p, cogcap::SystemKind::NoFeedback, 50000, 17);
    for (std::size_t t = 0; t + 1 < nf.size(); ++t) {
        if (nf[t].feedback != cogcap::FeedbackSignal::Nack) continue;
        const auto& next = nf[t + 1];
        CHECK(next.pu_state == cogcap::PuState::Retransmitting);
        CHECK(next.sensing != cogcap::SensedState::Skipped);  // unaware, senses as usual
        CHECK(next.feedback == cogcap::FeedbackSignal::None); // retransmitted once only
        if (next.sensing == cogcap::SensedState::Busy) {
            CHECK(next.su_rate == p.rate_low);
        } else {
            CHECK(next.su_rate == p.rate_high);
        }
    }

    // the retransmit-once rule forbids back-to-back retransmission slots
    for (std::size_t t = 0; t + 1 < nf.size(); ++t)
        if (nf[t].pu_state == cogcap::PuState::Retransmitting)
            CHECK(nf[t + 1].pu_state != cogcap::PuState::Retransmitting);
}

TEST_CASE("every slot maps onto its chain state descriptor", "[montecarlo]") {
    const auto p = defaults();
    for (auto system : {cogcap::SystemKind::NoFeedback, cogcap::SystemKind::Feedback}) {
        const auto model = system == cogcap::SystemKind::NoFeedback
                               ? cogcap::build_no_feedback_chain(p)
                               : cogcap::build_feedback_chain(p, false);
        const auto trace = cogcap::simulate_service(p, system, 20000, 23);
        for (const auto& slot : trace) {
            const std::size_t idx = cogcap::chain_state_index(slot, system);
            REQUIRE(idx < cogcap::chain_state_count(system));
            const auto& state = model.states[idx];
            CHECK(slot.su_rate == state.tx_rate);
            CHECK(slot.su_power == state.tx_power);
            CHECK(slot.channel_on == (state.channel == cogcap::ChannelState::On));
            CHECK(slot.served_bits == state.effective_bits);
        }
    }
}

TEST_CASE("long-run state occupancy matches the stationary distribution", "[montecarlo]") {
    const auto p = defaults();
    for (auto system : {cogcap::SystemKind::NoFeedback, cogcap::SystemKind::Feedback}) {
        const auto model = system == cogcap::SystemKind::NoFeedback
                               ? cogcap::build_no_feedback_chain(p)
                               : cogcap::build_feedback_chain(p, false);
        const auto trace = cogcap::simulate_service(p, system, 300000, 77);
        const auto rows = cogcap::compare_occupancy(trace, model);
        for (const auto& row : rows) {
            INFO("system " << to_string(system) << " state " << row.state << " analytic "
                           << row.analytic << " empirical " << row.empirical);
            CHECK(std::abs(row.z) < 4.0);
        }
    }

    CHECK_THROWS_AS(cogcap::compare_occupancy({}, cogcap::build_no_feedback_chain(p)),
                    std::invalid_argument);
}

TEST_CASE("empirical average power matches the stationary average", "[montecarlo]") {
    const auto p = defaults();
    for (auto system : {cogcap::SystemKind::NoFeedback, cogcap::SystemKind::Feedback}) {
        const auto model = system == cogcap::SystemKind::NoFeedback
                               ? cogcap::build_no_feedback_chain(p)
                               : cogcap::build_feedback_chain(p, false);
        const auto trace = cogcap::simulate_service(p, system, 200000, 99);
        const double analytic = cogcap::average_power(model);
        CHECK_THAT(cogcap::empirical_average_power(trace),
                   Catch::Matchers::WithinRel(analytic, 0.01));
    }
}

TEST_CASE("constant service gives the exact effective capacity", "[montecarlo]") {
    const std::vector<double> trace(600, 350.0);
    const auto est = cogcap::estimate_effective_capacity(trace, 0.02, 10, 0.1, 1000.0);
    CHECK_THAT(est.point, Catch::Matchers::WithinAbs(3.5, 1e-12));
    CHECK(est.half_width_95 == 0.0);
    CHECK(est.batches == 60);
}

TEST_CASE("estimator input validation", "[montecarlo]") {
    const auto p = defaults();
    const std::vector<double> short_trace(100, 10.0);
    CHECK_THROWS_AS(cogcap::estimate_effective_capacity(short_trace, 0.02, 10, 0.1, 1000.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(cogcap::estimate_effective_capacity(short_trace, 0.0, 2, 0.1, 1000.0),
                    std::invalid_argument);

    const std::vector<double> silent(600, 0.0);
    CHECK_THROWS_AS(cogcap::estimate_effective_capacity(silent, 0.02, 10, 0.1, 1000.0),
                    std::runtime_error);

    cogcap::EstimatorOptions opt;
    opt.segments = 20;
    CHECK_THROWS_AS(cogcap::estimate_effective_capacity(p, cogcap::SystemKind::Feedback, 0.02,
                                                        10, 1, opt),
                    std::invalid_argument);
    opt = {};
    opt.segment_frames = 5;
    CHECK_THROWS_AS(cogcap::estimate_effective_capacity(p, cogcap::SystemKind::Feedback, 0.02,
                                                        10, 1, opt),
                    std::invalid_argument);
    CHECK_THROWS_AS(cogcap::estimate_effective_capacity(p, cogcap::SystemKind::Feedback, 0.02,
                                                        0, 1),
                    std::invalid_argument);
}

TEST_CASE("restart estimator brackets the analytic effective capacity", "[montecarlo]") {
    const auto p = defaults();
    cogcap::EstimatorOptions opt;
    opt.segments = 40;
    opt.segment_frames = 4000;
    opt.bootstrap = 400;
    for (auto system : {cogcap::SystemKind::NoFeedback, cogcap::SystemKind::Feedback}) {
        const auto model = system == cogcap::SystemKind::NoFeedback
                               ? cogcap::build_no_feedback_chain(p)
                               : cogcap::build_feedback_chain(p, false);
        const double analytic = cogcap::effective_capacity(model, p.theta).ec_normalized;
        const auto est =
            cogcap::estimate_effective_capacity(p, system, p.theta, 10, 314, opt);
        INFO("system " << to_string(system) << " analytic " << analytic << " estimate "
                       << est.point << " +- " << est.half_width_95);
        CHECK(est.half_width_95 > 0.0);
        CHECK(std::abs(est.point - analytic) <
              std::max(3.0 * est.half_width_95, 0.05 * analytic));

        const auto replay =
            cogcap::estimate_effective_capacity(p, system, p.theta, 10, 314, opt);
        CHECK(replay.point == est.point);
        CHECK(replay.half_width_95 == est.half_width_95);
    }
}

TEST_CASE("sample-level sensing leaves the estimate consistent", "[montecarlo]") {
    const auto p = defaults();
    const auto sensing = default_sensing();
    cogcap::SimulationOptions mode;
    mode.detector = &sensing;
    const auto trace =
        cogcap::simulate_service(p, cogcap::SystemKind::NoFeedback, 60000, 2718, mode);
    const auto est = cogcap::estimate_effective_capacity(served_bits(trace), p.theta, 10,
                                                         p.slot_seconds, p.bandwidth_hz);
    const double analytic =
        cogcap::effective_capacity(cogcap::build_no_feedback_chain(p), p.theta).ec_normalized;
    INFO("analytic " << analytic << " detector-mode estimate " << est.point << " +- "
                     << est.half_width_95);
    CHECK(std::abs(est.point - analytic) <
          std::max(3.0 * est.half_width_95, 0.05 * analytic));
}

TEST_CASE("queue tail exponent recovers theta when fed at capacity", "[montecarlo]") {
    const auto p = defaults();
    const auto nf = cogcap::build_no_feedback_chain(p);
    const double arrival = cogcap::effective_capacity(nf, p.theta).ec_bits_per_frame;
    const auto est = cogcap::estimate_queue_tail_exponent(p, cogcap::SystemKind::NoFeedback,
                                                          arrival, 600000, 451);
    INFO("target " << p.theta << " fitted " << est.point << " +- " << est.half_width_95);
    CHECK_THAT(est.point, Catch::Matchers::WithinRel(p.theta, 0.25));
    CHECK(est.batches >= 3);
}

TEST_CASE("queue tail edge cases", "[montecarlo]") {
    const auto p = defaults();

    // arrivals at the mean service rate (or above) never stabilize
    const double mean_bits = cogcap::mean_service_rate(cogcap::build_no_feedback_chain(p)) *
                             p.slot_seconds * p.bandwidth_hz;
    CHECK_THROWS_AS(cogcap::estimate_queue_tail_exponent(p, cogcap::SystemKind::NoFeedback,
                                                         mean_bits, 50000, 1),
                    std::runtime_error);

    CHECK_THROWS_AS(cogcap::estimate_queue_tail_exponent(p, cogcap::SystemKind::NoFeedback,
                                                         10.0, 500, 1),
                    std::invalid_argument);

    // zero arrivals: the queue never backlogs, reported as an infinite decay
    const auto idle = cogcap::estimate_queue_tail_exponent(p, cogcap::SystemKind::NoFeedback,
                                                           0.0, 50000, 1);
    CHECK(std::isinf(idle.point));

    // tiny arrivals: backlog exists but drains almost immediately, so the
    // fitted decay is far steeper than any operating theta
    const auto tiny = cogcap::estimate_queue_tail_exponent(p, cogcap::SystemKind::NoFeedback,
                                                           1.0, 200000, 2);
    CHECK(tiny.point > 10.0 * p.theta);
}
