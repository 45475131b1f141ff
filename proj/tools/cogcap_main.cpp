// cogcap: analytic and simulated effective capacity of a secondary link
// sharing a licensed band, with and without overheard-feedback exploitation.
//
// Subcommands: ec, sweep, simulate, optimize, verify-theorem, sensing.
// Every run prints its effective configuration as '# key = value' lines so
// the output is self-describing and reproducible.

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "cogcap/capacity.hpp"
#include "cogcap/config.hpp"
#include "cogcap/markov.hpp"
#include "cogcap/montecarlo.hpp"
#include "cogcap/params.hpp"
#include "cogcap/sensing.hpp"

namespace {

using cogcap::ExperimentConfig;
using cogcap::format_double;
using cogcap::MarkovModel;
using cogcap::SystemKind;

std::vector<SystemKind> selected_systems(const ExperimentConfig& cfg) {
    if (cfg.system == "both") return {SystemKind::NoFeedback, SystemKind::Feedback};
    if (cfg.system == "no_feedback") return {SystemKind::NoFeedback};
    if (cfg.system == "feedback") return {SystemKind::Feedback};
    throw std::invalid_argument("system must be one of no_feedback, feedback, both");
}

MarkovModel build_chain(const cogcap::SystemParams& p, SystemKind system, bool appendix_k1) {
    return system == SystemKind::NoFeedback ? cogcap::build_no_feedback_chain(p)
                                            : cogcap::build_feedback_chain(p, appendix_k1);
}

void warn_if_fractional(const cogcap::SensingConfig& s) {
    double err = 0.0;
    const int nb = cogcap::sample_count(s, &err);
    if (std::abs(err) > 1e-9)
        std::fprintf(stderr,
                     "warning: sensing time-bandwidth product %s is not an integer; "
                     "using %d samples\n",
                     format_double(s.sense_duration * s.bandwidth).c_str(), nb);
}

void check_sweep_spec(const ExperimentConfig& cfg) {
    if (!(cfg.sweep_min < cfg.sweep_max))
        throw std::invalid_argument("sweep_min must be smaller than sweep_max");
    if (cfg.sweep_points < 2)
        throw std::invalid_argument("sweep_points must be at least 2");
}

std::string run_ec(const ExperimentConfig& cfg) {
    const auto& p = cfg.params;
    const MarkovModel nf = cogcap::build_no_feedback_chain(p);
    const MarkovModel fb = cogcap::build_feedback_chain(p, cfg.appendix_k1);
    const auto rn = cogcap::effective_capacity(nf, p.theta);
    const auto rf = cogcap::effective_capacity(fb, p.theta);

    // closed-form cross-check; the feedback root is only defined under the
    // sensing-gap bit-count convention, so check that model explicitly
    const double root_n =
        cogcap::positive_quadratic_root(cogcap::appendix_quadratic_coefficients(nf, p.theta));
    const MarkovModel fb_appendix =
        cfg.appendix_k1 ? fb : cogcap::build_feedback_chain(p, true);
    const double sp_f_appendix =
        cogcap::effective_capacity(fb_appendix, p.theta).spectral_radius;
    const double root_f = cogcap::positive_quadratic_root(
        cogcap::appendix_quadratic_coefficients(fb_appendix, p.theta));

    std::ostringstream out;
    out << cogcap::echo_config(cfg);
    out << "ec_no_feedback_bits_per_frame = " << format_double(rn.ec_bits_per_frame) << "\n";
    out << "ec_no_feedback = " << format_double(rn.ec_normalized) << "\n";
    out << "spectral_radius_no_feedback = " << format_double(rn.spectral_radius) << "\n";
    out << "avg_power_no_feedback = " << format_double(rn.avg_power) << "\n";
    out << "ec_feedback_bits_per_frame = " << format_double(rf.ec_bits_per_frame) << "\n";
    out << "ec_feedback = " << format_double(rf.ec_normalized) << "\n";
    out << "spectral_radius_feedback = " << format_double(rf.spectral_radius) << "\n";
    out << "avg_power_feedback = " << format_double(rf.avg_power) << "\n";
    out << "mean_service_rate_no_feedback = " << format_double(cogcap::mean_service_rate(nf))
        << "\n";
    out << "mean_service_rate_feedback = " << format_double(cogcap::mean_service_rate(fb))
        << "\n";
    out << "closed_form_delta_no_feedback = "
        << format_double(std::abs(root_n - rn.spectral_radius) / rn.spectral_radius) << "\n";
    out << "closed_form_delta_feedback_appendix = "
        << format_double(std::abs(root_f - sp_f_appendix) / sp_f_appendix) << "\n";
    return out.str();
}

std::string run_sweep(const ExperimentConfig& cfg) {
    check_sweep_spec(cfg);
    const auto variable = cogcap::parse_sweep_variable(cfg.variable);
    const auto grid =
        cogcap::detail::linspace(cfg.sweep_min, cfg.sweep_max, cfg.sweep_points);

    cogcap::SensingConfig sensing;
    bool needs_sensing = variable == cogcap::SweepVariable::NFraction ||
                         variable == cogcap::SweepVariable::Lambda;
    if (needs_sensing) {
        sensing = cogcap::effective_sensing_config(cfg);
        warn_if_fractional(sensing);
    }
    const auto rows = cogcap::sweep(cfg.params, variable, grid, cfg.appendix_k1,
                                    needs_sensing ? &sensing : nullptr);

    std::ostringstream out;
    out << cogcap::echo_config(cfg);
    out << "x,ec_no_feedback,ec_feedback,pavg_no_feedback,pavg_feedback,pf,pd\n";
    for (const auto& row : rows) {
        out << format_double(row.x) << ',' << format_double(row.ec_no_feedback) << ','
            << format_double(row.ec_feedback) << ',' << format_double(row.pavg_no_feedback)
            << ',' << format_double(row.pavg_feedback) << ',' << format_double(row.p_f) << ','
            << format_double(row.p_d) << "\n";
    }
    return out.str();
}

std::string run_simulate(const ExperimentConfig& cfg) {
    const auto& p = cfg.params;
    if (cfg.batches < 1)
        throw std::invalid_argument("batches must be at least 1");
    const std::size_t segment_frames = cfg.frames / cfg.batches;
    if (!cfg.sample_level_sensing && segment_frames < cfg.batch_length)
        throw std::invalid_argument(
            "insufficient batches: frames/batches = " + std::to_string(segment_frames) +
            " frames per restart segment, need at least batch_length = " +
            std::to_string(cfg.batch_length));

    cogcap::SensingConfig sensing;
    cogcap::SimulationOptions mode;
    if (cfg.sample_level_sensing) {
        sensing = cogcap::effective_sensing_config(cfg);
        warn_if_fractional(sensing);
        mode.detector = &sensing;
    }

    std::ostringstream out;
    out << cogcap::echo_config(cfg);
    for (SystemKind system : selected_systems(cfg)) {
        const MarkovModel model = build_chain(p, system, false);
        const auto analytic = cogcap::effective_capacity(model, p.theta);

        cogcap::SimEstimate est;
        if (cfg.sample_level_sensing) {
            // validation mode: one long detector-driven trace
            const auto trace =
                cogcap::simulate_service(p, system, cfg.frames, cfg.seed, mode);
            std::vector<double> bits;
            bits.reserve(trace.size());
            for (const auto& slot : trace) bits.push_back(slot.served_bits);
            est = cogcap::estimate_effective_capacity(bits, p.theta, cfg.batch_length,
                                                      p.slot_seconds, p.bandwidth_hz);
        } else {
            cogcap::EstimatorOptions opt;
            opt.segments = cfg.batches;
            opt.segment_frames = segment_frames;
            est = cogcap::estimate_effective_capacity(p, system, p.theta, cfg.batch_length,
                                                      cfg.seed, opt);
        }

        const auto trace = cogcap::simulate_service(
            p, system, cfg.frames, cogcap::derive_seed(cfg.seed, 0x6f636375ull), mode);
        const auto occupancy = cogcap::compare_occupancy(trace, model);

        out << "system = " << to_string(system) << "\n";
        out << "analytic_ec = " << format_double(analytic.ec_normalized) << "\n";
        out << "estimated_ec = " << format_double(est.point) << "\n";
        out << "ci95_half_width = " << format_double(est.half_width_95) << "\n";
        out << "frames = " << est.frames << "\n";
        out << "batches = " << est.batches << "\n";
        out << "state,analytic,empirical,std_error,z\n";
        double max_abs_z = 0.0;
        for (const auto& row : occupancy) {
            max_abs_z = std::max(max_abs_z, std::abs(row.z));
            out << row.state << ',' << format_double(row.analytic) << ','
                << format_double(row.empirical) << ',' << format_double(row.std_error) << ','
                << format_double(row.z) << "\n";
        }
        out << "occupancy_max_abs_z = " << format_double(max_abs_z) << "\n";
        out << "analytic_avg_power = " << format_double(analytic.avg_power) << "\n";
        out << "empirical_avg_power = " << format_double(cogcap::empirical_average_power(trace))
            << "\n";

        if (cfg.queue_frames > 0) {
            const double arrival =
                cfg.arrival_rate ? *cfg.arrival_rate : analytic.ec_bits_per_frame;
            const auto tail = cogcap::estimate_queue_tail_exponent(
                p, system, arrival, cfg.queue_frames,
                cogcap::derive_seed(cfg.seed, 0x71756575ull));
            out << "queue_arrival_bits_per_frame = " << format_double(arrival) << "\n";
            out << "queue_tail_exponent = " << format_double(tail.point) << "\n";
            out << "queue_tail_ci95_half_width = " << format_double(tail.half_width_95)
                << "\n";
            out << "queue_tail_target_theta = " << format_double(p.theta) << "\n";
        }
    }
    return out.str();
}

std::string run_optimize(const ExperimentConfig& cfg) {
    const auto& p = cfg.params;
    std::ostringstream out;
    out << cogcap::echo_config(cfg);
    for (SystemKind system : selected_systems(cfg)) {
        const auto r = cogcap::optimize_rates(p, system, p.theta, {cfg.r1_min, cfg.r1_max},
                                              {cfg.r2_min, cfg.r2_max}, cfg.opt_points,
                                              cfg.appendix_k1);
        out << "system = " << to_string(system) << "\n";
        out << "r_1_opt = " << format_double(r.r_1_opt) << "\n";
        out << "r_2_opt = " << format_double(r.r_2_opt) << "\n";
        out << "ec_opt = " << format_double(r.ec_opt) << "\n";
    }
    return out.str();
}

std::pair<std::string, int> run_verify_theorem(const ExperimentConfig& cfg) {
    const auto& p = cfg.params;
    const auto report = cogcap::verify_theorem_1(p, cfg.trials, cfg.seed);

    // reference-point margins under both bit-count conventions
    const double ec_nf =
        cogcap::effective_capacity(cogcap::build_no_feedback_chain(p), p.theta)
            .ec_bits_per_frame;
    const double ec_fb_strict =
        cogcap::effective_capacity(cogcap::build_feedback_chain(p, false), p.theta)
            .ec_bits_per_frame;
    const double ec_fb_appendix =
        cogcap::effective_capacity(cogcap::build_feedback_chain(p, true), p.theta)
            .ec_bits_per_frame;

    std::ostringstream out;
    out << cogcap::echo_config(cfg);
    out << "trials = " << report.trials << "\n";
    out << "ec_violations_appendix = " << report.ec_violations_appendix << "\n";
    out << "ec_violations_strict = " << report.ec_violations_strict << "\n";
    out << "b_violations = " << report.b_violations << "\n";
    out << "worst_ec_margin_appendix = " << format_double(report.worst_ec_margin_appendix)
        << "\n";
    out << "worst_ec_margin_strict = " << format_double(report.worst_ec_margin_strict) << "\n";
    out << "min_b_gap = " << format_double(report.min_b_gap) << "\n";
    out << "base_point_ec_no_feedback = " << format_double(ec_nf) << "\n";
    out << "base_point_ec_feedback = " << format_double(ec_fb_strict) << "\n";
    out << "base_point_ec_feedback_appendix = " << format_double(ec_fb_appendix) << "\n";
    out << "base_point_margin = " << format_double((ec_fb_strict - ec_nf) / ec_nf) << "\n";
    out << "base_point_margin_appendix = " << format_double((ec_fb_appendix - ec_nf) / ec_nf)
        << "\n";
    for (const auto& v : report.violations) {
        out << "violation: draw " << v.draw_index
            << (v.strict_convention ? " (strict)" : " (appendix)")
            << " ec_no_feedback = " << format_double(v.ec_no_feedback)
            << " ec_feedback = " << format_double(v.ec_feedback)
            << " b_no_feedback = " << format_double(v.b_no_feedback)
            << " b_feedback = " << format_double(v.b_feedback) << "\n";
    }
    const bool failed = report.ec_violations_appendix > 0 || report.b_violations > 0;
    return {out.str(), failed ? 3 : 0};
}

std::string run_sensing(const ExperimentConfig& cfg) {
    check_sweep_spec(cfg);
    const auto variable = cogcap::parse_sweep_variable(cfg.variable);
    if (variable != cogcap::SweepVariable::NFraction &&
        variable != cogcap::SweepVariable::Lambda)
        throw std::invalid_argument("sensing curves support variable = n_fraction or lambda");

    const auto base = cogcap::effective_sensing_config(cfg);
    warn_if_fractional(base);

    std::ostringstream out;
    out << cogcap::echo_config(cfg);
    out << "noise_var = " << format_double(base.noise_var) << "\n";
    out << "primary_interference_var = " << format_double(base.primary_interference_var)
        << "\n";
    out << "nb = " << cogcap::sample_count(base) << "\n";
    out << "pf = " << format_double(cogcap::false_alarm_probability(base)) << "\n";
    out << "pd = " << format_double(cogcap::detection_probability(base)) << "\n";
    out << "x,pf,pd\n";
    for (double x :
         cogcap::detail::linspace(cfg.sweep_min, cfg.sweep_max, cfg.sweep_points)) {
        cogcap::SensingConfig c = base;
        if (variable == cogcap::SweepVariable::NFraction)
            c.sense_duration = x * cfg.params.slot_seconds;
        else
            c.threshold = x;
        out << format_double(x) << ',' << format_double(cogcap::false_alarm_probability(c))
            << ',' << format_double(cogcap::detection_probability(c)) << "\n";
    }
    return out.str();
}

void emit(const std::string& text, const ExperimentConfig& cfg) {
    std::fputs(text.c_str(), stdout);
    if (!cfg.out_path.empty()) {
        std::ofstream f(cfg.out_path);
        if (!f)
            throw std::runtime_error("cannot write output file '" + cfg.out_path + "'");
        f << text;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"effective capacity of a secondary link under primary ARQ feedback"};
    app.require_subcommand(1);

    std::string config_path;
    std::map<std::string, std::string> overrides;

    app.add_option("--config", config_path, "experiment config file (key = value lines)");
    // every config key is also a flag named after the field
    static const char* value_keys[] = {
        "rho", "theta", "slot_seconds", "sense_seconds", "bandwidth_hz", "rate_low",
        "rate_high", "power_low", "power_high", "snr_busy_low", "snr_busy_high",
        "snr_idle_low", "snr_idle_high", "snr_busy_low_db", "snr_busy_high_db",
        "snr_idle_low_db", "snr_idle_high_db", "pr_nack_low", "pr_nack_high", "fading_mean",
        "p_f", "p_d", "threshold_mode", "threshold", "noise_var", "primary_interference_var",
        "variable", "sweep_min", "sweep_max", "sweep_points", "frames", "batches",
        "batch_length", "queue_frames", "arrival_rate", "system", "seed", "trials", "r1_min",
        "r1_max", "r2_min", "r2_max", "opt_points", "out"};
    for (const char* key : value_keys) {
        std::string name = "--" + std::string(key);
        for (char& ch : name)
            if (ch == '_') ch = '-';
        app.add_option_function<std::string>(
            name,
            [&overrides, key](const std::string& value) { overrides[key] = value; },
            std::string("override config key '") + key + "'");
    }
    for (const char* key : {"appendix_k1", "sample_level_sensing"}) {
        std::string name = "--" + std::string(key);
        for (char& ch : name)
            if (ch == '_') ch = '-';
        app.add_flag_callback(
            name, [&overrides, key]() { overrides[key] = "true"; },
            std::string("enable config key '") + key + "'");
    }

    auto* cmd_ec = app.add_subcommand("ec", "effective capacity at one parameter point");
    auto* cmd_sweep = app.add_subcommand("sweep", "CSV sweep over theta, rho, n_fraction or lambda");
    auto* cmd_simulate = app.add_subcommand("simulate", "Monte Carlo cross-check of the analytic model");
    auto* cmd_optimize = app.add_subcommand("optimize", "grid search over the two transmission rates");
    auto* cmd_verify = app.add_subcommand("verify-theorem", "randomized feedback-superiority check");
    auto* cmd_sensing = app.add_subcommand("sensing", "detector operating curves vs n_fraction or lambda");
    for (auto* sub : {cmd_ec, cmd_sweep, cmd_simulate, cmd_optimize, cmd_verify, cmd_sensing})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    ExperimentConfig cfg;
    int rc = 0;
    try {
        if (!config_path.empty()) cfg = cogcap::load_config(config_path);
        for (const auto& [key, value] : overrides) cogcap::set_config_key(cfg, key, value);
        cogcap::validate(cfg.params);

        std::string text;
        if (cmd_ec->parsed()) {
            text = run_ec(cfg);
        } else if (cmd_sweep->parsed()) {
            text = run_sweep(cfg);
        } else if (cmd_simulate->parsed()) {
            text = run_simulate(cfg);
        } else if (cmd_optimize->parsed()) {
            text = run_optimize(cfg);
        } else if (cmd_verify->parsed()) {
            auto [report, code] = run_verify_theorem(cfg);
            text = std::move(report);
            rc = code;
        } else {
            text = run_sensing(cfg);
        }
        emit(text, cfg);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::runtime_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return rc;
}
