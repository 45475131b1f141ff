#pragma once
// Flat "key = value" experiment configuration: one key per line, `#` starts
// a comment, later keys win. Flag overrides are applied by re-feeding the
// same key/value setter after the file has been read, so any run is fully
// reproducible from its echoed configuration.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>

#include "cogcap/params.hpp"
#include "cogcap/sensing.hpp"

namespace cogcap {

struct ExperimentConfig {
    SystemParams params;

    // Detector description. Variances are optional: when absent they are
    // recovered from (p_f, p_d, threshold, sense_seconds, bandwidth_hz) so
    // a config can pin the operating point without knowing the powers.
    double threshold = 1.7;
    std::optional<double> noise_var;
    std::optional<double> primary_interference_var;
    bool sample_level_sensing = false;

    bool appendix_k1 = false;

    // Sweep grid.
    std::string variable = "n_fraction";
    double sweep_min = 0.01;
    double sweep_max = 0.9;
    std::size_t sweep_points = 90;

    // Simulation controls. `frames` is the total across all restart
    // segments; each of the `batches` segments runs frames/batches of them.
    std::size_t frames = 1000000;
    std::size_t batches = 100;      // restart segments
    std::size_t batch_length = 10;  // estimator block, frames
    std::size_t queue_frames = 2000000;
    std::optional<double> arrival_rate; // bits/frame; default EC(theta)*T*B
    std::string system = "both";        // no_feedback | feedback | both
    std::uint64_t seed = 1;
    std::size_t trials = 10000;

    // Rate search grid.
    double r1_min = 100.0, r1_max = 5000.0;
    double r2_min = 1000.0, r2_max = 50000.0;
    std::size_t opt_points = 50;

    std::string out_path;
};

namespace detail {

inline double parse_double(const std::string& value, const std::string& key) {
    const char* begin = value.data();
    const char* end = begin + value.size();
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end)
        throw std::invalid_argument("key '" + key + "': cannot parse '" + value + "' as a number");
    return out;
}

inline std::uint64_t parse_u64(const std::string& value, const std::string& key) {
    const char* begin = value.data();
    const char* end = begin + value.size();
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end)
        throw std::invalid_argument("key '" + key + "': cannot parse '" + value +
                                    "' as an unsigned integer");
    return out;
}

inline bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw std::invalid_argument("key '" + key + "': cannot parse '" + value + "' as a boolean");
}

inline std::string trim(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = text.find_last_not_of(" \t\r");
    return text.substr(first, last - first + 1);
}

} // namespace detail

// Applies a single key. Throws std::invalid_argument for unknown keys or
// malformed values; callers add file/line context.
inline void set_config_key(ExperimentConfig& c, const std::string& key, const std::string& value) {
    using detail::parse_bool;
    using detail::parse_double;
    using detail::parse_u64;
    SystemParams& p = c.params;

    if (key == "rho") p.rho = parse_double(value, key);
    else if (key == "theta") p.theta = parse_double(value, key);
    else if (key == "slot_seconds") p.slot_seconds = parse_double(value, key);
    else if (key == "sense_seconds") p.sense_seconds = parse_double(value, key);
    else if (key == "bandwidth_hz") p.bandwidth_hz = parse_double(value, key);
    else if (key == "rate_low") p.rate_low = parse_double(value, key);
    else if (key == "rate_high") p.rate_high = parse_double(value, key);
    else if (key == "power_low") p.power_low = parse_double(value, key);
    else if (key == "power_high") p.power_high = parse_double(value, key);
    else if (key == "snr_busy_low") p.snr_busy_low = parse_double(value, key);
    else if (key == "snr_busy_high") p.snr_busy_high = parse_double(value, key);
    else if (key == "snr_idle_low") p.snr_idle_low = parse_double(value, key);
    else if (key == "snr_idle_high") p.snr_idle_high = parse_double(value, key);
    else if (key == "snr_busy_low_db") p.snr_busy_low = db_to_linear(parse_double(value, key));
    else if (key == "snr_busy_high_db") p.snr_busy_high = db_to_linear(parse_double(value, key));
    else if (key == "snr_idle_low_db") p.snr_idle_low = db_to_linear(parse_double(value, key));
    else if (key == "snr_idle_high_db") p.snr_idle_high = db_to_linear(parse_double(value, key));
    else if (key == "pr_nack_low") p.pr_nack_low = parse_double(value, key);
    else if (key == "pr_nack_high") p.pr_nack_high = parse_double(value, key);
    else if (key == "fading_mean") p.fading_mean = parse_double(value, key);
    else if (key == "p_f") p.p_f = parse_double(value, key);
    else if (key == "p_d") p.p_d = parse_double(value, key);
    else if (key == "threshold_mode") p.threshold_mode = parse_threshold_mode(value);
    else if (key == "threshold") c.threshold = parse_double(value, key);
    else if (key == "noise_var") c.noise_var = parse_double(value, key);
    else if (key == "primary_interference_var") c.primary_interference_var = parse_double(value, key);
    else if (key == "sample_level_sensing") c.sample_level_sensing = parse_bool(value, key);
    else if (key == "appendix_k1") c.appendix_k1 = parse_bool(value, key);
    else if (key == "variable") c.variable = value;
    else if (key == "sweep_min") c.sweep_min = parse_double(value, key);
    else if (key == "sweep_max") c.sweep_max = parse_double(value, key);
    else if (key == "sweep_points") c.sweep_points = static_cast<std::size_t>(parse_u64(value, key));
    else if (key == "frames") c.frames = static_cast<std::size_t>(parse_u64(value, key));
    else if (key == "batches") c.batches = static_cast<std::size_t>(parse_u64(value, key));
    else if (key == "batch_length") c.batch_length = static_cast<std::size_t>(parse_u64(value, key));
    else if (key == "queue_frames") c.queue_frames = static_cast<std::size_t>(parse_u64(value, key));
    else if (key == "arrival_rate") c.arrival_rate = parse_double(value, key);
    else if (key == "system") c.system = value;
    else if (key == "seed") c.seed = parse_u64(value, key);
    else if (key == "trials") c.trials = static_cast<std::size_t>(parse_u64(value, key));
    else if (key == "r1_min") c.r1_min = parse_double(value, key);
    else if (key == "r1_max") c.r1_max = parse_double(value, key);
    else if (key == "r2_min") c.r2_min = parse_double(value, key);
    else if (key == "r2_max") c.r2_max = parse_double(value, key);
    else if (key == "opt_points") c.opt_points = static_cast<std::size_t>(parse_u64(value, key));
    else if (key == "out") c.out_path = value;
    else throw std::invalid_argument("unknown key '" + key + "'");
}

inline void load_config_stream(ExperimentConfig& c, std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = detail::trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(source + ":" + std::to_string(line_number) +
                                        ": expected 'key = value'");
        const std::string key = detail::trim(stripped.substr(0, eq));
        const std::string value = detail::trim(stripped.substr(eq + 1));
        if (key.empty() || value.empty())
            throw std::invalid_argument(source + ":" + std::to_string(line_number) +
                                        ": expected 'key = value'");
        try {
            set_config_key(c, key, value);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(source + ":" + std::to_string(line_number) + ": " + e.what());
        }
    }
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open config file '" + path + "'");
    ExperimentConfig c;
    load_config_stream(c, in, path);
    return c;
}

// Shortest round-trip decimal form, locale-independent.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

// Canonical echo of the effective configuration; every line is a valid
// config line, prefixed with "# " for embedding in reports and CSV files.
inline std::string echo_config(const ExperimentConfig& c) {
    std::ostringstream out;
    auto emit = [&out](const std::string& key, const std::string& value) {
        out << "# " << key << " = " << value << "\n";
    };
    const SystemParams& p = c.params;
    emit("rho", format_double(p.rho));
    emit("theta", format_double(p.theta));
    emit("slot_seconds", format_double(p.slot_seconds));
    emit("sense_seconds", format_double(p.sense_seconds));
    emit("bandwidth_hz", format_double(p.bandwidth_hz));
    emit("rate_low", format_double(p.rate_low));
    emit("rate_high", format_double(p.rate_high));
    emit("power_low", format_double(p.power_low));
    emit("power_high", format_double(p.power_high));
    emit("snr_busy_low", format_double(p.snr_busy_low));
    emit("snr_busy_high", format_double(p.snr_busy_high));
    emit("snr_idle_low", format_double(p.snr_idle_low));
    emit("snr_idle_high", format_double(p.snr_idle_high));
    emit("pr_nack_low", format_double(p.pr_nack_low));
    emit("pr_nack_high", format_double(p.pr_nack_high));
    emit("fading_mean", format_double(p.fading_mean));
    emit("p_f", format_double(p.p_f));
    emit("p_d", format_double(p.p_d));
    emit("threshold_mode", to_string(p.threshold_mode));
    emit("threshold", format_double(c.threshold));
    if (c.noise_var) emit("noise_var", format_double(*c.noise_var));
    if (c.primary_interference_var)
        emit("primary_interference_var", format_double(*c.primary_interference_var));
    emit("sample_level_sensing", c.sample_level_sensing ? "true" : "false");
    emit("appendix_k1", c.appendix_k1 ? "true" : "false");
    emit("variable", c.variable);
    emit("sweep_min", format_double(c.sweep_min));
    emit("sweep_max", format_double(c.sweep_max));
    emit("sweep_points", std::to_string(c.sweep_points));
    emit("frames", std::to_string(c.frames));
    emit("batches", std::to_string(c.batches));
    emit("batch_length", std::to_string(c.batch_length));
    emit("queue_frames", std::to_string(c.queue_frames));
    if (c.arrival_rate) emit("arrival_rate", format_double(*c.arrival_rate));
    emit("system", c.system);
    emit("seed", std::to_string(c.seed));
    emit("trials", std::to_string(c.trials));
    emit("r1_min", format_double(c.r1_min));
    emit("r1_max", format_double(c.r1_max));
    emit("r2_min", format_double(c.r2_min));
    emit("r2_max", format_double(c.r2_max));
    emit("opt_points", std::to_string(c.opt_points));
    if (!c.out_path.empty()) emit("out", c.out_path);
    return out.str();
}

// Detector description implied by the config: explicit variances win,
// otherwise they are recovered from the configured operating point.
inline SensingConfig effective_sensing_config(const ExperimentConfig& c) {
    SensingConfig s;
    s.threshold = c.threshold;
    s.sense_duration = c.params.sense_seconds;
    s.bandwidth = c.params.bandwidth_hz;
    if (c.noise_var && c.primary_interference_var) {
        s.noise_var = *c.noise_var;
        s.primary_interference_var = *c.primary_interference_var;
    } else if (c.noise_var || c.primary_interference_var) {
        throw std::invalid_argument("noise_var and primary_interference_var must be "
                                    "given together or not at all");
    } else {
        const auto [noise, interference] = invert_operating_point(
            SensingOperatingPoint{c.params.p_f, c.params.p_d}, c.threshold,
            c.params.sense_seconds, c.params.bandwidth_hz);
        s.noise_var = noise;
        s.primary_interference_var = interference;
    }
    return s;
}

} // namespace cogcap
