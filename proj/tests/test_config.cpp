#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cogcap/config.hpp"
#include "cogcap/params.hpp"

namespace {

cogcap::ExperimentConfig parse(const std::string& text) {
    cogcap::ExperimentConfig c;
    std::istringstream in(text);
    cogcap::load_config_stream(c, in, "<test>");
    return c;
}

}  // namespace

TEST_CASE("defaults describe the reference operating point", "[config]") {
    const cogcap::ExperimentConfig c;
    const auto& p = c.params;
    CHECK(p.rho == 0.7);
    CHECK(p.theta == 0.02);
    CHECK(p.slot_seconds == 0.1);
    CHECK(p.sense_seconds == 0.026);
    CHECK(p.bandwidth_hz == 1000.0);
    CHECK(p.rate_low == 1000.0);
    CHECK(p.rate_high == 10000.0);
    CHECK(p.power_low == 1.0);
    CHECK(p.power_high == 2.0);
    CHECK_THAT(p.snr_busy_low, Catch::Matchers::WithinRel(std::pow(10.0, 0.69), 1e-12));
    CHECK_THAT(p.snr_busy_high, Catch::Matchers::WithinRel(10.0, 1e-12));
    CHECK_THAT(p.snr_idle_low, Catch::Matchers::WithinRel(std::pow(10.0, 3.07), 1e-12));
    CHECK_THAT(p.snr_idle_high, Catch::Matchers::WithinRel(1e4, 1e-12));
    CHECK(p.pr_nack_low == 0.3);
    CHECK(p.pr_nack_high == 0.9);
    CHECK(p.p_f == 0.0012);
    CHECK(p.p_d == 0.7705);
    CHECK(p.fading_mean == 1.0);
    CHECK(p.threshold_mode == cogcap::ThresholdMode::HighRateApprox);
    CHECK(c.threshold == 1.7);
    CHECK(c.frames == 1000000);
    CHECK(c.batches == 100);
    CHECK(c.batch_length == 10);
    CHECK_FALSE(c.noise_var.has_value());
    CHECK_NOTHROW(cogcap::validate(p));
}

TEST_CASE("parsing handles comments, blanks and repeated keys", "[config]") {
    const auto c = parse(
        "# experiment description\n"
        "\n"
        "theta = 0.05   # overridden below\n"
        "rho=0.4\n"
        "  theta =0.08\n"
        "system = feedback\n"
        "appendix_k1 = true\n"
        "seed = 77\n");
    CHECK(c.params.theta == 0.08);
    CHECK(c.params.rho == 0.4);
    CHECK(c.system == "feedback");
    CHECK(c.appendix_k1);
    CHECK(c.seed == 77);
}

TEST_CASE("dB keys convert at the boundary", "[config]") {
    const auto c = parse("snr_busy_low_db = 10\nsnr_idle_high = 123.5\n");
    CHECK_THAT(c.params.snr_busy_low, Catch::Matchers::WithinRel(10.0, 1e-12));
    CHECK(c.params.snr_idle_high == 123.5);
}

TEST_CASE("threshold mode names", "[config]") {
    CHECK(parse("threshold_mode = exact\n").params.threshold_mode ==
          cogcap::ThresholdMode::Exact);
    CHECK(parse("threshold_mode = paper\n").params.threshold_mode ==
          cogcap::ThresholdMode::HighRateApprox);
    CHECK_THROWS_AS(parse("threshold_mode = bogus\n"), std::invalid_argument);
}

TEST_CASE("parse errors carry the source location", "[config]") {
    using Catch::Matchers::ContainsSubstring;
    CHECK_THROWS_MATCHES(parse("rho = 0.5\nwidgets = 3\n"), std::invalid_argument,
                         Catch::Matchers::MessageMatches(ContainsSubstring("<test>:2")));
    CHECK_THROWS_MATCHES(parse("rho = 0.5\nwidgets = 3\n"), std::invalid_argument,
                         Catch::Matchers::MessageMatches(ContainsSubstring("widgets")));
    CHECK_THROWS_MATCHES(parse("rho\n"), std::invalid_argument,
                         Catch::Matchers::MessageMatches(ContainsSubstring("<test>:1")));
    CHECK_THROWS_MATCHES(parse("theta = fast\n"), std::invalid_argument,
                         Catch::Matchers::MessageMatches(ContainsSubstring("fast")));
    CHECK_THROWS_AS(parse("frames = -2\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse("appendix_k1 = maybe\n"), std::invalid_argument);
    CHECK_THROWS_AS(cogcap::load_config("/nonexistent/path.cfg"), std::invalid_argument);
}

TEST_CASE("echoed configuration re-parses to the same state", "[config]") {
    cogcap::ExperimentConfig c;
    c.params.theta = 0.037;
    c.params.snr_idle_low = 1234.5;
    c.params.threshold_mode = cogcap::ThresholdMode::Exact;
    c.appendix_k1 = true;
    c.arrival_rate = 17.25;
    c.noise_var = 0.99;
    c.primary_interference_var = 1.01;
    c.out_path = "sweep.csv";
    c.seed = 424242;

    const std::string echoed = cogcap::echo_config(c);
    for (const auto& line : {"# theta = 0.037", "# threshold_mode = exact",
                             "# appendix_k1 = true", "# out = sweep.csv"})
        CHECK_THAT(echoed, Catch::Matchers::ContainsSubstring(line));

    // strip the comment prefix and feed it back in
    std::string plain = echoed;
    std::string::size_type pos = 0;
    while ((pos = plain.find("# ", pos)) != std::string::npos) plain.erase(pos, 2);
    const auto back = parse(plain);
    CHECK(back.params.theta == c.params.theta);
    CHECK(back.params.snr_idle_low == c.params.snr_idle_low);
    CHECK(back.params.threshold_mode == c.params.threshold_mode);
    CHECK(back.appendix_k1 == c.appendix_k1);
    CHECK(back.arrival_rate == c.arrival_rate);
    CHECK(back.noise_var == c.noise_var);
    CHECK(back.out_path == c.out_path);
    CHECK(back.seed == c.seed);
    CHECK(back.frames == c.frames);
}

TEST_CASE("sensing configuration resolution", "[config]") {
    cogcap::ExperimentConfig c;
    const auto derived = cogcap::effective_sensing_config(c);
    CHECK_THAT(derived.noise_var, Catch::Matchers::WithinAbs(0.9990715387462566, 1e-9));
    CHECK_THAT(derived.primary_interference_var,
               Catch::Matchers::WithinAbs(1.0009052876537283, 1e-9));
    CHECK(derived.threshold == 1.7);
    CHECK(derived.sense_duration == 0.026);
    CHECK(derived.bandwidth == 1000.0);

    c.noise_var = 1.5;
    CHECK_THROWS_AS(cogcap::effective_sensing_config(c), std::invalid_argument);
    c.primary_interference_var = 2.5;
    const auto explicit_vars = cogcap::effective_sensing_config(c);
    CHECK(explicit_vars.noise_var == 1.5);
    CHECK(explicit_vars.primary_interference_var == 2.5);
}

TEST_CASE("bundled reference config loads and validates", "[config]") {
    const char* dir = std::getenv("COGCAP_CONFIG_DIR");
    if (!dir) SKIP("COGCAP_CONFIG_DIR not set");
    const auto c = cogcap::load_config(std::string(dir) + "/paper.cfg");
    CHECK_NOTHROW(cogcap::validate(c.params));
    CHECK(c.params.theta == 0.02);
    CHECK(c.params.rho == 0.7);
    CHECK_THAT(c.params.snr_busy_low, Catch::Matchers::WithinRel(std::pow(10.0, 0.69), 1e-12));
    CHECK_THAT(c.params.snr_idle_high, Catch::Matchers::WithinRel(1e4, 1e-12));
    CHECK(c.params.p_f == 0.0012);
    CHECK(c.params.p_d == 0.7705);
    CHECK(c.threshold == 1.7);
    CHECK_FALSE(c.noise_var.has_value());  // variances left to the inversion
}
