// Worked example: size a secondary link against a delay constraint.
//
// Prints the capacity, spectral radius and power draw of both systems at
// the reference operating point, then sweeps the QoS exponent and writes
// link_study.csv for plotting.

#include <cstdio>
#include <fstream>

#include "cogcap/capacity.hpp"
#include "cogcap/config.hpp"
#include "cogcap/markov.hpp"
#include "cogcap/params.hpp"

int main() {
    cogcap::SystemParams p;

    const auto nf = cogcap::build_no_feedback_chain(p);
    const auto fb = cogcap::build_feedback_chain(p, false);
    const auto rn = cogcap::effective_capacity(nf, p.theta);
    const auto rf = cogcap::effective_capacity(fb, p.theta);

    std::printf("theta = %g 1/bit, slot = %g s, bandwidth = %g Hz\n\n", p.theta,
                p.slot_seconds, p.bandwidth_hz);
    std::printf("%-22s %14s %14s\n", "", "no_feedback", "feedback");
    std::printf("%-22s %14.4f %14.4f\n", "ec (bits/s/Hz)", rn.ec_normalized, rf.ec_normalized);
    std::printf("%-22s %14.4f %14.4f\n", "ec (bits/frame)", rn.ec_bits_per_frame,
                rf.ec_bits_per_frame);
    std::printf("%-22s %14.6f %14.6f\n", "spectral radius", rn.spectral_radius,
                rf.spectral_radius);
    std::printf("%-22s %14.4f %14.4f\n", "avg power", rn.avg_power, rf.avg_power);
    std::printf("%-22s %14.4f %14.4f\n", "mean rate (bits/s/Hz)", cogcap::mean_service_rate(nf),
                cogcap::mean_service_rate(fb));
    std::printf("\nfeedback gain at theta = %g: %.1f%%\n", p.theta,
                100.0 * (rf.ec_bits_per_frame / rn.ec_bits_per_frame - 1.0));

    const auto grid = cogcap::detail::linspace(0.002, 0.1, 50);
    const auto rows = cogcap::sweep(p, cogcap::SweepVariable::Theta, grid);
    std::ofstream csv("link_study.csv");
    csv << "x,ec_no_feedback,ec_feedback,pavg_no_feedback,pavg_feedback,pf,pd\n";
    for (const auto& row : rows)
        csv << cogcap::format_double(row.x) << ',' << cogcap::format_double(row.ec_no_feedback)
            << ',' << cogcap::format_double(row.ec_feedback) << ','
            << cogcap::format_double(row.pavg_no_feedback) << ','
            << cogcap::format_double(row.pavg_feedback) << ',' << cogcap::format_double(row.p_f)
            << ',' << cogcap::format_double(row.p_d) << "\n";
    std::printf("wrote link_study.csv (%zu rows)\n", rows.size());
    return 0;
}
