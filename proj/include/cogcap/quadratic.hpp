#pragma once
// Closed-form dominant-root helper. The reduced characteristic polynomials
// produced by the retransmission chains have the shape
//     lambda^2 - a lambda - b = 0,  a >= 0, b >= 0,
// whose unique positive root is returned here.

#include <cmath>
#include <stdexcept>

namespace cogcap {

enum class SystemKind { NoFeedback, Feedback };

inline const char* to_string(SystemKind kind) {
    return kind == SystemKind::NoFeedback ? "no_feedback" : "feedback";
}

struct QuadraticCoefficients {
    double a = 0.0;
    double b = 0.0;
    SystemKind system_tag = SystemKind::NoFeedback;
};

inline double positive_quadratic_root(const QuadraticCoefficients& q) {
    if (!std::isfinite(q.a) || !std::isfinite(q.b) || q.a < 0.0 || q.b < 0.0)
        throw std::domain_error("positive_quadratic_root: coefficients must be finite and nonnegative");
    if (q.a == 0.0 && q.b == 0.0)
        throw std::domain_error("positive_quadratic_root: degenerate coefficients (a = b = 0)");
    return 0.5 * (q.a + std::sqrt(q.a * q.a + 4.0 * q.b));
}

} // namespace cogcap
