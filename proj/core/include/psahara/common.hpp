#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace psahara {

// Bad input data: malformed utilities, contracts, markets, panels.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Arguments outside an operation's domain (x <= d on a HARA piece, t >= T, ...).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// A numerical procedure could not produce an answer (bracketing failed etc).
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double norm_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double log_norm_pdf(double x) {
    return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi);
}

// P(a < N < b) for a <= b, evaluated on the tail where it keeps relative precision.
inline double norm_interval(double a, double b) {
    if (!(b > a)) return 0.0;
    double p = a >= 0.0 ? 0.5 * std::erfc(a / std::numbers::sqrt2) - 0.5 * std::erfc(b / std::numbers::sqrt2)
                        : norm_cdf(b) - norm_cdf(a);
    return p > 0.0 ? p : 0.0;
}

// exp that saturates instead of producing garbage near the overflow edge
inline double exp_clamped(double x) {
    if (x > 700.0) return kInf;
    if (x < -745.0) return 0.0;
    return std::exp(x);
}

inline bool close_rel(double a, double b, double rel, double abs_floor = 1.0) {
    return std::abs(a - b) <= rel * std::max({abs_floor, std::abs(a), std::abs(b)});
}

}  // namespace psahara
