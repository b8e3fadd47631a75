#include "psahara/incentive.hpp"

#include <cmath>

namespace psahara {

namespace {

void check(const IncentiveParams& p) {
    if (!(p.v > 0.0) || !(p.w >= 0.0)) throw ValidationError("incentive needs v > 0 and w >= 0");
    if (!(p.B_T > 0.0)) throw ValidationError("incentive benchmark B_T must be positive");
    if (!(p.alpha > 0.0) || !(p.beta > 0.0)) throw ValidationError("incentive needs alpha > 0 and beta > 0");
}

SaharaPiece scaled(const IncentiveParams& p, double A, double B) {
    SaharaPiece q{p.alpha, p.beta / A, (p.d - B) / A, std::pow(A, 1.0 - p.alpha), 0.0, false};
    if (std::abs(p.alpha - 1.0) < 1e-9) q.u = 0.5 * std::log(A);
    return q;
}

double log_cdf_term(double log_pref, double g) {
    double P = norm_cdf(g);
    return P > 0.0 ? exp_clamped(log_pref + std::log(P)) : 0.0;
}

}  // namespace

LinearContract incentive_contract(const IncentiveParams& p) {
    check(p);
    return LinearContract::incentive(p.w, p.v, p.B_T);
}

PiecewiseUtility incentive_utility(const IncentiveParams& p) {
    check(p);
    return PiecewiseUtility({p.B_T}, {scaled(p, p.v, 0.0), scaled(p, p.w + p.v, -p.w * p.B_T)});
}

IncentivePolicy::IncentivePolicy(const IncentiveParams& p, MarketModel market, double x0)
    : p_(p), market_(std::move(market)), x0_(x0) {
    check(p);
    lo_ = scaled(p, p.v, 0.0);
    hi_ = scaled(p, p.w + p.v, -p.w * p.B_T);
}

IncentivePolicy IncentivePolicy::solve(const IncentiveParams& p, MarketModel market, double x0) {
    IncentivePolicy pol(p, std::move(market), x0);
    const double B = p.B_T;
    // tangent slope: the lower piece lives on (-inf, B_T], the upper on [B_T, inf)
    auto x_lo = [&](double m) { return std::min(sahara_inverse_marginal(m, pol.lo_), B); };
    auto x_hi = [&](double m) { return std::max(sahara_inverse_marginal(m, pol.hi_), B); };
    auto gap = [&](double m) {
        double a = x_lo(m), b = x_hi(m);
        return (sahara_value(a, pol.lo_) - m * a) - (sahara_value(b, pol.hi_) - m * b);
    };
    double lo = 1.0, hi = 1.0;
    if (gap(1.0) < 0.0) {
        do {
            lo = hi;
            hi *= 2.0;
            if (hi > 1e300) throw SolverError("incentive tangency not bracketed");
        } while (gap(hi) < 0.0);
    } else {
        do {
            hi = lo;
            lo *= 0.5;
            if (lo < 1e-300) throw SolverError("incentive tangency not bracketed");
        } while (gap(lo) >= 0.0);
    }
    for (int it = 0; it < 400; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (gap(mid) < 0.0 ? lo : hi) = mid;
    }
    pol.m_ = 0.5 * (lo + hi);
    pol.a1_ = x_lo(pol.m_);
    pol.a2_ = x_hi(pol.m_);
    if (!(pol.a1_ < B && pol.a2_ > B)) throw SolverError("incentive envelope has no interior bridge around B_T");

    auto f = [&](double y) { return pol.wealth_at(0.0, 1.0, y) - x0; };
    double ylo = 1.0, yhi = 1.0;
    if (f(1.0) > 0.0) {
        do {
            ylo = yhi;
            yhi *= 10.0;
            if (yhi > 1e60) throw ValidationError("x0 outside the attainable budget range");
        } while (f(yhi) > 0.0);
    } else {
        do {
            yhi = ylo;
            ylo /= 10.0;
            if (ylo < 1e-60) throw ValidationError("x0 outside the attainable budget range");
        } while (f(ylo) < 0.0);
    }
    for (int it = 0; it < 300; ++it) {
        double mid = std::sqrt(ylo * yhi);
        if (mid <= ylo || mid >= yhi) break;
        (f(mid) > 0.0 ? ylo : yhi) = mid;
    }
    pol.y_ = std::sqrt(ylo * yhi);
    if (!(std::abs(f(pol.y_)) < 1e-8)) throw SolverError("incentive multiplier did not reach the budget tolerance");
    return pol;
}

double IncentivePolicy::wealth_at(double t, double xi, double y) const {
    const double T = market_.horizon();
    if (!(t < T)) throw DomainError("t >= T");
    const double R = market_.rate_integral(t, T), Th = market_.theta_sq_integral(t, T);
    if (!(Th > 0.0)) throw DomainError("incentive formula needs a nondegenerate kernel");
    const double s = std::sqrt(Th), ia = 1.0 / p_.alpha;
    const double L = std::log(y) + std::log(xi);
    const double g0 = -(std::log(m_) - L + R - 0.5 * Th) / s;
    const double g1 = g0 - s * ia, g2 = g0 + s * ia;
    const double le1 = (-1.0 + ia) * (R + 0.5 * Th * ia), le2 = (-1.0 - ia) * (R - 0.5 * Th * ia);
    const double lz0 = std::log(lo_.gamma) - L, lz1 = std::log(hi_.gamma) - L;

    double x = std::exp(-R) * (lo_.d * norm_cdf(g0) + hi_.d * norm_cdf(-g0));
    x += log_cdf_term(le1 + std::log(0.5) + ia * lz0, g1) + log_cdf_term(le1 + std::log(0.5) + ia * lz1, -g1);
    x -= log_cdf_term(le2 + std::log(0.5 * lo_.beta * lo_.beta) - ia * lz0, g2) +
         log_cdf_term(le2 + std::log(0.5 * hi_.beta * hi_.beta) - ia * lz1, -g2);
    return x;
}

IncentivePolicy::Terms IncentivePolicy::terms(double t, double xi) const {
    const double T = market_.horizon();
    if (!(t < T)) throw DomainError("t >= T");
    const double R = market_.rate_integral(t, T), Th = market_.theta_sq_integral(t, T);
    if (!(Th > 0.0)) throw DomainError("incentive formula needs a nondegenerate kernel");
    const double s = std::sqrt(Th), ia = 1.0 / p_.alpha;
    const double L = std::log(y_) + std::log(xi);
    const double g0 = -(std::log(m_) - L + R - 0.5 * Th) / s;
    const double g1 = g0 - s * ia, g2 = g0 + s * ia;
    const double le1 = (-1.0 + ia) * (R + 0.5 * Th * ia), le2 = (-1.0 - ia) * (R - 0.5 * Th * ia);
    const double lz0 = std::log(lo_.gamma) - L, lz1 = std::log(hi_.gamma) - L;

    // pieces below (k = 1) and above (k = 2) the bridge, each with its own probability weights
    auto piece_term = [&](const SaharaPiece& q, double lz, double sign) {
        double P1 = norm_cdf(sign * g1), P2 = norm_cdf(sign * g2);
        double xr = P1 > 0.0 ? exp_clamped(le1 + std::log(0.5) + ia * lz + std::log(P1)) : 0.0;
        double xrb = P2 > 0.0 ? -exp_clamped(le2 + std::log(0.5 * q.beta * q.beta) - ia * lz + std::log(P2)) : 0.0;
        double root_b = P1 > 0.0 && P2 > 0.0
                            ? exp_clamped(std::log(q.beta) - R + 0.5 * Th * ia * ia + 0.5 * (std::log(P1) + std::log(P2)))
                            : 0.0;
        return std::hypot(xr + xrb, root_b);
    };
    double s1 = ia * (piece_term(lo_, lz0, 1.0) + piece_term(hi_, lz1, -1.0));

    double lphi1 = log_norm_pdf(g1), lphi2 = log_norm_pdf(g2);
    double r_part = exp_clamped(le1 + ia * lz0 + lphi1) - exp_clamped(le1 + ia * lz1 + lphi1);
    double rb_part = exp_clamped(le2 + std::log(lo_.beta * lo_.beta) - ia * lz0 + lphi2) -
                     exp_clamped(le2 + std::log(hi_.beta * hi_.beta) - ia * lz1 + lphi2);
    double s2 = -(r_part - rb_part) / (2.0 * s);
    double s3 = -std::exp(-R) * (lo_.d - hi_.d) * norm_pdf(g0) / s;

    const Eigen::VectorXd& c = market_.merton_direction(t);
    Terms out;
    out.pi1 = s1 * c;
    out.pi2 = s2 * c;
    out.pi3 = s3 * c;
    out.total = out.pi1 + out.pi2 + out.pi3;
    return out;
}

Eigen::VectorXd incentive_portfolio(double t, double xi_t, const IncentiveParams& p, const MarketModel& M, double x0) {
    return IncentivePolicy::solve(p, M, x0).portfolio(t, xi_t);
}

}  // namespace psahara
