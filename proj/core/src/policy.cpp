#include "psahara/policy.hpp"

#include <cmath>
#include <sstream>

#include "psahara/envelope.hpp"

namespace psahara {

namespace {

struct Chain {
    std::vector<double> gm, gp;  // gm[k], k = 1..n+1 (gm[0] unused); gp[k], k = 0..n
};

Chain slope_chain(const PiecewiseUtility& E) {
    auto c = is_concave(E);
    if (!c.concave) throw ValidationError("utility is not concave: " + c.reason);
    const std::size_t n = E.n();
    Chain ch;
    ch.gm.assign(n + 2, kInf);
    ch.gp.assign(n + 1, kInf);
    ch.gm[n + 1] = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        ch.gm[k] = E.left_slope(k);
        ch.gp[k] = std::min(E.right_slope(k), ch.gm[k]);
    }
    return ch;
}

double wealth_at(double y, const PiecewiseUtility& E, const Chain& ch) {
    if (!(y > 0.0)) throw DomainError("terminal wealth needs y * xi > 0");
    const std::size_t n = E.n();
    for (std::size_t k = 0; k <= n; ++k) {
        if (y > ch.gm[k + 1] && y < ch.gp[k]) return sahara_inverse_marginal(y, E.piece(k));
        if (k < n && y >= ch.gp[k + 1] && y <= ch.gm[k + 1]) return E.breakpoint(k + 1);
    }
    throw SolverError("terminal wealth: slope chain does not cover y");
}

double exp_log_product(double log_pref, double p) { return p > 0.0 ? exp_clamped(log_pref + std::log(p)) : 0.0; }

}  // namespace

struct OptimalPolicy::Eval {
    Exposure ex;
    WealthComponents comp;
    std::vector<double> b;
};

OptimalPolicy::OptimalPolicy(PiecewiseUtility envelope, MarketModel market, double x0, double y_star)
    : envelope_(std::move(envelope)), market_(std::move(market)), x0_(x0), y_(y_star) {
    if (!(y_ > 0.0) || !std::isfinite(y_)) throw ValidationError("multiplier y* must be positive and finite");
    if (!std::isfinite(x0_)) throw ValidationError("x0 must be finite");
    Chain ch = slope_chain(envelope_);
    gm_ = ch.gm;
    gp_ = ch.gp;
    for (double g : gm_) log_gm_.push_back(std::log(g));
    for (double g : gp_) log_gp_.push_back(std::log(g));
}

OptimalPolicy OptimalPolicy::solve(PiecewiseUtility envelope, MarketModel market, double x0) {
    double y = solve_multiplier(envelope, market, x0);
    return OptimalPolicy(std::move(envelope), std::move(market), x0, y);
}

void OptimalPolicy::evaluate(double t, double xi, double y, Eval& out, bool want) const {
    const double T = market_.horizon();
    if (!(t < T)) throw DomainError("t >= T: use terminal_wealth");
    if (!(xi > 0.0)) throw DomainError("xi must be positive");
    const std::size_t n = envelope_.n();
    const double R = market_.rate_integral(t, T);
    const double Th = market_.theta_sq_integral(t, T);
    const double disc = std::exp(-R);
    const double L = std::log(y) + std::log(xi);

    auto& c = out.comp;
    if (want) {
        c = WealthComponents{};
        c.XD.assign(n + 1, 0.0);
        c.XB.assign(n + 1, 0.0);
        c.XR.assign(n + 1, 0.0);
        c.XRbar.assign(n + 1, 0.0);
        out.b.assign(n + 1, 0.0);
    }
    out.ex = Exposure{};

    if (!(Th > 0.0)) {
        // theta = 0 on [t, T]: Z_{t,T} = e^{-R} is deterministic
        double yx = y * xi * disc;
        Chain ch{gm_, gp_};
        double x = wealth_at(yx, envelope_, ch);
        double total = disc * x;
        if (want) {
            bool placed = false;
            for (std::size_t k = 1; k <= n && !placed; ++k)
                if (x == envelope_.breakpoint(k) && yx >= gp_[k] && yx <= gm_[k]) {
                    c.XD[k] = total;
                    placed = true;
                }
            if (!placed) {
                std::size_t k = envelope_.locate(x);
                const auto& p = envelope_.piece(k);
                double z = std::log(p.gamma) - std::log(yx);
                c.XB[k] = disc * p.d;
                c.XR[k] = disc * 0.5 * std::exp(z / p.alpha);
                c.XRbar[k] = p.beta > 0.0 ? -disc * 0.5 * p.beta * p.beta * std::exp(-z / p.alpha) : 0.0;
            }
            for (std::size_t k = 0; k <= n; ++k) {
                c.D += c.XD[k];
                c.B += c.XB[k];
                c.R += c.XR[k];
                c.Rbar += c.XRbar[k];
            }
        }
        c.total = total;
        return;
    }

    const double s = std::sqrt(Th);
    auto g0l = [&](double log_gamma) { return -(log_gamma - L + R - 0.5 * Th) / s; };

    double sum_d = 0.0, sum_b = 0.0, sum_r = 0.0, sum_rb = 0.0;
    double acc2 = 0.0, acc3 = 0.0, acc4 = 0.0, s1 = 0.0;

    for (std::size_t k = 1; k <= n; ++k) {
        if (!(gp_[k] < gm_[k])) continue;
        double gA = g0l(log_gp_[k]), gB = g0l(log_gm_[k]);
        double a = envelope_.breakpoint(k);
        double xd = disc * a * norm_interval(gB, gA);
        sum_d += xd;
        if (want) c.XD[k] = xd;
        acc3 += a * (norm_pdf(gA) - norm_pdf(gB));
    }

    for (std::size_t k = 0; k <= n; ++k) {
        const SaharaPiece& p = envelope_.piece(k);
        if (p.linear()) continue;
        const double gU = g0l(log_gp_[k]), gL = g0l(log_gm_[k + 1]);
        const double ia = 1.0 / p.alpha, sa = s * ia;
        const double lz = std::log(p.gamma) - L;

        double xb = disc * p.d * norm_interval(gU, gL);
        acc4 += p.d * (norm_pdf(gL) - norm_pdf(gU));

        const double g1U = gU - sa, g1L = gL - sa;
        const double lpR = (-1.0 + ia) * (R + 0.5 * Th * ia) + std::log(0.5) + ia * lz;
        const double P1 = norm_interval(g1U, g1L);
        const double xr = exp_log_product(lpR, P1);
        acc2 += exp_clamped(lpR + log_norm_pdf(g1L)) - exp_clamped(lpR + log_norm_pdf(g1U));

        double xrb = 0.0, sqrt_b = 0.0;
        if (p.beta > 0.0) {
            const double g2U = gU + sa, g2L = gL + sa;
            const double lpRb = (-1.0 - ia) * (R - 0.5 * Th * ia) + std::log(0.5 * p.beta * p.beta) - ia * lz;
            const double P2 = norm_interval(g2U, g2L);
            xrb = -exp_log_product(lpRb, P2);
            acc2 -= exp_clamped(lpRb + log_norm_pdf(g2L)) - exp_clamped(lpRb + log_norm_pdf(g2U));
            if (P1 > 0.0 && P2 > 0.0)
                sqrt_b = exp_clamped(std::log(p.beta) - R + 0.5 * Th * ia * ia + 0.5 * (std::log(P1) + std::log(P2)));
        }
        s1 += ia * std::hypot(xr + xrb, sqrt_b);

        sum_b += xb;
        sum_r += xr;
        sum_rb += xrb;
        if (want) {
            c.XB[k] = xb;
            c.XR[k] = xr;
            c.XRbar[k] = xrb;
            out.b[k] = sqrt_b * sqrt_b;
        }
    }
    out.ex.s1 = s1;
    out.ex.s2 = -acc2 / s;
    out.ex.s3 = -disc * acc3 / s;
    out.ex.s4 = -disc * acc4 / s;
    c.D = sum_d;
    c.B = sum_b;
    c.R = sum_r;
    c.Rbar = sum_rb;
    c.total = sum_d + sum_b + sum_r + sum_rb;
}

WealthComponents OptimalPolicy::wealth(double t, double xi) const {
    Eval e;
    evaluate(t, xi, y_, e, true);
    return e.comp;
}

double OptimalPolicy::wealth_total(double t, double xi) const {
    Eval e;
    evaluate(t, xi, y_, e, false);
    return e.comp.total;
}

Exposure OptimalPolicy::exposure(double t, double xi) const {
    Eval e;
    evaluate(t, xi, y_, e, false);
    return e.ex;
}

PortfolioTerms OptimalPolicy::portfolio(double t, double xi) const {
    Eval e;
    evaluate(t, xi, y_, e, true);
    const Eigen::VectorXd& c = market_.merton_direction(t);
    PortfolioTerms out;
    out.pi1 = e.ex.s1 * c;
    out.pi2 = e.ex.s2 * c;
    out.pi3 = e.ex.s3 * c;
    out.pi4 = e.ex.s4 * c;
    out.total = out.pi1 + out.pi2 + out.pi3 + out.pi4;
    out.b = e.b;
    return out;
}

double OptimalPolicy::terminal_wealth(double xi_T) const {
    Chain ch{gm_, gp_};
    return wealth_at(y_ * xi_T, envelope_, ch);
}

double OptimalPolicy::budget(double y) const {
    Eval e;
    evaluate(0.0, 1.0, y, e, false);
    return e.comp.total;
}

double OptimalPolicy::budget_derivative(double y) const {
    Eval e;
    evaluate(0.0, 1.0, y, e, false);
    return -e.ex.total() / y;
}

double g0(double z, double t, double T, const MarketModel& M) {
    if (!(t < T)) throw DomainError("g0 needs t < T");
    if (!(z >= 0.0)) throw DomainError("g0 needs z > 0");
    double Th = M.theta_sq_integral(t, T);
    if (!(Th > 0.0)) throw DomainError("g0 undefined for zero kernel variance");
    return -(std::log(z) + M.rate_integral(t, T) - 0.5 * Th) / std::sqrt(Th);
}

double g1k(double z, double t, double T, const MarketModel& M, double alpha_k) {
    if (!(alpha_k > 0.0)) throw DomainError("g1k needs alpha_k > 0");
    return g0(z, t, T, M) - std::sqrt(M.theta_sq_integral(t, T)) / alpha_k;
}

double g2k(double z, double t, double T, const MarketModel& M, double alpha_k) {
    if (!(alpha_k > 0.0)) throw DomainError("g2k needs alpha_k > 0");
    return g0(z, t, T, M) + std::sqrt(M.theta_sq_integral(t, T)) / alpha_k;
}

double terminal_wealth(double y_xi, const PiecewiseUtility& E) { return wealth_at(y_xi, E, slope_chain(E)); }

double solve_multiplier(const PiecewiseUtility& E, const MarketModel& M, double x0) {
    OptimalPolicy pol(E, M, x0, 1.0);
    auto f = [&](double y) { return pol.budget(y) - x0; };
    double lo = 1.0, hi = 1.0;
    double f1 = f(1.0);
    if (f1 == 0.0) return 1.0;
    bool found = false;
    if (f1 > 0.0) {
        for (int i = 0; i < 60; ++i) {
            hi = lo * 10.0;
            if (f(hi) <= 0.0) {
                found = true;
                break;
            }
            lo = hi;
        }
    } else {
        for (int i = 0; i < 60; ++i) {
            lo = hi / 10.0;
            if (f(lo) >= 0.0) {
                found = true;
                break;
            }
            hi = lo;
        }
    }
    if (!found) {
        std::ostringstream os;
        os << "x0 = " << x0 << " outside the attainable budget range";
        throw ValidationError(os.str());
    }
    for (int it = 0; it < 200; ++it) {
        double mid = std::sqrt(lo * hi);
        if (mid <= lo || mid >= hi) break;
        double v = f(mid);
        if (v > 0.0) lo = mid;
        else if (v < 0.0) hi = mid;
        else return mid;
    }
    double y = std::sqrt(lo * hi);
    double fy = f(y);
    for (int it = 0; it < 5 && fy != 0.0; ++it) {
        double dy = pol.budget_derivative(y);
        if (!(dy < 0.0) || !std::isfinite(dy)) break;
        double yn = y - fy / dy;
        if (!(yn >= lo && yn <= hi)) break;
        double fn = f(yn);
        if (!(std::abs(fn) < std::abs(fy))) break;
        y = yn;
        fy = fn;
    }
    if (!(std::abs(fy) < 1e-8)) throw SolverError("multiplier solve did not reach the 1e-8 budget residual");
    return y;
}

WealthComponents wealth_components(double t, double xi_t, const OptimalPolicy& policy) { return policy.wealth(t, xi_t); }

PortfolioTerms portfolio(double t, double xi_t, const OptimalPolicy& policy) { return policy.portfolio(t, xi_t); }

std::pair<Eigen::VectorXd, Eigen::VectorXd> asymptotic_limits(const OptimalPolicy& policy, double t) {
    const auto& E = policy.envelope();
    double a0 = E.pieces().front().alpha, an = E.pieces().back().alpha;
    if (!(a0 > 0.0) || !(an > 0.0)) throw DomainError("asymptotic limits need alpha_0 > 0 and alpha_n > 0");
    const Eigen::VectorXd& c = policy.market().merton_direction(t);
    return {c / an, -c / a0};
}

}  // namespace psahara
