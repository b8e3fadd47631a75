#pragma once
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "psahara/market.hpp"
#include "psahara/utility.hpp"

namespace psahara {

struct WealthComponents {
    std::vector<double> XD, XB, XR, XRbar;  // XD indexed by k = 1..n (entry 0 is 0), others by piece k = 0..n
    double D = 0.0, B = 0.0, R = 0.0, Rbar = 0.0;
    double total = 0.0;
};

struct PortfolioTerms {
    Eigen::VectorXd pi1, pi2, pi3, pi4, total;
    std::vector<double> b;  // b_{t,k} per piece (0 for linear pieces)
};

// Scalar multipliers s_i with pi^(i) = s_i * (sigma sigma^T)^{-1}(mu - r 1).
struct Exposure {
    double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
    double total() const { return s1 + s2 + s3 + s4; }
};

class OptimalPolicy {
public:
    OptimalPolicy(PiecewiseUtility envelope, MarketModel market, double x0, double y_star);
    static OptimalPolicy solve(PiecewiseUtility envelope, MarketModel market, double x0);
    OptimalPolicy with_multiplier(double y) const { return OptimalPolicy(envelope_, market_, x0_, y); }

    const PiecewiseUtility& envelope() const { return envelope_; }
    const MarketModel& market() const { return market_; }
    double x0() const { return x0_; }
    double y_star() const { return y_; }
    double horizon() const { return market_.horizon(); }

    // slope chain with sentinels, snapped so that it is exactly nonincreasing
    double gamma_minus(std::size_t k) const { return gm_[k]; }
    double gamma_plus(std::size_t k) const { return gp_[k]; }

    WealthComponents wealth(double t, double xi) const;
    double wealth_total(double t, double xi) const;
    PortfolioTerms portfolio(double t, double xi) const;
    Exposure exposure(double t, double xi) const;
    double terminal_wealth(double xi_T) const;

    // budget X_0(y) at t = 0, xi_0 = 1, and its derivative in y
    double budget(double y) const;
    double budget_derivative(double y) const;

private:
    struct Eval;
    void evaluate(double t, double xi, double y, Eval& out, bool want_components) const;

    PiecewiseUtility envelope_;
    MarketModel market_;
    double x0_ = 0.0, y_ = 1.0;
    std::vector<double> gm_, gp_, log_gm_, log_gp_;
};

double g0(double z, double t, double T, const MarketModel& M);
double g1k(double z, double t, double T, const MarketModel& M, double alpha_k);
double g2k(double z, double t, double T, const MarketModel& M, double alpha_k);

double terminal_wealth(double y_xi, const PiecewiseUtility& E);
double solve_multiplier(const PiecewiseUtility& E, const MarketModel& M, double x0);
WealthComponents wealth_components(double t, double xi_t, const OptimalPolicy& policy);
PortfolioTerms portfolio(double t, double xi_t, const OptimalPolicy& policy);
// (pi/X limit as xi -> 0, limit as xi -> inf), both as asset-space vectors at time t
std::pair<Eigen::VectorXd, Eigen::VectorXd> asymptotic_limits(const OptimalPolicy& policy, double t = 0.0);

}  // namespace psahara
