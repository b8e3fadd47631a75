#pragma once
#include <Eigen/Dense>

#include "psahara/market.hpp"
#include "psahara/utility.hpp"

namespace psahara {

// Manager paid w (X_T - B_T)^+ + v X_T with SAHARA(alpha, beta, d) preferences over pay.
struct IncentiveParams {
    double w = 0.2;
    double v = 0.02;
    double B_T = 1.0;
    double alpha = 2.0;
    double beta = 1.0;
    double d = 0.0;
};

LinearContract incentive_contract(const IncentiveParams& p);
// the composed (non-concave) utility in closed form: one SAHARA piece on each side of B_T
PiecewiseUtility incentive_utility(const IncentiveParams& p);

class IncentivePolicy {
public:
    struct Terms {
        Eigen::VectorXd pi1, pi2, pi3, total;
    };

    static IncentivePolicy solve(const IncentiveParams& p, MarketModel market, double x0);

    const IncentiveParams& params() const { return p_; }
    double bridge_slope() const { return m_; }
    double tangent_left() const { return a1_; }
    double tangent_right() const { return a2_; }
    double y_star() const { return y_; }

    double wealth(double t, double xi) const { return wealth_at(t, xi, y_); }
    Terms terms(double t, double xi) const;
    Eigen::VectorXd portfolio(double t, double xi) const { return terms(t, xi).total; }

private:
    IncentivePolicy(const IncentiveParams& p, MarketModel market, double x0);
    double wealth_at(double t, double xi, double y) const;

    IncentiveParams p_;
    MarketModel market_;
    double x0_;
    SaharaPiece lo_{}, hi_{};
    double m_ = 0.0, a1_ = 0.0, a2_ = 0.0, y_ = 1.0;
};

Eigen::VectorXd incentive_portfolio(double t, double xi_t, const IncentiveParams& p, const MarketModel& M, double x0);

}  // namespace psahara
