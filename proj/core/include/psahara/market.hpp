#pragma once
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "psahara/common.hpp"

namespace psahara {

// Piecewise-constant deterministic coefficients on a uniform grid of `cells` over [0, T].
class MarketModel {
public:
    struct Cell {
        double r = 0.0;
        Eigen::VectorXd mu;     // m
        Eigen::MatrixXd sigma;  // m x q
    };

    MarketModel() = default;
    // allow_zero_premium relaxes mu_i > r to mu_i >= r (degenerate theta = 0 controls)
    MarketModel(double T, std::vector<Cell> cells, bool allow_zero_premium = false);
    static MarketModel constant(double T, std::size_t cells, double r, const Eigen::VectorXd& mu,
                                const Eigen::MatrixXd& sigma, bool allow_zero_premium = false);
    // scalar one-asset shorthand
    static MarketModel constant(double T, std::size_t cells, double r, double mu, double sigma,
                                bool allow_zero_premium = false);

    double horizon() const { return T_; }
    std::size_t cells() const { return cells_.size(); }
    double dt() const { return T_ / static_cast<double>(cells_.size()); }
    std::size_t assets() const { return m_; }
    std::size_t factors() const { return q_; }
    bool allows_zero_premium() const { return allow_zero_premium_; }

    std::size_t cell_index(double t) const;
    const Cell& cell(std::size_t i) const { return cells_.at(i); }
    double r(double t) const { return cells_[cell_index(t)].r; }
    const Eigen::VectorXd& mu(double t) const { return cells_[cell_index(t)].mu; }
    const Eigen::MatrixXd& sigma(double t) const { return cells_[cell_index(t)].sigma; }
    const Eigen::VectorXd& theta(double t) const { return theta_[cell_index(t)]; }
    // (sigma sigma^T)^{-1} (mu - r 1): the Merton direction in asset space
    const Eigen::VectorXd& merton_direction(double t) const { return merton_[cell_index(t)]; }
    double theta_sq(double t) const { return theta_sq_[cell_index(t)]; }

    double rate_integral(double t0, double t1) const;
    double theta_sq_integral(double t0, double t1) const;

private:
    double cumulative(const std::vector<double>& cum, const std::vector<double>& rate, double t) const;

    double T_ = 0.0;
    std::size_t m_ = 0, q_ = 0;
    bool allow_zero_premium_ = false;
    std::vector<Cell> cells_;
    std::vector<Eigen::VectorXd> theta_, merton_;
    std::vector<double> theta_sq_, rates_, cum_r_, cum_th_;
};

Eigen::VectorXd theta(double t, const MarketModel& M);
double theta_sq_integral(double t, double T, const MarketModel& M);
double rate_integral(double t, double T, const MarketModel& M);

struct LogNormalLaw {
    double mean;
    double variance;
};

// law of log Z_{t,T} = log(xi_T / xi_t)
LogNormalLaw kernel_terminal_law(double t, double T, double xi_t, const MarketModel& M);

}  // namespace psahara
