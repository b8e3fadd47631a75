#pragma once
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "psahara/incentive.hpp"
#include "psahara/market.hpp"
#include "psahara/policy.hpp"
#include "psahara/volatility.hpp"

namespace psahara {

struct PricePanel {
    std::vector<std::string> dates;
    std::vector<std::string> assets;
    Eigen::MatrixXd prices;  // rows = observations, cols = assets

    void check() const;
    ReturnsPanel log_returns(double h, std::size_t first = 0, std::size_t last = SIZE_MAX) const;
};

// x0 plus the feedback rule pi(t, xi)
struct Strategy {
    double x0 = 1.0;
    std::function<Eigen::VectorXd(double, double)> portfolio;
};

Strategy make_strategy(const OptimalPolicy& policy);
Strategy make_strategy(const IncentivePolicy& policy, double x0);

struct BacktestReport {
    std::vector<double> times;
    std::vector<double> wealth;   // X at each observation
    std::vector<double> log_xi;   // tracked log xi at each observation
    std::vector<Eigen::VectorXd> positions;  // pi held over each step
    std::vector<double> returns;  // (X_{i+1} - X_i) / |X_i|
    std::vector<double> financing_residual;  // per step, relative to max(1, |X_i|)
    double simple_return = 0.0;
    double max_drawdown = 0.0;   // largest peak-to-trough fall in wealth
    double min_wealth = 0.0;
    double max_financing_residual = 0.0;
};

// Trades the panel rows [0, cells] against M (one cell per observation interval).
BacktestReport run_backtest(const Strategy& strategy, const MarketModel& M, const PricePanel& panel);
BacktestReport run_backtest(const OptimalPolicy& policy, const PricePanel& panel);

double simple_return(const BacktestReport& report);
double sharpe_ratio(const BacktestReport& report, double rf);
double sharpe_ratio(const std::vector<double>& returns, double rf);

struct SyntheticPanel {
    PricePanel panel;
    std::vector<double> log_xi;  // true kernel path
};

// GBM prices under M with exact log stepping per cell
SyntheticPanel simulate_panel(const MarketModel& M, const Eigen::VectorXd& S0, std::uint64_t seed);

struct EnsembleResult {
    std::vector<double> terminal_wealth;
    std::vector<double> simple_returns;
    std::vector<double> sharpe;  // NaN where undefined
    double max_financing_residual = 0.0;
    double max_xi_tracking_error = 0.0;  // max |log xi tracked - true| at T
};

// independent model-generated panels, run in parallel; panel i uses stream i of seed
EnsembleResult backtest_ensemble(const Strategy& strategy, const MarketModel& M, const Eigen::VectorXd& S0,
                                 std::size_t n_panels, std::uint64_t seed, double rf = 0.0);

struct MarketEstimate {
    MarketModel market;
    VolEstimate vol;
    Eigen::VectorXd mu;
};

// in-sample estimation over returns rows [0, n_est): mu_i = mean log return / h + sigma_ii^2 / 2
MarketEstimate estimate_market(const PricePanel& panel, std::size_t n_est, double h, double r, std::size_t trade_cells,
                               const std::string& method, const Eigen::VectorXd& implied_norms = {});

}  // namespace psahara
