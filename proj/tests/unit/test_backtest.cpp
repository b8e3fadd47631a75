#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "psahara/backtest.hpp"
#include "psahara/envelope.hpp"

using namespace psahara;

namespace {

OptimalPolicy example_policy(const MarketModel& M) {
    return OptimalPolicy::solve(concave_envelope(fixtures::example_raw()).envelope, M, 1.0);
}

}  // namespace

TEST(Performance, SimpleReturn) {
    BacktestReport r;
    r.wealth = {1.0, 0.8, 1.1};
    EXPECT_NEAR(simple_return(r), 0.1, 1e-15);
    r.wealth = {0.0, 1.0};
    EXPECT_THROW(simple_return(r), DomainError);
}

TEST(Performance, SharpeHandCases) {
    EXPECT_NEAR(sharpe_ratio(std::vector<double>{0.01, 0.03}, 0.02), 0.0, 1e-15);
    EXPECT_THROW(sharpe_ratio(std::vector<double>{0.01, 0.01}, 0.0), DomainError);
    EXPECT_THROW(sharpe_ratio(std::vector<double>{0.01}, 0.0), ValidationError);
}

TEST(Performance, SharpeGenerative) {
    const double mu = 0.001, sd = 0.01, rf = 0.0002;
    const int n = 252;
    const double target = (mu - rf) / sd, se = std::sqrt((1.0 + 0.5 * target * target) / n);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> N(mu, sd);
    std::vector<double> r(n);
    for (auto& x : r) x = N(rng);
    EXPECT_LT(std::abs(sharpe_ratio(r, rf) - target), 3 * se);
}

TEST(Backtest, SelfFinancingAndExactKernelTracking) {
    const auto M = fixtures::scalar_market();
    const auto P = example_policy(M);
    const auto sp = simulate_panel(M, Eigen::VectorXd::Constant(1, 100.0), 42);
    const auto rep = run_backtest(P, sp.panel);
    ASSERT_EQ(rep.wealth.size(), M.cells() + 1);
    EXPECT_LT(rep.max_financing_residual, 1e-12);
    for (std::size_t i = 0; i < rep.log_xi.size(); ++i) ASSERT_NEAR(rep.log_xi[i], sp.log_xi[i], 1e-12);
    EXPECT_DOUBLE_EQ(rep.simple_return, (rep.wealth.back() - rep.wealth.front()) / rep.wealth.front());
    EXPECT_GE(rep.max_drawdown, 0.0);
}

TEST(Backtest, MultiAssetIncompleteTracking) {
    Eigen::MatrixXd sigma(2, 3);
    sigma << 0.2, 0.05, 0.1, 0.03, 0.15, -0.1;
    Eigen::VectorXd mu(2);
    mu << 0.07, 0.09;
    const auto M = MarketModel::constant(1.0, 126, 0.02, mu, sigma);
    const auto P = example_policy(M);
    const auto sp = simulate_panel(M, Eigen::VectorXd::Constant(2, 50.0), 3);
    const auto rep = run_backtest(P, sp.panel);
    EXPECT_NEAR(rep.log_xi.back(), sp.log_xi.back(), 1e-12);
    EXPECT_LT(rep.max_financing_residual, 1e-12);
}

TEST(Backtest, ZeroPremiumHoldsCash) {
    const auto M = MarketModel::constant(1.0, 252, 0.03, 0.03, 0.1, true);
    const auto P = OptimalPolicy::solve(PiecewiseUtility(SaharaPiece{2.0, 1.0, 0.0, 1.0, 0.0}), M, 1.0);
    const auto sp = simulate_panel(M, Eigen::VectorXd::Constant(1, 100.0), 5);
    const auto rep = run_backtest(P, sp.panel);
    for (const auto& p : rep.positions) ASSERT_EQ(p.norm(), 0.0);
    EXPECT_NEAR(rep.wealth.back(), std::exp(0.03), 1e-12);
}

TEST(Backtest, PanelValidation) {
    const auto M = fixtures::scalar_market(4);
    const auto P = example_policy(M);
    PricePanel pp;
    pp.prices = Eigen::MatrixXd::Constant(5, 1, 100.0);
    EXPECT_NO_THROW(run_backtest(P, pp));
    pp.prices(2, 0) = -1.0;
    EXPECT_THROW(run_backtest(P, pp), ValidationError);
    pp.prices(2, 0) = 100.0;
    pp.dates = {"2020-01-01", "2020-01-02", "2020-01-02", "2020-01-03", "2020-01-06"};
    EXPECT_THROW(run_backtest(P, pp), ValidationError);
    pp.dates.clear();
    pp.prices = Eigen::MatrixXd::Constant(4, 1, 100.0);
    EXPECT_THROW(run_backtest(P, pp), ValidationError);
}

TEST(Backtest, EnsembleDeterministic) {
    const auto M = fixtures::scalar_market(63, 0.25);
    const auto P = example_policy(M);
    const auto a = backtest_ensemble(make_strategy(P), M, Eigen::VectorXd::Constant(1, 100.0), 40, 9);
    const auto b = backtest_ensemble(make_strategy(P), M, Eigen::VectorXd::Constant(1, 100.0), 40, 9);
    EXPECT_EQ(a.terminal_wealth, b.terminal_wealth);
    EXPECT_LT(a.max_xi_tracking_error, 1e-12);
}

TEST(Backtest, EstimateMarketRecoversParameters) {
    const auto truth = MarketModel::constant(40.0, 40 * 252, 0.02, 0.09, 0.25);
    const auto sp = simulate_panel(truth, Eigen::VectorXd::Constant(1, 10.0), 17);
    const std::size_t n_est = 32 * 252;
    const auto est = estimate_market(sp.panel, n_est, 1.0 / 252, 0.02, 252, "historical");
    EXPECT_NEAR(est.vol.sigma(0, 0), 0.25, 3 * 0.25 / std::sqrt(2.0 * n_est));
    EXPECT_NEAR(est.mu(0), 0.09, 3 * 0.25 / std::sqrt(32.0));
    EXPECT_EQ(est.market.cells(), 252u);
    const auto mle = estimate_market(sp.panel, n_est, 1.0 / 252, 0.02, 252, "mle");
    EXPECT_NEAR(mle.vol.sigma(0, 0), est.vol.sigma(0, 0), 1e-3);
    EXPECT_THROW(estimate_market(sp.panel, n_est, 1.0 / 252, 0.02, 252, "bogus"), ValidationError);
}
