#include "psahara/backtest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "psahara/common.hpp"
#include "psahara/stats.hpp"

namespace psahara {

void PricePanel::check() const {
    if (prices.rows() < 2) throw ValidationError("price panel needs at least 2 observations");
    if (prices.cols() < 1) throw ValidationError("price panel needs at least one asset");
    if (!prices.allFinite()) throw ValidationError("price panel has missing or non-finite prices");
    if ((prices.array() <= 0.0).any()) throw ValidationError("prices must be strictly positive");
    if (!dates.empty()) {
        if (dates.size() != static_cast<std::size_t>(prices.rows()))
            throw ValidationError("date column length does not match prices");
        for (std::size_t i = 1; i < dates.size(); ++i)
            if (!(dates[i - 1] < dates[i])) throw ValidationError("dates must be strictly increasing: " + dates[i]);
    }
}

ReturnsPanel PricePanel::log_returns(double h, std::size_t first, std::size_t last) const {
    check();
    const auto n = static_cast<std::size_t>(prices.rows()) - 1;
    last = std::min(last, n);
    if (first >= last) throw ValidationError("empty return window");
    ReturnsPanel rp;
    rp.h = h;
    rp.assets = assets;
    const auto rows = static_cast<Eigen::Index>(last - first);
    rp.returns.resize(rows, prices.cols());
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto k = static_cast<Eigen::Index>(first) + i;
        rp.returns.row(i) = (prices.row(k + 1).array() / prices.row(k).array()).log().matrix();
        if (!dates.empty()) rp.dates.push_back(dates[static_cast<std::size_t>(k + 1)]);
    }
    return rp;
}

Strategy make_strategy(const OptimalPolicy& policy) {
    return {policy.x0(), [&policy](double t, double xi) { return policy.portfolio(t, xi).total; }};
}

Strategy make_strategy(const IncentivePolicy& policy, double x0) {
    return {x0, [&policy](double t, double xi) { return policy.portfolio(t, xi); }};
}

BacktestReport run_backtest(const Strategy& strategy, const MarketModel& M, const PricePanel& panel) {
    panel.check();
    const std::size_t n = M.cells();
    const auto m = static_cast<Eigen::Index>(M.assets());
    if (static_cast<std::size_t>(panel.prices.rows()) != n + 1)
        throw ValidationError("panel must have one more observation than market cells");
    if (panel.prices.cols() != m) throw ValidationError("panel asset count does not match the market");

    BacktestReport rep;
    const double h = M.dt();
    double X = strategy.x0, lx = 0.0;
    rep.times.push_back(0.0);
    rep.wealth.push_back(X);
    rep.log_xi.push_back(lx);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * h, t1 = static_cast<double>(i + 1) * h;
        const auto& c = M.cell(i);
        Eigen::VectorXd pi = strategy.portfolio(t, std::exp(lx));
        if (pi.size() != m || !pi.allFinite()) throw SolverError("strategy returned an invalid position");

        Eigen::VectorXd S0 = panel.prices.row(static_cast<Eigen::Index>(i)).transpose();
        Eigen::VectorXd S1 = panel.prices.row(static_cast<Eigen::Index>(i + 1)).transpose();
        Eigen::VectorXd R = (S1.array() / S0.array() - 1.0).matrix();
        const double dR = M.rate_integral(t, t1), dTh = M.theta_sq_integral(t, t1);
        const double growth = std::expm1(dR);

        const double cash = X - pi.sum();
        const double X1 = X + pi.dot(R) + cash * growth;
        // same step through share holdings as a self-financing check
        Eigen::VectorXd shares = (pi.array() / S0.array()).matrix();
        const double X1h = shares.dot(S1) + cash * std::exp(dR);
        const double res = std::abs(X1 - X1h) / std::max(1.0, std::abs(X));

        // pull the Brownian increment back through sigma
        Eigen::MatrixXd SS = c.sigma * c.sigma.transpose();
        Eigen::VectorXd dlog = (S1.array() / S0.array()).log().matrix();
        Eigen::VectorXd drift = (c.mu - 0.5 * SS.diagonal()) * h;
        Eigen::VectorXd dW = c.sigma.transpose() * SS.llt().solve(dlog - drift);
        lx += -dR - 0.5 * dTh - M.theta(t).dot(dW);

        rep.positions.push_back(pi);
        rep.financing_residual.push_back(res);
        rep.max_financing_residual = std::max(rep.max_financing_residual, res);
        rep.returns.push_back(std::abs(X) > 0.0 ? (X1 - X) / std::abs(X) : std::numeric_limits<double>::quiet_NaN());
        X = X1;
        rep.times.push_back(t1);
        rep.wealth.push_back(X);
        rep.log_xi.push_back(lx);
    }
    rep.simple_return = simple_return(rep);
    double peak = rep.wealth.front();
    rep.min_wealth = peak;
    for (double w : rep.wealth) {
        peak = std::max(peak, w);
        rep.max_drawdown = std::max(rep.max_drawdown, peak - w);
        rep.min_wealth = std::min(rep.min_wealth, w);
    }
    return rep;
}

BacktestReport run_backtest(const OptimalPolicy& policy, const PricePanel& panel) {
    return run_backtest(make_strategy(policy), policy.market(), panel);
}

double simple_return(const BacktestReport& report) {
    if (report.wealth.empty()) throw ValidationError("empty wealth path");
    const double x0 = report.wealth.front();
    if (x0 == 0.0) throw DomainError("simple return undefined for zero initial wealth");
    return (report.wealth.back() - x0) / x0;
}

double sharpe_ratio(const std::vector<double>& returns, double rf) {
    if (returns.size() < 2) throw ValidationError("Sharpe ratio needs at least 2 returns");
    std::vector<double> ex;
    ex.reserve(returns.size());
    for (double r : returns) {
        if (!std::isfinite(r)) throw DomainError("Sharpe ratio undefined: non-finite daily return");
        ex.push_back(r - rf);
    }
    const MeanSE s = mean_se(ex);
    if (!(s.sd > 0.0)) throw DomainError("Sharpe ratio undefined: zero return dispersion");
    return s.mean / s.sd;
}

double sharpe_ratio(const BacktestReport& report, double rf) { return sharpe_ratio(report.returns, rf); }

SyntheticPanel simulate_panel(const MarketModel& M, const Eigen::VectorXd& S0, std::uint64_t seed) {
    const std::size_t n = M.cells();
    const auto m = static_cast<Eigen::Index>(M.assets()), q = static_cast<Eigen::Index>(M.factors());
    if (S0.size() != m || (S0.array() <= 0.0).any()) throw ValidationError("initial prices must be positive, one per asset");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    SyntheticPanel out;
    out.panel.prices.resize(static_cast<Eigen::Index>(n + 1), m);
    out.panel.prices.row(0) = S0.transpose();
    for (Eigen::Index j = 0; j < m; ++j) out.panel.assets.push_back("asset" + std::to_string(j + 1));
    Eigen::VectorXd logS = S0.array().log().matrix(), dW(q);
    double lx = 0.0;
    out.log_xi.push_back(lx);
    const double h = M.dt(), sh = std::sqrt(h);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * h;
        const auto& c = M.cell(i);
        for (Eigen::Index k = 0; k < q; ++k) dW(k) = sh * nd(rng);
        Eigen::VectorXd var = (c.sigma * c.sigma.transpose()).diagonal();
        logS += (c.mu - 0.5 * var) * h + c.sigma * dW;
        out.panel.prices.row(static_cast<Eigen::Index>(i + 1)) = logS.array().exp().matrix().transpose();
        lx += -M.rate_integral(t, t + h) - 0.5 * M.theta_sq_integral(t, t + h) - M.theta(t).dot(dW);
        out.log_xi.push_back(lx);
    }
    return out;
}

EnsembleResult backtest_ensemble(const Strategy& strategy, const MarketModel& M, const Eigen::VectorXd& S0,
                                 std::size_t n_panels, std::uint64_t seed, double rf) {
    EnsembleResult out;
    out.terminal_wealth.assign(n_panels, 0.0);
    out.simple_returns.assign(n_panels, 0.0);
    out.sharpe.assign(n_panels, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> fin(n_panels, 0.0), track(n_panels, 0.0);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n_panels;) {
            SyntheticPanel sp = simulate_panel(M, S0, stream_seed(seed, i));
            BacktestReport rep = run_backtest(strategy, M, sp.panel);
            out.terminal_wealth[i] = rep.wealth.back();
            out.simple_returns[i] = rep.wealth.front() != 0.0 ? rep.simple_return : std::numeric_limits<double>::quiet_NaN();
            try {
                out.sharpe[i] = sharpe_ratio(rep, rf);
            } catch (const std::exception&) {
            }
            fin[i] = rep.max_financing_residual;
            track[i] = std::abs(rep.log_xi.back() - sp.log_xi.back());
        }
    };
    const unsigned nt = std::max(1u, std::min<unsigned>(worker_threads(), static_cast<unsigned>(n_panels)));
    std::vector<std::thread> pool;
    for (unsigned k = 1; k < nt; ++k) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    for (std::size_t i = 0; i < n_panels; ++i) {
        out.max_financing_residual = std::max(out.max_financing_residual, fin[i]);
        out.max_xi_tracking_error = std::max(out.max_xi_tracking_error, track[i]);
    }
    return out;
}

MarketEstimate estimate_market(const PricePanel& panel, std::size_t n_est, double h, double r, std::size_t trade_cells,
                               const std::string& method, const Eigen::VectorXd& implied_norms) {
    ReturnsPanel rp = panel.log_returns(h, 0, n_est);
    VolEstimate vol;
    if (method == "historical") {
        vol = historical_vol(rp);
    } else if (method == "mle") {
        Eigen::VectorXd var = mle_vol(rp);
        vol = assemble_sigma(var.cwiseSqrt(), sample_correlation(rp));
        vol.method = "mle";
    } else if (method == "implied") {
        if (implied_norms.size() != rp.returns.cols()) throw ValidationError("implied estimator needs one vol per asset");
        vol = assemble_sigma(implied_norms, sample_correlation(rp));
    } else {
        throw ValidationError("unknown estimator: " + method);
    }
    Eigen::VectorXd var = (vol.sigma * vol.sigma.transpose()).diagonal();
    Eigen::VectorXd mu = rp.returns.colwise().mean().transpose() / h + 0.5 * var;
    const double T = static_cast<double>(trade_cells) * h;
    return {MarketModel::constant(T, trade_cells, r, mu, vol.sigma), vol, mu};
}

}  // namespace psahara
