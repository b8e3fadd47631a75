#include "psahara/market.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace psahara {

MarketModel::MarketModel(double T, std::vector<Cell> cells, bool allow_zero_premium)
    : T_(T), allow_zero_premium_(allow_zero_premium), cells_(std::move(cells)) {
    if (!(T_ > 0.0) || !std::isfinite(T_)) throw ValidationError("market horizon T must be positive");
    if (cells_.empty()) throw ValidationError("market needs at least one cell");
    m_ = static_cast<std::size_t>(cells_.front().sigma.rows());
    q_ = static_cast<std::size_t>(cells_.front().sigma.cols());
    if (m_ == 0 || q_ < m_) throw ValidationError("sigma must be m x q with 1 <= m <= q");
    double dt = T_ / static_cast<double>(cells_.size());
    cum_r_.assign(1, 0.0);
    cum_th_.assign(1, 0.0);
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        const Cell& c = cells_[i];
        if (static_cast<std::size_t>(c.sigma.rows()) != m_ || static_cast<std::size_t>(c.sigma.cols()) != q_ ||
            static_cast<std::size_t>(c.mu.size()) != m_)
            throw ValidationError("inconsistent mu/sigma dimensions across cells");
        if (!std::isfinite(c.r) || !c.mu.allFinite() || !c.sigma.allFinite())
            throw ValidationError("market coefficients must be finite");
        Eigen::MatrixXd S = c.sigma * c.sigma.transpose();
        Eigen::LLT<Eigen::MatrixXd> llt(S);
        if (llt.info() != Eigen::Success || S.diagonal().minCoeff() <= 0.0)
            throw ValidationError("sigma sigma^T is not positive definite in cell " + std::to_string(i));
        Eigen::VectorXd excess = c.mu - Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m_), c.r);
        for (Eigen::Index j = 0; j < excess.size(); ++j) {
            bool ok = allow_zero_premium_ ? excess(j) >= 0.0 : excess(j) > 0.0;
            if (!ok) {
                std::ostringstream os;
                os << "market invariant mu_i > r violated in cell " << i << " for asset " << j;
                throw ValidationError(os.str());
            }
        }
        Eigen::VectorXd w = llt.solve(excess);
        Eigen::VectorXd th = c.sigma.transpose() * w;
        merton_.push_back(w);
        theta_.push_back(th);
        theta_sq_.push_back(th.squaredNorm());
        rates_.push_back(c.r);
        cum_r_.push_back(cum_r_.back() + c.r * dt);
        cum_th_.push_back(cum_th_.back() + theta_sq_.back() * dt);
    }
}

MarketModel MarketModel::constant(double T, std::size_t cells, double r, const Eigen::VectorXd& mu,
                                  const Eigen::MatrixXd& sigma, bool allow_zero_premium) {
    if (cells == 0) throw ValidationError("market needs at least one cell");
    return MarketModel(T, std::vector<Cell>(cells, Cell{r, mu, sigma}), allow_zero_premium);
}

MarketModel MarketModel::constant(double T, std::size_t cells, double r, double mu, double sigma,
                                  bool allow_zero_premium) {
    return constant(T, cells, r, Eigen::VectorXd::Constant(1, mu), Eigen::MatrixXd::Constant(1, 1, sigma),
                    allow_zero_premium);
}

std::size_t MarketModel::cell_index(double t) const {
    if (!(t >= 0.0) || t > T_ * (1.0 + 1e-12)) throw DomainError("time outside [0, T]");
    auto i = static_cast<std::size_t>(t / dt());
    return std::min(i, cells_.size() - 1);
}

double MarketModel::cumulative(const std::vector<double>& cum, const std::vector<double>& rate, double t) const {
    if (t >= T_) return cum.back();
    std::size_t i = cell_index(t);
    return cum[i] + rate[i] * (t - static_cast<double>(i) * dt());
}

double MarketModel::rate_integral(double t0, double t1) const {
    if (t0 > t1) throw DomainError("integral bounds reversed (t > T)");
    if (t0 == t1) return 0.0;
    return cumulative(cum_r_, rates_, t1) - cumulative(cum_r_, rates_, t0);
}

double MarketModel::theta_sq_integral(double t0, double t1) const {
    if (t0 > t1) throw DomainError("integral bounds reversed (t > T)");
    if (t0 == t1) return 0.0;
    return std::max(0.0, cumulative(cum_th_, theta_sq_, t1) - cumulative(cum_th_, theta_sq_, t0));
}

Eigen::VectorXd theta(double t, const MarketModel& M) { return M.theta(t); }

double theta_sq_integral(double t, double T, const MarketModel& M) { return M.theta_sq_integral(t, T); }

double rate_integral(double t, double T, const MarketModel& M) { return M.rate_integral(t, T); }

LogNormalLaw kernel_terminal_law(double t, double T, double xi_t, const MarketModel& M) {
    if (!(xi_t > 0.0)) throw DomainError("xi_t must be positive");
    double th = M.theta_sq_integral(t, T);
    return {-(M.rate_integral(t, T) + 0.5 * th), th};
}

}  // namespace psahara
