#include "psahara/volatility.hpp"

#include <cmath>

#include "psahara/common.hpp"

namespace psahara {

namespace {

void check_panel(const ReturnsPanel& p) {
    if (p.returns.rows() < 2) throw ValidationError("panel needs at least 2 observations");
    if (p.returns.cols() < 1) throw ValidationError("panel needs at least one asset");
    if (!(p.h > 0.0)) throw ValidationError("panel period h must be positive");
    if (!p.returns.allFinite()) throw ValidationError("panel contains missing or non-finite returns");
}

}  // namespace

Eigen::MatrixXd sample_covariance(const ReturnsPanel& panel) {
    check_panel(panel);
    const auto& X = panel.returns;
    Eigen::RowVectorXd mean = X.colwise().mean();
    Eigen::MatrixXd Z = X.rowwise() - mean;
    return (Z.transpose() * Z) / (static_cast<double>(X.rows() - 1) * panel.h);
}

Eigen::MatrixXd sample_correlation(const ReturnsPanel& panel) {
    Eigen::MatrixXd S = sample_covariance(panel);
    const Eigen::Index m = S.rows();
    Eigen::MatrixXd C = Eigen::MatrixXd::Identity(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            if (i != j && S(i, i) > 0.0 && S(j, j) > 0.0) C(i, j) = S(i, j) / std::sqrt(S(i, i) * S(j, j));
    return C;
}

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& S) {
    const Eigen::Index m = S.rows();
    // zero-variance coordinates get exact zero rows
    std::vector<Eigen::Index> live;
    for (Eigen::Index i = 0; i < m; ++i)
        if (S(i, i) > 0.0) live.push_back(i);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, m);
    if (live.empty()) return B;
    const auto k = static_cast<Eigen::Index>(live.size());
    Eigen::MatrixXd Ss(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) Ss(i, j) = S(live[i], live[j]);
    Eigen::MatrixXd Bs;
    Eigen::LLT<Eigen::MatrixXd> llt(Ss);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    bool pd = llt.info() == Eigen::Success;
    if (pd) {
        es.compute(Ss, Eigen::EigenvaluesOnly);
        pd = es.eigenvalues().minCoeff() > 1e-12 * es.eigenvalues().maxCoeff();
    }
    if (pd) {
        Bs = llt.matrixL();
    } else {
        es.compute(Ss);
        Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        Bs = es.eigenvectors() * ev.asDiagonal();
    }
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) B(live[i], j) = Bs(i, j);
    return B;
}

VolEstimate historical_vol(const ReturnsPanel& panel) {
    Eigen::MatrixXd S = sample_covariance(panel);
    VolEstimate v;
    v.sigma = psd_factor(S);
    v.method = "historical";
    v.norms = v.sigma.rowwise().norm();
    return v;
}

double bs_put_price(double S, double K, double r, double T, double vol) {
    if (!(S > 0.0) || !(K > 0.0) || !(T > 0.0)) throw DomainError("put price needs S, K, T > 0");
    if (!(vol >= 0.0)) throw DomainError("put price needs vol >= 0");
    const double df = std::exp(-r * T);
    if (vol == 0.0) return std::max(K * df - S, 0.0);
    const double sv = vol * std::sqrt(T);
    const double d1 = (std::log(S / K) + (r + 0.5 * vol * vol) * T) / sv;
    const double d2 = d1 - sv;
    return K * df * norm_cdf(-d2) - S * norm_cdf(-d1);
}

double bs_put_vega(double S, double K, double r, double T, double vol) {
    const double sv = vol * std::sqrt(T);
    const double d1 = (std::log(S / K) + (r + 0.5 * vol * vol) * T) / sv;
    return S * norm_pdf(d1) * std::sqrt(T);
}

double implied_vol(double price, double S, double K, double r, double T) {
    if (!(S > 0.0) || !(K > 0.0) || !(T > 0.0)) throw DomainError("implied vol needs S, K, T > 0");
    const double df = std::exp(-r * T);
    const double lower = std::max(K * df - S, 0.0), upper = K * df;
    if (!(price > lower) || !(price < upper)) throw DomainError("put price outside no-arbitrage bounds");
    const double ceiling = 5.0;
    if (price > bs_put_price(S, K, r, T, ceiling)) throw DomainError("implied vol above the 500% bracket ceiling");
    double lo = 0.0, hi = ceiling;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (bs_put_price(S, K, r, T, mid) < price ? lo : hi) = mid;
    }
    double v = 0.5 * (lo + hi);
    double f = bs_put_price(S, K, r, T, v) - price;
    for (int it = 0; it < 5 && f != 0.0; ++it) {
        double vega = bs_put_vega(S, K, r, T, v);
        if (!(vega > 0.0)) break;
        double vn = v - f / vega;
        if (!(vn > lo && vn < hi)) break;
        double fn = bs_put_price(S, K, r, T, vn) - price;
        if (!(std::abs(fn) < std::abs(f))) break;
        v = vn;
        f = fn;
    }
    return v;
}

VolEstimate assemble_sigma(const Eigen::VectorXd& norms, const Eigen::MatrixXd& corr) {
    const Eigen::Index m = corr.rows();
    if (corr.cols() != m || norms.size() != m) throw ValidationError("correlation must be m x m with m norms");
    if (!corr.allFinite() || !norms.allFinite()) throw ValidationError("non-finite correlation or norms");
    if ((corr - corr.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw ValidationError("correlation must be symmetric");
    for (Eigen::Index i = 0; i < m; ++i) {
        if (std::abs(corr(i, i) - 1.0) > 1e-12) throw ValidationError("correlation must have unit diagonal");
        if (!(norms(i) >= 0.0)) throw ValidationError("vol norms must be nonnegative");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr);
    Eigen::MatrixXd C = corr;
    if (es.eigenvalues().minCoeff() < -1e-8) throw ValidationError("correlation matrix is not positive semidefinite");
    if (es.eigenvalues().minCoeff() < 1e-12) {
        // clamp and rescale back to a unit diagonal
        Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
        C = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
        Eigen::VectorXd dinv = C.diagonal().cwiseSqrt().cwiseInverse();
        C = dinv.asDiagonal() * C * dinv.asDiagonal();
    }
    Eigen::MatrixXd B = psd_factor(C);
    for (Eigen::Index i = 0; i < m; ++i) {
        double nrm = B.row(i).norm();
        B.row(i) *= nrm > 0.0 ? norms(i) / nrm : 0.0;
    }
    return {B, "implied", B.rowwise().norm()};
}

Eigen::VectorXd mle_vol(const ReturnsPanel& panel) {
    check_panel(panel);
    const auto& X = panel.returns;
    const double n = static_cast<double>(X.rows());
    Eigen::RowVectorXd mean = X.colwise().mean();
    return ((X.rowwise() - mean).colwise().squaredNorm() / (n * panel.h)).transpose();
}

}  // namespace psahara
