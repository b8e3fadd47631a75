#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "psahara/common.hpp"
#include "psahara/volatility.hpp"

using namespace psahara;

namespace {

ReturnsPanel panel_from(const Eigen::MatrixXd& X, double h) {
    ReturnsPanel p;
    p.returns = X;
    p.h = h;
    return p;
}

Eigen::MatrixXd random_corr(std::mt19937_64& rng, int m) {
    std::normal_distribution<double> N(0.0, 1.0);
    Eigen::MatrixXd A(m, m + 2);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m + 2; ++j) A(i, j) = N(rng);
    Eigen::MatrixXd S = A * A.transpose();
    Eigen::VectorXd d = S.diagonal().cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd C = d.asDiagonal() * S * d.asDiagonal();
    C.diagonal().setOnes();
    return 0.5 * (C + C.transpose());
}

}  // namespace

TEST(PutPrice, MatchesQuadrature) {
    const double p = bs_put_price(100, 100, 0.0, 1.0, 0.2);
    EXPECT_NEAR(p, oracle::put_by_quadrature(100, 100, 0.0, 1.0, 0.2), 1e-6);
    EXPECT_NEAR(p, 7.9656, 1e-4);
    for (double K : {70.0, 95.0, 130.0})
        EXPECT_NEAR(bs_put_price(100, K, 0.04, 0.7, 0.35), oracle::put_by_quadrature(100, K, 0.04, 0.7, 0.35), 1e-6);
}

TEST(PutPrice, Limits) {
    EXPECT_NEAR(bs_put_price(100, 90, 0.05, 1.0, 1e-9), 0.0, 1e-12);
    const double K = 1e6;
    EXPECT_NEAR(bs_put_price(100, K, 0.05, 1.0, 0.2), K * std::exp(-0.05) - 100, 1e-6);
    EXPECT_THROW(bs_put_price(-1, 100, 0.0, 1.0, 0.2), DomainError);
    EXPECT_THROW(bs_put_price(100, 100, 0.0, 0.0, 0.2), DomainError);
}

TEST(PutPrice, IncreasingInVol) {
    double prev = bs_put_price(100, 105, 0.02, 0.5, 0.01);
    for (int i = 1; i <= 400; ++i) {
        const double v = 0.01 + 4.99 * i / 400.0;
        const double p = bs_put_price(100, 105, 0.02, 0.5, v);
        ASSERT_GT(p, prev);
        ASSERT_GT(bs_put_vega(100, 105, 0.02, 0.5, v), 0.0);
        prev = p;
    }
}

TEST(ImpliedVol, Roundtrip) {
    for (double v : {0.05, 0.2, 0.8, 2.5})
        for (double K : {60.0, 100.0, 140.0}) {
            const double p = bs_put_price(100, K, 0.03, 1.5, v);
            EXPECT_NEAR(implied_vol(p, 100, K, 0.03, 1.5), v, 1e-8) << v << " " << K;
        }
}

TEST(ImpliedVol, BoundsAndCeiling) {
    const double lower = 110 * std::exp(-0.01) - 100;
    const double v = implied_vol(lower + 1e-12, 100, 110, 0.01, 1.0);
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_LT(v, 0.05);
    EXPECT_THROW(implied_vol(lower - 1e-3, 100, 110, 0.01, 1.0), DomainError);
    EXPECT_THROW(implied_vol(110.0, 100, 110, 0.01, 1.0), DomainError);
    EXPECT_THROW(implied_vol(bs_put_price(100, 100, 0.0, 1.0, 5.5), 100, 100, 0.0, 1.0), DomainError);
}

TEST(ImpliedVol, SmileAverage) {
    const double strikes[] = {80, 90, 100, 110, 120};
    const double smile[] = {0.28, 0.24, 0.21, 0.2, 0.22};
    double acc = 0.0;
    for (int i = 0; i < 5; ++i) acc += implied_vol(bs_put_price(100, strikes[i], 0.01, 0.5, smile[i]), 100, strikes[i], 0.01, 0.5);
    EXPECT_NEAR(acc / 5.0, (0.28 + 0.24 + 0.21 + 0.2 + 0.22) / 5.0, 1e-8);
}

TEST(HistoricalVol, IdentityCovariance) {
    Eigen::MatrixXd X(4, 2);
    X << 1, 1, 1, -1, -1, 1, -1, -1;
    X *= std::sqrt(0.75);
    const auto v = historical_vol(panel_from(X, 1.0));
    EXPECT_LT((v.sigma - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(v.method, "historical");
}

TEST(HistoricalVol, ConstantColumnGivesZeroRow) {
    Eigen::MatrixXd X(5, 2);
    X << 0.01, 0.002, -0.02, 0.002, 0.005, 0.002, 0.0, 0.002, 0.013, 0.002;
    const auto v = historical_vol(panel_from(X, 1.0 / 252));
    EXPECT_EQ(v.sigma.row(1).norm(), 0.0);
    EXPECT_GT(v.sigma(0, 0), 0.0);
}

TEST(HistoricalVol, FactorizationResidual) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> N(0.0, 0.01);
    for (int m : {1, 3, 6}) {
        Eigen::MatrixXd X(300, m);
        for (int i = 0; i < 300; ++i)
            for (int j = 0; j < m; ++j) X(i, j) = N(rng) + (j > 0 ? 0.5 * X(i, j - 1) : 0.0);
        const auto p = panel_from(X, 1.0 / 252);
        const auto v = historical_vol(p);
        EXPECT_LT((v.sigma * v.sigma.transpose() - sample_covariance(p)).cwiseAbs().maxCoeff(), 1e-10);
    }
    Eigen::MatrixXd X(3, 4);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) X(i, j) = N(rng);
    const auto p = panel_from(X, 1.0);
    const auto v = historical_vol(p);
    EXPECT_LT((v.sigma * v.sigma.transpose() - sample_covariance(p)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(HistoricalVol, GenerativeRecovery) {
    Eigen::MatrixXd s0(2, 2);
    s0 << 0.2, 0.0, 0.06, 0.15;
    const Eigen::MatrixXd S0 = s0 * s0.transpose();
    std::mt19937_64 rng(99);
    std::normal_distribution<double> N(0.0, 1.0);
    const int n = 100000;
    Eigen::MatrixXd X(n, 2);
    for (int i = 0; i < n; ++i) {
        Eigen::Vector2d z(N(rng), N(rng));
        X.row(i) = (s0 * z).transpose();
    }
    const Eigen::MatrixXd S = sample_covariance(panel_from(X, 1.0));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const double se = std::sqrt((S0(i, i) * S0(j, j) + S0(i, j) * S0(i, j)) / n);
            EXPECT_LT(std::abs(S(i, j) - S0(i, j)), 3 * se) << i << j;
        }
}

TEST(HistoricalVol, RejectsBadPanels) {
    EXPECT_THROW(historical_vol(panel_from(Eigen::MatrixXd::Zero(1, 2), 1.0)), ValidationError);
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(3, 1);
    X(1, 0) = std::nan("");
    EXPECT_THROW(historical_vol(panel_from(X, 1.0)), ValidationError);
}

TEST(AssembleSigma, IdentityCorrelation) {
    Eigen::Vector2d norms(0.3, 0.15);
    const auto v = assemble_sigma(norms, Eigen::Matrix2d::Identity());
    EXPECT_LT((v.sigma - Eigen::MatrixXd(norms.asDiagonal())).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(AssembleSigma, PerfectCorrelationIsRankOne) {
    Eigen::Matrix2d C = Eigen::Matrix2d::Ones();
    const auto v = assemble_sigma(Eigen::Vector2d(0.2, 0.4), C);
    EXPECT_NEAR(v.sigma.row(0).norm(), 0.2, 1e-12);
    EXPECT_NEAR(v.sigma.row(1).norm(), 0.4, 1e-12);
    EXPECT_NEAR(std::abs(v.sigma.row(0).normalized().dot(v.sigma.row(1).normalized())), 1.0, 1e-12);
}

TEST(AssembleSigma, ReconstructsCorrelation) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> U(0.05, 0.6);
    for (int m : {2, 4, 7}) {
        const Eigen::MatrixXd C = random_corr(rng, m);
        Eigen::VectorXd norms(m);
        for (int i = 0; i < m; ++i) norms(i) = U(rng);
        const auto v = assemble_sigma(norms, C);
        const Eigen::MatrixXd S = v.sigma * v.sigma.transpose();
        EXPECT_LT((v.sigma.rowwise().norm() - norms).cwiseAbs().maxCoeff(), 1e-12);
        Eigen::VectorXd d = S.diagonal().cwiseSqrt().cwiseInverse();
        EXPECT_LT((d.asDiagonal() * S * d.asDiagonal() - C).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(AssembleSigma, RejectsInvalidCorrelation) {
    Eigen::Matrix2d C;
    C << 1, 2, 2, 1;
    EXPECT_THROW(assemble_sigma(Eigen::Vector2d(0.1, 0.1), C), ValidationError);
    C << 1, 0.3, 0.2, 1;
    EXPECT_THROW(assemble_sigma(Eigen::Vector2d(0.1, 0.1), C), ValidationError);
}

TEST(MleVol, HandCases) {
    Eigen::MatrixXd X(2, 1);
    X << 0.03, -0.03;
    EXPECT_NEAR(mle_vol(panel_from(X, 1.0))(0), 0.0009, 1e-18);
    EXPECT_EQ(mle_vol(panel_from(Eigen::MatrixXd::Constant(10, 1, 0.01), 1.0 / 252))(0), 0.0);
}

TEST(MleVol, GenerativeRecovery) {
    const int n = 8 * 252;
    const double h = 1.0 / 252, var = 0.04;
    std::mt19937_64 rng(1234);
    std::normal_distribution<double> N(0.0, 1.0);
    Eigen::MatrixXd X(n, 1);
    for (int i = 0; i < n; ++i) X(i, 0) = (0.07 - 0.5 * var) * h + std::sqrt(var * h) * N(rng);
    const double est = mle_vol(panel_from(X, h))(0);
    EXPECT_LT(std::abs(est - var), 3 * var * std::sqrt(2.0 / n));
}
