#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "psahara/market.hpp"

using namespace psahara;

TEST(Market, ScalarTheta) {
    const auto M = fixtures::scalar_market();
    EXPECT_NEAR(theta(0.3, M)(0), 0.56, 1e-14);
    EXPECT_NEAR(M.merton_direction(0.3)(0), 5.6, 1e-12);
    EXPECT_NEAR(M.theta_sq(0.0), 0.3136, 1e-14);
}

TEST(Market, MinimumNormThetaIncomplete) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> N(0.0, 0.2);
    Eigen::MatrixXd sigma(2, 3);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j) sigma(i, j) = N(rng);
    Eigen::VectorXd mu(2);
    mu << 0.08, 0.11;
    const auto M = MarketModel::constant(1.0, 12, 0.02, mu, sigma);
    const Eigen::VectorXd th = theta(0.5, M);
    EXPECT_LT((sigma * th - (mu.array() - 0.02).matrix()).norm(), 1e-10);
    // least-squares solution lies in the row space of sigma
    const Eigen::VectorXd ls = sigma.completeOrthogonalDecomposition().solve((mu.array() - 0.02).matrix());
    EXPECT_LT((th - ls).norm(), 1e-10);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sigma);
    const Eigen::MatrixXd ker = lu.kernel();
    EXPECT_LT((ker.transpose() * th).norm(), 1e-10);
}

TEST(Market, RejectsZeroPremiumUnlessAllowed) {
    EXPECT_THROW(MarketModel::constant(1.0, 4, 0.03, 0.03, 0.1), ValidationError);
    const auto M = MarketModel::constant(1.0, 4, 0.03, 0.03, 0.1, true);
    EXPECT_EQ(theta(0.2, M)(0), 0.0);
    EXPECT_THROW(MarketModel::constant(1.0, 4, 0.03, 0.02, 0.1, true), ValidationError);
}

TEST(Market, RejectsSingularCovariance) {
    Eigen::MatrixXd sigma(2, 2);
    sigma << 0.1, 0.2, 0.05, 0.1;
    Eigen::VectorXd mu(2);
    mu << 0.08, 0.09;
    EXPECT_THROW(MarketModel::constant(1.0, 4, 0.01, mu, sigma), ValidationError);
}

TEST(Market, StepIntegralsAreExact) {
    std::vector<MarketModel::Cell> cells;
    for (int i = 0; i < 4; ++i)
        cells.push_back({0.01 * (i + 1), Eigen::VectorXd::Constant(1, 0.1 + 0.02 * i), Eigen::MatrixXd::Constant(1, 1, 0.2)});
    const MarketModel M(2.0, cells);
    EXPECT_NEAR(rate_integral(0.0, 2.0, M), 0.5 * (0.01 + 0.02 + 0.03 + 0.04), 1e-15);
    EXPECT_NEAR(rate_integral(0.25, 1.25, M), 0.25 * 0.01 + 0.5 * 0.02 + 0.25 * 0.03, 1e-15);
    double th = 0.0;
    for (int i = 0; i < 4; ++i) th += 0.5 * std::pow((0.1 + 0.02 * i - 0.01 * (i + 1)) / 0.2, 2);
    EXPECT_NEAR(theta_sq_integral(0.0, 2.0, M), th, 1e-14);
    EXPECT_EQ(M.cell_index(2.0), 3u);
    EXPECT_THROW(M.cell_index(2.5), DomainError);
    EXPECT_THROW(rate_integral(1.5, 1.0, M), DomainError);
}

TEST(Market, KernelLaw) {
    const auto M = fixtures::scalar_market();
    const auto law = kernel_terminal_law(0.0, 1.0, 1.0, M);
    EXPECT_NEAR(law.mean, -0.1868, 1e-12);
    EXPECT_NEAR(law.variance, 0.3136, 1e-12);
    const auto half = kernel_terminal_law(0.5, 1.0, 2.0, M);
    EXPECT_NEAR(half.variance, 0.1568, 1e-12);
    EXPECT_THROW(kernel_terminal_law(0.0, 1.0, 0.0, M), DomainError);
}
