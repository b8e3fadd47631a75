#include <cmath>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "psahara/envelope.hpp"
#include "psahara/montecarlo.hpp"
#include "psahara/stats.hpp"

using namespace psahara;

namespace {

OptimalPolicy single_policy(const MarketModel& M) {
    return OptimalPolicy::solve(PiecewiseUtility(SaharaPiece{2.0, 1.0, 0.0, 1.0, 0.0}), M, 1.0);
}

}  // namespace

TEST(Simulate, ConfigValidation) {
    const auto P = single_policy(fixtures::scalar_market());
    SimConfig c;
    c.n_paths = 1;
    EXPECT_THROW(simulate(P, c), ValidationError);
    c.n_paths = 11;
    c.antithetic = true;
    EXPECT_THROW(simulate(P, c), ValidationError);
}

TEST(Simulate, Deterministic) {
    const auto P = single_policy(fixtures::scalar_market());
    SimConfig c;
    c.n_paths = 300;
    c.n_steps = 50;
    const auto a = simulate(P, c), b = simulate(P, c);
    EXPECT_EQ(a.terminal_closed, b.terminal_closed);
    EXPECT_EQ(a.terminal_euler, b.terminal_euler);
    EXPECT_EQ(a.mean_wealth, b.mean_wealth);
}

TEST(Simulate, KernelMomentsMatchLaw) {
    const auto M = fixtures::scalar_market();
    SimConfig c;
    c.n_paths = 20000;
    c.n_steps = 20;
    c.euler = false;
    const auto s = simulate(single_policy(M), c);
    const auto law = kernel_terminal_law(0.0, 1.0, 1.0, M);
    const auto st = mean_se(s.log_xi_T);
    EXPECT_LT(std::abs(st.mean - law.mean), 3 * st.se);
    const double var = st.sd * st.sd, var_se = law.variance * std::sqrt(2.0 / (c.n_paths - 1));
    EXPECT_LT(std::abs(var - law.variance), 3 * var_se);
}

TEST(Simulate, MartingaleAndNegativeControl) {
    const auto M = fixtures::scalar_market();
    const auto ip = fixtures::incentive_params();
    const auto P = OptimalPolicy::solve(concave_envelope(incentive_utility(ip)).envelope, M, 1.0);
    SimConfig c;
    c.n_paths = 40000;
    c.n_steps = 16;
    c.euler = false;
    EXPECT_TRUE(martingale_check(simulate(P, c)).pass);
    const auto bad = martingale_check(simulate(P.with_multiplier(1.1 * P.y_star()), c));
    EXPECT_FALSE(bad.rows.back().pass);
}

TEST(Simulate, DegenerateKernel) {
    const auto M = MarketModel::constant(1.0, 1, 0.03, 0.03, 0.1, true);
    SimConfig c;
    c.n_paths = 4;
    c.n_steps = 1;
    const auto s = simulate(single_policy(M), c);
    for (double lx : s.log_xi_T) EXPECT_NEAR(lx, -0.03, 1e-15);
    for (double x : s.terminal_closed) EXPECT_NEAR(x, std::exp(0.03), 1e-10);
    const auto rep = martingale_check(s);
    EXPECT_TRUE(rep.pass);
    for (const auto& r : rep.rows) EXPECT_NEAR(r.residual, 0.0, 1e-12);
}

TEST(Simulate, AntitheticReducesVariance) {
    const auto P = single_policy(fixtures::scalar_market());
    SimConfig c;
    c.n_paths = 20000;
    c.n_steps = 8;
    c.euler = false;
    const double plain = simulate(P, c).checkpoints.back().se;
    c.antithetic = true;
    const double anti = simulate(P, c).checkpoints.back().se;
    EXPECT_LT(anti * anti / (plain * plain), 0.75);
}

TEST(Simulate, ThreadCountDoesNotChangeResults) {
    const auto P = single_policy(fixtures::scalar_market());
    SimConfig c;
    c.n_paths = 500;
    c.n_steps = 20;
    setenv("PSAHARA_THREADS", "1", 1);
    const auto a = simulate(P, c);
    setenv("PSAHARA_THREADS", "3", 1);
    const auto b = simulate(P, c);
    unsetenv("PSAHARA_THREADS");
    EXPECT_EQ(a.terminal_euler, b.terminal_euler);
    EXPECT_EQ(a.checkpoints.back().mean, b.checkpoints.back().mean);
}
