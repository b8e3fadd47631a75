#pragma once
#include <cstdint>
#include <vector>

#include "psahara/policy.hpp"

namespace psahara {

struct SimConfig {
    std::size_t n_paths = 10000;
    std::size_t n_steps = 252;
    std::uint64_t seed = 42;
    bool antithetic = false;
    bool euler = true;  // evolve the Euler-controlled wealth alongside the closed form
    std::vector<double> checkpoints{0.25, 0.5, 0.75, 1.0};  // fractions of T
};

struct CheckpointStat {
    double t;
    double mean;  // sample mean of xi_t X_t (closed form)
    double se;
};

struct SimResult {
    SimConfig config;
    double x0 = 0.0;
    double horizon = 0.0;
    std::vector<double> terminal_closed;  // X_T = terminal_wealth(y* xi_T)
    std::vector<double> terminal_euler;   // Euler wealth on the same increments (empty if disabled)
    std::vector<double> log_xi_T;
    std::vector<CheckpointStat> checkpoints;
    std::vector<double> mean_log_xi;   // per step 0..n_steps
    std::vector<double> mean_wealth;   // Euler wealth per step (closed-form at 0 and T if Euler disabled)
    double mean_abs_gap = 0.0;         // mean |X_T(closed) - X_T(Euler)|
    double max_abs_pi = 0.0;
    double max_abs_wealth = 0.0;
    double pi_power_q50 = 0.0, pi_power_q95 = 0.0, pi_power_max = 0.0;  // path integrals of |pi|^2.5 dt
};

SimResult simulate(const OptimalPolicy& policy, const SimConfig& config);

struct MartingaleRow {
    double t, mean, se, residual;
    bool pass;
};

struct MartingaleReport {
    std::vector<MartingaleRow> rows;
    bool pass = true;
};

MartingaleReport martingale_check(const SimResult& sim, double z = 3.0);

}  // namespace psahara
