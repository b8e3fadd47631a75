#include "psahara/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "psahara/stats.hpp"

namespace psahara {

namespace {

constexpr std::size_t kBlock = 64;

struct PathOut {
    double xt_closed = 0.0, xt_euler = 0.0, log_xi = 0.0, pi_power = 0.0, max_pi = 0.0, max_x = 0.0;
};

}  // namespace

SimResult simulate(const OptimalPolicy& policy, const SimConfig& cfg) {
    if (cfg.n_paths < 2 || cfg.n_steps < 1) throw ValidationError("simulation needs n_paths >= 2 and n_steps >= 1");
    if (cfg.antithetic && cfg.n_paths % 2 != 0) throw ValidationError("antithetic pairing needs an even path count");
    const MarketModel& M = policy.market();
    const double T = M.horizon();
    const std::size_t N = cfg.n_steps, q = M.factors();
    const double dt = T / static_cast<double>(N), sdt = std::sqrt(dt);

    // per-step coefficients (left point)
    struct Step {
        double r, kappa, dR, dTh;
        Eigen::VectorXd theta;
        double abs_c;
    };
    std::vector<Step> steps(N);
    for (std::size_t i = 0; i < N; ++i) {
        double t0 = dt * static_cast<double>(i), t1 = i + 1 == N ? T : dt * static_cast<double>(i + 1);
        const auto& c = M.merton_direction(t0);
        Eigen::VectorXd excess = M.mu(t0) - Eigen::VectorXd::Constant(c.size(), M.r(t0));
        steps[i] = {M.r(t0), c.dot(excess), M.rate_integral(t0, t1), M.theta_sq_integral(t0, t1), M.theta(t0), c.norm()};
    }
    std::vector<std::size_t> cp_step;
    for (double f : cfg.checkpoints) {
        auto s = static_cast<std::size_t>(std::llround(f * static_cast<double>(N)));
        cp_step.push_back(std::clamp<std::size_t>(s, 1, N));
    }
    const std::size_t C = cp_step.size();

    const std::size_t P = cfg.n_paths;
    std::vector<PathOut> out(P);
    std::vector<double> cp_vals(P * C, 0.0);
    const std::size_t nblocks = (P + kBlock - 1) / kBlock;
    std::vector<std::vector<double>> blk_logxi(nblocks, std::vector<double>(N + 1, 0.0));
    std::vector<std::vector<double>> blk_wealth(nblocks, std::vector<double>(N + 1, 0.0));

    auto run_path = [&](std::size_t p, std::vector<double>& sum_logxi, std::vector<double>& sum_wealth) {
        std::uint64_t stream = cfg.antithetic ? p / 2 : p;
        double sign = cfg.antithetic && (p % 2 == 1) ? -1.0 : 1.0;
        std::mt19937_64 rng(stream_seed(cfg.seed, stream));
        std::normal_distribution<double> nd(0.0, 1.0);
        Eigen::VectorXd dW(static_cast<Eigen::Index>(q));
        PathOut& o = out[p];
        double log_xi = 0.0, x = policy.x0();
        std::size_t next_cp = 0;
        sum_wealth[0] += x;
        for (std::size_t i = 0; i < N; ++i) {
            const Step& st = steps[i];
            double t0 = dt * static_cast<double>(i);
            double S = 0.0;
            if (cfg.euler) {
                S = policy.exposure(t0, std::exp(log_xi)).total();
                double pi_norm = std::abs(S) * st.abs_c;
                o.max_pi = std::max(o.max_pi, pi_norm);
                o.pi_power += std::pow(pi_norm, 2.5) * dt;
            }
            for (Eigen::Index j = 0; j < dW.size(); ++j) dW(j) = sign * sdt * nd(rng);
            double th_dw = st.theta.dot(dW);
            if (cfg.euler) x += (st.r * x + S * st.kappa) * dt + S * th_dw;
            log_xi += -st.dR - 0.5 * st.dTh - th_dw;
            sum_logxi[i + 1] += log_xi;
            if (cfg.euler) {
                sum_wealth[i + 1] += x;
                o.max_x = std::max(o.max_x, std::abs(x));
            }
            while (next_cp < C && cp_step[next_cp] == i + 1) {
                double xi = std::exp(log_xi);
                double xc = i + 1 == N ? policy.terminal_wealth(xi) : policy.wealth_total(dt * static_cast<double>(i + 1), xi);
                cp_vals[p * C + next_cp] = xi * xc;
                ++next_cp;
            }
        }
        o.log_xi = log_xi;
        o.xt_closed = policy.terminal_wealth(std::exp(log_xi));
        o.xt_euler = x;
        if (!cfg.euler) sum_wealth[N] += o.xt_closed;
    };

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t b = next++; b < nblocks; b = next++) {
            std::size_t lo = b * kBlock, hi = std::min(P, lo + kBlock);
            for (std::size_t p = lo; p < hi; ++p) run_path(p, blk_logxi[b], blk_wealth[b]);
        }
    };
    unsigned nt = std::min<unsigned>(worker_threads(), static_cast<unsigned>(nblocks));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < nt; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    SimResult res;
    res.config = cfg;
    res.x0 = policy.x0();
    res.horizon = T;
    res.mean_log_xi.assign(N + 1, 0.0);
    res.mean_wealth.assign(N + 1, 0.0);
    for (std::size_t b = 0; b < nblocks; ++b)
        for (std::size_t i = 0; i <= N; ++i) {
            res.mean_log_xi[i] += blk_logxi[b][i];
            res.mean_wealth[i] += blk_wealth[b][i];
        }
    for (std::size_t i = 0; i <= N; ++i) {
        res.mean_log_xi[i] /= static_cast<double>(P);
        res.mean_wealth[i] /= static_cast<double>(P);
    }
    if (!cfg.euler) {
        for (std::size_t i = 1; i < N; ++i) res.mean_wealth[i] = std::nan("");
    }

    std::vector<double> pi_pow;
    double gap = 0.0;
    for (const auto& o : out) {
        res.terminal_closed.push_back(o.xt_closed);
        res.log_xi_T.push_back(o.log_xi);
        if (cfg.euler) {
            res.terminal_euler.push_back(o.xt_euler);
            gap += std::abs(o.xt_closed - o.xt_euler);
            pi_pow.push_back(o.pi_power);
            res.max_abs_pi = std::max(res.max_abs_pi, o.max_pi);
            res.max_abs_wealth = std::max(res.max_abs_wealth, o.max_x);
        }
    }
    if (cfg.euler) {
        res.mean_abs_gap = gap / static_cast<double>(P);
        res.pi_power_q50 = quantile(pi_pow, 0.5);
        res.pi_power_q95 = quantile(pi_pow, 0.95);
        res.pi_power_max = quantile(pi_pow, 1.0);
    }
    for (std::size_t c = 0; c < C; ++c) {
        std::vector<double> v;
        if (cfg.antithetic) {
            for (std::size_t p = 0; p < P; p += 2) v.push_back(0.5 * (cp_vals[p * C + c] + cp_vals[(p + 1) * C + c]));
        } else {
            for (std::size_t p = 0; p < P; ++p) v.push_back(cp_vals[p * C + c]);
        }
        MeanSE ms = mean_se(v);
        res.checkpoints.push_back({T * static_cast<double>(cp_step[c]) / static_cast<double>(N), ms.mean, ms.se});
    }
    return res;
}

MartingaleReport martingale_check(const SimResult& sim, double z) {
    MartingaleReport rep;
    for (const auto& c : sim.checkpoints) {
        double res = c.mean - sim.x0;
        bool pass = std::abs(res) < z * c.se || std::abs(res) <= 1e-12 * std::max(1.0, std::abs(sim.x0));
        rep.rows.push_back({c.t, c.mean, c.se, res, pass});
        rep.pass = rep.pass && pass;
    }
    return rep;
}

}  // namespace psahara
