#include <cmath>

#include <benchmark/benchmark.h>

#include "psahara/envelope.hpp"
#include "psahara/incentive.hpp"
#include "psahara/montecarlo.hpp"
#include "psahara/policy.hpp"
#include "psahara/volatility.hpp"

using namespace psahara;

namespace {

RawUtility example_raw() {
    RawUtility U;
    U.breakpoints = {-6.0, -4.5, -1.0, 2.0};
    U.pieces = {
        RawPiece::from_sahara(SaharaPiece{1.7, 1.0, 3.0, 2.0, 0.0}),
        RawPiece::power(-20.0, -4.5, -0.7, -890.0),
        RawPiece::from_sahara(SaharaPiece{2.2, 1.0, 1.0, 1.5, -200.0}),
        RawPiece::linear_piece(0.0, -227.31269525322924),
        RawPiece::from_sahara(SaharaPiece{1.2, 1.0, 6.0, 7.0, -41.10611536799175}),
    };
    return U;
}

MarketModel scalar_market() { return MarketModel::constant(1.0, 252, 0.03, 0.086, 0.1); }

const OptimalPolicy& policy() {
    static const OptimalPolicy P = OptimalPolicy::solve(concave_envelope(example_raw()).envelope, scalar_market(), 1.0);
    return P;
}

IncentiveParams incentive() {
    IncentiveParams p;
    p.B_T = std::exp(0.05);
    return p;
}

}  // namespace

static void BM_EnvelopeExample(benchmark::State& state) {
    const auto U = example_raw();
    for (auto _ : state) benchmark::DoNotOptimize(concave_envelope(U));
}
BENCHMARK(BM_EnvelopeExample);

static void BM_EnvelopeIncentive(benchmark::State& state) {
    const auto U = incentive_utility(incentive());
    for (auto _ : state) benchmark::DoNotOptimize(concave_envelope(U));
}
BENCHMARK(BM_EnvelopeIncentive);

static void BM_SolveMultiplier(benchmark::State& state) {
    const auto E = concave_envelope(example_raw()).envelope;
    const auto M = scalar_market();
    for (auto _ : state) benchmark::DoNotOptimize(solve_multiplier(E, M, 1.0));
}
BENCHMARK(BM_SolveMultiplier);

static void BM_PolicyWealth(benchmark::State& state) {
    const auto& P = policy();
    double xi = 0.5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(P.wealth_total(0.3, xi));
        xi = xi < 2.0 ? xi * 1.01 : 0.5;
    }
}
BENCHMARK(BM_PolicyWealth);

static void BM_PolicyPortfolio(benchmark::State& state) {
    const auto& P = policy();
    double xi = 0.5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(P.portfolio(0.3, xi));
        xi = xi < 2.0 ? xi * 1.01 : 0.5;
    }
}
BENCHMARK(BM_PolicyPortfolio);

static void BM_Simulate(benchmark::State& state) {
    SimConfig cfg;
    cfg.n_paths = static_cast<std::size_t>(state.range(0));
    cfg.n_steps = 252;
    for (auto _ : state) benchmark::DoNotOptimize(simulate(policy(), cfg));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Simulate)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_ImpliedVol(benchmark::State& state) {
    const double price = bs_put_price(100.0, 95.0, 0.02, 0.5, 0.23);
    for (auto _ : state) benchmark::DoNotOptimize(implied_vol(price, 100.0, 95.0, 0.02, 0.5));
}
BENCHMARK(BM_ImpliedVol);

BENCHMARK_MAIN();
