#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#if __has_include(<CLI/CLI.hpp>)
#include <CLI/CLI.hpp>
#else
#include "CLI11.hpp"
#endif
#include "psahara/backtest.hpp"
#include "psahara/envelope.hpp"
#include "psahara/incentive.hpp"
#include "psahara/io.hpp"
#include "psahara/montecarlo.hpp"
#include "psahara/policy.hpp"
#include "psahara/stats.hpp"
#include "psahara/volatility.hpp"

using namespace psahara;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitUsage = 64;
constexpr int kExitNoInput = 66;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::map<std::string, double> parse_pairs(const std::string& spec) {
    std::map<std::string, double> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos) throw UsageError("expected key=value in '" + spec + "'");
        try {
            out[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw UsageError("bad number in '" + item + "'");
        }
    }
    return out;
}

std::pair<double, double> parse_range(const std::string& spec) {
    auto c = spec.find(':');
    if (c == std::string::npos) throw UsageError("range must look like a:b");
    try {
        return {std::stod(spec.substr(0, c)), std::stod(spec.substr(c + 1))};
    } catch (const std::exception&) {
        throw UsageError("bad range '" + spec + "'");
    }
}

void emit(const std::string& out, const json& j) {
    if (out.empty() || out == "-")
        std::cout << j.dump(2) << "\n";
    else
        write_json_file(out, j);
}

struct PolicyInputs {
    std::string policy, utility, market;
    std::optional<double> x0;
};

void add_policy_inputs(CLI::App* sc, PolicyInputs& in) {
    sc->add_option("--policy", in.policy, "policy JSON {utility, market, x0[, y_star]}");
    sc->add_option("--utility", in.utility, "utility JSON (enveloped automatically when not concave)");
    sc->add_option("--market", in.market, "market JSON");
    sc->add_option("--x0", in.x0, "initial wealth");
}

struct Loaded {
    OptimalPolicy policy;
    bool enveloped;
};

Loaded load_policy(const PolicyInputs& in) {
    if (!in.policy.empty()) {
        json j = read_json_file(in.policy);
        if (in.x0) j["x0"] = *in.x0;
        return {policy_from_json(j), false};
    }
    if (in.utility.empty() || in.market.empty() || !in.x0)
        throw UsageError("give --policy, or --utility with --market and --x0");
    const json ju = read_json_file(in.utility);
    MarketModel M = market_from_json(read_json_file(in.market));
    bool enveloped = false;
    PiecewiseUtility U;
    if (is_piecewise_json(ju)) {
        U = utility_from_json(ju);
        if (!is_concave(U).concave) {
            U = concave_envelope(U).envelope;
            enveloped = true;
        }
    } else {
        U = concave_envelope(raw_utility_from_json(ju)).envelope;
        enveloped = true;
    }
    return {OptimalPolicy::solve(std::move(U), std::move(M), *in.x0), enveloped};
}

json eval_json(const OptimalPolicy& P, double t, double xi) {
    const auto w = P.wealth(t, xi);
    const auto pt = P.portfolio(t, xi);
    const auto ex = P.exposure(t, xi);
    return {{"t", t},
            {"xi", xi},
            {"wealth", {{"total", w.total}, {"X_D", w.D}, {"X_B", w.B}, {"X_R", w.R}, {"X_Rbar", w.Rbar}}},
            {"portfolio",
             {{"total", to_json(pt.total)},
              {"pi_1", to_json(pt.pi1)},
              {"pi_2", to_json(pt.pi2)},
              {"pi_3", to_json(pt.pi3)},
              {"pi_4", to_json(pt.pi4)}}},
            {"exposure", {{"s1", ex.s1}, {"s2", ex.s2}, {"s3", ex.s3}, {"s4", ex.s4}}}};
}

int run_envelope(const std::string& in, const std::string& out, std::optional<double> grid) {
    const json j = read_json_file(in);
    const RawUtility U = raw_utility_from_json(j);
    const EnvelopeResult r = concave_envelope(U);
    json res = to_json(r);
    if (grid) {
        if (!(*grid > 0.0)) throw ValidationError("--grid-check spacing must be positive");
        double lo = -10.0, hi = 10.0;
        if (!U.breakpoints.empty()) {
            lo = U.breakpoints.front() - 10.0;
            hi = U.breakpoints.back() + 10.0;
        }
        lo = std::max(lo, U.domain_lo() + *grid);
        double worst = 0.0;
        const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / *grid));
        for (std::size_t i = 0; i <= n; ++i) {
            const double x = lo + static_cast<double>(i) * *grid;
            const double u = U(x);
            worst = std::max(worst, (u - psahara_eval(r.envelope, x)) / std::max(1.0, std::abs(u)));
        }
        const bool ok = worst <= 1e-9 && is_concave(r.envelope).concave;
        std::cout << json{{"grid_check", {{"spacing", *grid}, {"points", n + 1}, {"max_shortfall", worst}, {"pass", ok}}}}.dump()
                  << "\n";
        if (!ok) throw ValidationError("envelope failed the grid check");
    }
    emit(out, res);
    return 0;
}

int run_policy(const PolicyInputs& in, const std::vector<std::string>& evals, const std::string& out) {
    Loaded L = load_policy(in);
    const auto& P = L.policy;
    json res = to_json(P);
    res["enveloped"] = L.enveloped;
    try {
        auto [lo, hi] = asymptotic_limits(P, 0.0);
        res["limits"] = {{"xi_to_0", to_json(lo)}, {"xi_to_inf", to_json(hi)}};
    } catch (const DomainError&) {
    }
    json ev = json::array();
    for (const auto& e : evals) {
        auto kv = parse_pairs(e);
        if (!kv.count("t") || !kv.count("xi")) throw UsageError("--eval needs t=...,xi=...");
        ev.push_back(eval_json(P, kv["t"], kv["xi"]));
    }
    res["evaluations"] = ev;
    emit(out, res);
    return 0;
}

int run_simulate(const PolicyInputs& in, SimConfig cfg, const std::string& out) {
    const OptimalPolicy P = load_policy(in).policy;
    const SimResult s = simulate(P, cfg);
    json res = to_json(s);
    res["martingale"] = to_json(martingale_check(s));
    emit(out, res);
    return 0;
}

struct BacktestArgs {
    std::string prices, options, incentive, utility, estimator = "historical", out;
    double alpha = 2.0, beta = 1.0, d = 0.0, rf = 0.0, r = 0.0, x0 = 1.0, fraction = 0.8, steps_per_year = 252.0;
};

int run_backtest_cmd(const BacktestArgs& a) {
    const PricePanel panel = read_prices_csv(a.prices);
    const double h = 1.0 / a.steps_per_year;
    const std::size_t n_ret = static_cast<std::size_t>(panel.prices.rows()) - 1;
    if (!(a.fraction > 0.0 && a.fraction < 1.0)) throw ValidationError("estimation fraction must lie in (0, 1)");
    const auto n_est = static_cast<std::size_t>(std::floor(a.fraction * static_cast<double>(n_ret)));
    if (n_est < 2 || n_est >= n_ret) throw ValidationError("price panel too short for the estimation/trading split");
    const std::size_t trade = n_ret - n_est;

    Eigen::VectorXd implied;
    if (a.estimator == "implied") {
        if (a.options.empty()) throw UsageError("--estimator implied needs --options");
        const auto quotes = read_options_csv(a.options);
        implied.resize(panel.prices.cols());
        for (Eigen::Index j = 0; j < implied.size(); ++j) {
            double acc = 0.0;
            int cnt = 0;
            for (const auto& q : quotes)
                if (q.asset == panel.assets[static_cast<std::size_t>(j)]) {
                    acc += implied_vol(q.price, q.S, q.K, q.r, q.T);
                    ++cnt;
                }
            if (cnt == 0) throw ValidationError("no option quotes for " + panel.assets[static_cast<std::size_t>(j)]);
            implied(j) = acc / cnt;
        }
    }
    const MarketEstimate est = estimate_market(panel, n_est, h, a.r, trade, a.estimator, implied);
    PricePanel window;
    window.assets = panel.assets;
    window.prices = panel.prices.bottomRows(static_cast<Eigen::Index>(trade + 1));
    if (!panel.dates.empty()) window.dates.assign(panel.dates.end() - static_cast<std::ptrdiff_t>(trade + 1), panel.dates.end());

    const double T = est.market.horizon();
    json strategy;
    BacktestReport rep;
    if (!a.utility.empty()) {
        const json ju = read_json_file(a.utility);
        PiecewiseUtility U = is_piecewise_json(ju) ? utility_from_json(ju) : concave_envelope(raw_utility_from_json(ju)).envelope;
        if (!is_concave(U).concave) U = concave_envelope(U).envelope;
        const OptimalPolicy P = OptimalPolicy::solve(std::move(U), est.market, a.x0);
        rep = run_backtest(make_strategy(P), est.market, window);
        strategy = {{"kind", "psahara"}, {"y_star", P.y_star()}};
    } else {
        IncentiveParams ip;
        ip.alpha = a.alpha;
        ip.beta = a.beta;
        ip.d = a.d;
        ip.B_T = a.x0 * std::exp(a.r * T);
        if (!a.incentive.empty()) {
            auto kv = parse_pairs(a.incentive);
            for (const auto& [k, v] : kv) {
                if (k == "w") ip.w = v;
                else if (k == "v") ip.v = v;
                else if (k == "B_T") ip.B_T = v;
                else throw UsageError("unknown incentive key " + k);
            }
        }
        const IncentivePolicy P = IncentivePolicy::solve(ip, est.market, a.x0);
        rep = run_backtest(make_strategy(P, a.x0), est.market, window);
        strategy = {{"kind", "incentive"},
                    {"w", ip.w},
                    {"v", ip.v},
                    {"B_T", ip.B_T},
                    {"alpha", ip.alpha},
                    {"beta", ip.beta},
                    {"d", ip.d},
                    {"y_star", P.y_star()},
                    {"bridge", {P.tangent_left(), P.tangent_right()}}};
    }
    json res = to_json(rep);
    res["strategy"] = strategy;
    res["estimator"] = to_json(est.vol);
    res["mu"] = to_json(est.mu);
    res["market"] = to_json(est.market);
    res["estimation_observations"] = n_est;
    res["trading_observations"] = trade;
    res["dates"] = window.dates;
    try {
        res["sharpe_ratio"] = sharpe_ratio(rep, a.rf);
    } catch (const std::exception& e) {
        res["sharpe_ratio"] = nullptr;
        res["sharpe_error"] = e.what();
    }
    res["rf"] = a.rf;
    emit(a.out, res);
    return 0;
}

int run_plot(const PolicyInputs& in, const std::string& sweep, const std::string& range, bool logscale, int points,
             double t, const std::string& out) {
    if (sweep != "xi") throw UsageError("only --sweep xi is supported");
    if (points < 2) throw UsageError("--points must be at least 2");
    auto [a, b] = parse_range(range);
    if (!(b > a) || (logscale && !(a > 0.0))) throw ValidationError("range must be increasing (and positive with --log)");
    const OptimalPolicy P = load_policy(in).policy;
    const auto m = static_cast<Eigen::Index>(P.market().assets());
    std::ostringstream os;
    os.precision(17);
    auto name = [m](const std::string& base, Eigen::Index j) { return m == 1 ? base : base + "_" + std::to_string(j + 1); };
    os << "xi,X_total,X_D,X_B,X_R,X_Rbar";
    for (const char* term : {"pi_1", "pi_2", "pi_3", "pi_4"})
        for (Eigen::Index j = 0; j < m; ++j) os << "," << name(term, j);
    for (Eigen::Index j = 0; j < m; ++j) os << "," << name("pi_over_X", j);
    os << "\n";
    for (int i = 0; i < points; ++i) {
        const double f = static_cast<double>(i) / (points - 1);
        const double xi = logscale ? std::exp(std::log(a) + f * (std::log(b) - std::log(a))) : a + f * (b - a);
        const auto w = P.wealth(t, xi);
        const auto pt = P.portfolio(t, xi);
        os << xi << "," << w.total << "," << w.D << "," << w.B << "," << w.R << "," << w.Rbar;
        for (const auto* v : {&pt.pi1, &pt.pi2, &pt.pi3, &pt.pi4})
            for (Eigen::Index j = 0; j < m; ++j) os << "," << (*v)(j);
        for (Eigen::Index j = 0; j < m; ++j) os << "," << pt.total(j) / w.total;
        os << "\n";
    }
    if (out.empty() || out == "-")
        std::cout << os.str();
    else
        write_text_file(out, os.str());
    return 0;
}

int run_validate(const std::string& in, const std::string& out, double lo, double hi, std::size_t points) {
    const json j = read_json_file(in);
    GridSpec g;
    g.lo = lo;
    g.hi = hi;
    g.points = points;
    json res;
    if (is_piecewise_json(j)) {
        try {
            res = to_json(validate(utility_from_json(j), g));
        } catch (const ValidationError&) {
            // not a valid PSAHARA utility: report it as a raw specification
            res = to_json(validate(raw_utility_from_json(j), g));
        }
    } else {
        res = to_json(validate(raw_utility_from_json(j), g));
    }
    emit(out, res);
    return 0;
}

int fail(const char* type, const std::string& msg, int code) {
    std::cerr << json{{"error", {{"type", type}, {"message", msg}}}}.dump() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PSAHARA utilities, concave envelopes and optimal portfolios", "psahara"};
    app.require_subcommand(1);

    std::string out;
    auto* env = app.add_subcommand("envelope", "concave envelope of a (raw) piecewise utility");
    std::string env_in;
    std::optional<double> grid;
    env->add_option("--utility", env_in, "utility JSON")->required();
    env->add_option("--out", out, "output JSON (stdout when omitted)");
    env->add_option("--grid-check", grid, "verify dominance and concavity on a grid with this spacing");

    PolicyInputs pol_in;
    std::vector<std::string> evals;
    auto* pol = app.add_subcommand("policy", "solve the multiplier and evaluate the optimal policy");
    add_policy_inputs(pol, pol_in);
    pol->add_option("--eval", evals, "state t=...,xi=... (repeatable)");
    pol->add_option("--out", out, "output JSON (stdout when omitted)");

    PolicyInputs sim_in;
    SimConfig cfg;
    bool no_euler = false;
    auto* sim = app.add_subcommand("simulate", "Monte Carlo of the kernel and wealth under the policy");
    add_policy_inputs(sim, sim_in);
    sim->add_option("--paths", cfg.n_paths, "number of paths")->capture_default_str();
    sim->add_option("--steps", cfg.n_steps, "time steps")->capture_default_str();
    sim->add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();
    sim->add_flag("--antithetic", cfg.antithetic, "antithetic pairs");
    sim->add_flag("--no-euler", no_euler, "skip the Euler-controlled wealth");
    sim->add_option("--out", out, "output JSON (stdout when omitted)");

    BacktestArgs bt;
    auto* back = app.add_subcommand("backtest", "estimate on the first part of a price panel, trade the rest");
    back->add_option("--prices", bt.prices, "price CSV: date,asset1,...")->required();
    back->add_option("--incentive", bt.incentive, "w=...,v=... incentive contract");
    back->add_option("--utility", bt.utility, "trade a PSAHARA utility instead of the incentive contract");
    back->add_option("--alpha", bt.alpha)->capture_default_str();
    back->add_option("--beta", bt.beta)->capture_default_str();
    back->add_option("--d", bt.d)->capture_default_str();
    back->add_option("--estimator", bt.estimator)->check(CLI::IsMember({"historical", "implied", "mle"}))->capture_default_str();
    back->add_option("--options", bt.options, "option quotes CSV: asset,S,K,r,T,price (implied estimator)");
    back->add_option("--rf", bt.rf, "per-period risk-free return for the Sharpe ratio")->capture_default_str();
    back->add_option("--r", bt.r, "annual risk-free rate of the market model")->capture_default_str();
    back->add_option("--x0", bt.x0)->capture_default_str();
    back->add_option("--estimation-fraction", bt.fraction)->capture_default_str();
    back->add_option("--steps-per-year", bt.steps_per_year)->capture_default_str();
    back->add_option("--out", bt.out, "output JSON (stdout when omitted)");

    double S = 0, K = 0, r = 0, T = 0, price = 0;
    auto* iv = app.add_subcommand("implied-vol", "Black-Scholes implied volatility of a put");
    iv->add_option("--S", S)->required();
    iv->add_option("--K", K)->required();
    iv->add_option("--r", r)->required();
    iv->add_option("--T", T)->required();
    iv->add_option("--price", price)->required();

    PolicyInputs plot_in;
    std::string sweep = "xi", range = "1e-4:1e4";
    bool logscale = false;
    int points = 201;
    double plot_t = 0.0;
    auto* plot = app.add_subcommand("plot-data", "CSV of wealth components and portfolio terms over a sweep");
    add_policy_inputs(plot, plot_in);
    plot->add_option("--sweep", sweep)->capture_default_str();
    plot->add_option("--range", range)->capture_default_str();
    plot->add_flag("--log", logscale, "logarithmic spacing");
    plot->add_option("--points", points)->capture_default_str();
    plot->add_option("--t", plot_t, "evaluation time")->capture_default_str();
    plot->add_option("--out", out, "output CSV (stdout when omitted)");

    std::string val_in;
    double vlo = kInf, vhi = -kInf;
    std::size_t vpoints = 10001;
    auto* val = app.add_subcommand("validate", "continuity, monotonicity and slope-chain report");
    val->add_option("--utility", val_in, "utility JSON")->required();
    val->add_option("--lo", vlo, "grid start");
    val->add_option("--hi", vhi, "grid end");
    val->add_option("--points", vpoints)->capture_default_str();
    val->add_option("--out", out, "output JSON (stdout when omitted)");

    if (argc <= 1) {
        std::cerr << app.help();
        return kExitUsage;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*env) return run_envelope(env_in, out, grid);
        if (*pol) return run_policy(pol_in, evals, out);
        if (*sim) {
            cfg.euler = !no_euler;
            return run_simulate(sim_in, cfg, out);
        }
        if (*back) return run_backtest_cmd(bt);
        if (*iv) {
            std::cout << json{{"implied_vol", implied_vol(price, S, K, r, T)}}.dump() << "\n";
            return 0;
        }
        if (*plot) return run_plot(plot_in, sweep, range, logscale, points, plot_t, out);
        if (*val) return run_validate(val_in, out, vlo, vhi, vpoints);
    } catch (const UsageError& e) {
        std::cerr << e.what() << "\n" << app.help();
        return kExitUsage;
    } catch (const FileError& e) {
        return fail("file", e.what(), kExitNoInput);
    } catch (const ValidationError& e) {
        return fail("validation", e.what(), kExitValidation);
    } catch (const DomainError& e) {
        return fail("domain", e.what(), kExitValidation);
    } catch (const SolverError& e) {
        return fail("solver", e.what(), kExitValidation);
    } catch (const json::exception& e) {
        return fail("validation", e.what(), kExitValidation);
    }
    return kExitUsage;
}
