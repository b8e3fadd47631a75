#include "psahara/io.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "psahara/common.hpp"

namespace psahara {

namespace {

double num(const json& j, const char* key) {
    if (!j.contains(key)) throw ValidationError(std::string("missing field \"") + key + "\"");
    const auto& v = j.at(key);
    if (!v.is_number()) throw ValidationError(std::string("field \"") + key + "\" must be a number");
    return v.get<double>();
}

double num_or(const json& j, const char* key, double fallback) { return j.contains(key) ? num(j, key) : fallback; }

const json& arr(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_array())
        throw ValidationError(std::string("field \"") + key + "\" must be an array");
    return j.at(key);
}

std::vector<double> num_list(const json& j) {
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw ValidationError("expected an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

Eigen::VectorXd vec(const json& j) {
    auto v = num_list(j);
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd mat(const json& j) {
    if (!j.is_array() || j.empty()) throw ValidationError("expected a nonempty matrix");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.at(0).size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j.at(static_cast<std::size_t>(i));
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw ValidationError("ragged matrix");
        for (Eigen::Index k = 0; k < cols; ++k) {
            const auto& v = row.at(static_cast<std::size_t>(k));
            if (!v.is_number()) throw ValidationError("matrix entries must be numbers");
            m(i, k) = v.get<double>();
        }
    }
    return m;
}

int depth(const json& j) {
    int d = 0;
    const json* p = &j;
    while (p->is_array()) {
        ++d;
        if (p->empty()) break;
        p = &p->at(0);
    }
    return d;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        auto b = cell.find_first_not_of(" \t\r\"");
        auto e = cell.find_last_not_of(" \t\r\"");
        out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_cell(const std::string& s, std::size_t line) {
    if (s.empty()) throw ValidationError("missing value on line " + std::to_string(line));
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ValidationError("bad number '" + s + "' on line " + std::to_string(line));
    }
    if (pos != s.size()) throw ValidationError("bad number '" + s + "' on line " + std::to_string(line));
    return v;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

Table read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open " + path);
    Table t;
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = split_csv(line);
        if (t.header.empty()) {
            t.header = cells;
            continue;
        }
        if (cells.size() != t.header.size())
            throw ValidationError("line " + std::to_string(no) + " has " + std::to_string(cells.size()) +
                                  " fields, expected " + std::to_string(t.header.size()));
        t.rows.push_back(std::move(cells));
    }
    if (t.header.size() < 2) throw ValidationError(path + ": expected a header date,asset1,...");
    return t;
}

template <class Panel>
void fill_panel(const Table& t, Panel& p, Eigen::MatrixXd& values) {
    p.assets.assign(t.header.begin() + 1, t.header.end());
    values.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(p.assets.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        p.dates.push_back(t.rows[i][0]);
        for (std::size_t k = 1; k < t.header.size(); ++k)
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k - 1)) = parse_cell(t.rows[i][k], i + 2);
    }
}

}  // namespace

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw FileError("cannot write " + path);
    out << text;
}

void write_json_file(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

json to_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json to_json(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Eigen::VectorXd(m.row(i).transpose())));
    return out;
}

json to_json(const SaharaPiece& p) {
    return {{"alpha", p.alpha}, {"beta", p.beta}, {"d", p.d}, {"gamma", p.gamma}, {"u", p.u}, {"hara_limit", p.hara_limit}};
}

json to_json(const PiecewiseUtility& U) {
    json pieces = json::array();
    for (const auto& p : U.pieces()) pieces.push_back(to_json(p));
    return {{"breakpoints", U.breakpoints()}, {"pieces", pieces}};
}

json to_json(const RawUtility& U) {
    json pieces = json::array();
    for (const auto& p : U.pieces) {
        switch (p.kind) {
            case RawPiece::Kind::sahara: {
                json j = to_json(p.sahara);
                j["kind"] = "sahara";
                pieces.push_back(j);
                break;
            }
            case RawPiece::Kind::linear:
                pieces.push_back({{"kind", "linear"}, {"slope", p.slope}, {"intercept", p.intercept}});
                break;
            case RawPiece::Kind::power:
                pieces.push_back({{"kind", "power"}, {"coef", p.coef}, {"anchor", p.anchor}, {"exponent", p.exponent}, {"shift", p.shift}});
                break;
        }
    }
    return {{"breakpoints", U.breakpoints}, {"pieces", pieces}};
}

json to_json(const LinearContract& h) {
    json segs = json::array();
    for (const auto& s : h.segments())
        segs.push_back({{"from", finite_or_null(s.from)}, {"slope", s.slope}, {"intercept", s.intercept}});
    return {{"segments", segs}};
}

json to_json(const MarketModel& M) {
    const std::size_t n = M.cells();
    bool constant = true;
    const auto& c0 = M.cell(0);
    for (std::size_t i = 1; i < n && constant; ++i) {
        const auto& c = M.cell(i);
        constant = c.r == c0.r && c.mu == c0.mu && c.sigma == c0.sigma;
    }
    json j = {{"T", M.horizon()}, {"steps_per_year", static_cast<double>(n) / M.horizon()}};
    if (constant) {
        j["r"] = c0.r;
        j["mu"] = to_json(c0.mu);
        j["sigma"] = to_json(c0.sigma);
    } else {
        json r = json::array(), mu = json::array(), sigma = json::array();
        for (std::size_t i = 0; i < n; ++i) {
            r.push_back(M.cell(i).r);
            mu.push_back(to_json(M.cell(i).mu));
            sigma.push_back(to_json(M.cell(i).sigma));
        }
        j["r"] = r;
        j["mu"] = mu;
        j["sigma"] = sigma;
    }
    if (M.allows_zero_premium()) j["allow_zero_premium"] = true;
    return j;
}

json to_json(const OptimalPolicy& policy) {
    return {{"utility", to_json(policy.envelope())},
            {"market", to_json(policy.market())},
            {"x0", policy.x0()},
            {"y_star", policy.y_star()}};
}

json to_json(const EnvelopeResult& r) {
    json bridges = json::array();
    for (const auto& b : r.bridges) bridges.push_back({{"left", b.left}, {"right", b.right}, {"slope", b.slope}});
    json j = to_json(r.envelope);
    j["bridges"] = bridges;
    j["kinks"] = r.kinks;
    return j;
}

json to_json(const ValidationReport& r) {
    json bps = json::array();
    for (const auto& b : r.breakpoints)
        bps.push_back({{"at", b.at},
                       {"left_value", finite_or_null(b.left_value)},
                       {"right_value", finite_or_null(b.right_value)},
                       {"residual", finite_or_null(b.residual)},
                       {"left_slope", finite_or_null(b.left_slope)},
                       {"right_slope", finite_or_null(b.right_slope)},
                       {"continuous", b.continuous}});
    json dec = json::array();
    for (const auto& iv : r.decreasing) dec.push_back({iv.lo, iv.hi});
    json discontinuities = json::array();
    for (const auto& b : r.breakpoints)
        if (!b.continuous) discontinuities.push_back(b.at);
    return {{"clean", r.clean()},
            {"breakpoints", bps},
            {"discontinuities", discontinuities},
            {"decreasing", dec},
            {"slope_chain_consistent", r.slope_chain_consistent},
            {"problems", r.problems}};
}

json to_json(const SimResult& s) {
    json cps = json::array();
    for (const auto& c : s.checkpoints) cps.push_back({{"t", c.t}, {"mean", c.mean}, {"se", c.se}});
    return {{"paths", s.config.n_paths},
            {"steps", s.config.n_steps},
            {"seed", s.config.seed},
            {"antithetic", s.config.antithetic},
            {"x0", s.x0},
            {"T", s.horizon},
            {"checkpoints", cps},
            {"mean_log_xi", s.mean_log_xi},
            {"mean_wealth", s.mean_wealth},
            {"mean_abs_gap", s.mean_abs_gap},
            {"max_abs_pi", s.max_abs_pi},
            {"max_abs_wealth", s.max_abs_wealth},
            {"pi_power_integral", {{"q50", s.pi_power_q50}, {"q95", s.pi_power_q95}, {"max", s.pi_power_max}}},
            {"terminal_closed", s.terminal_closed},
            {"terminal_euler", s.terminal_euler}};
}

json to_json(const MartingaleReport& r) {
    json rows = json::array();
    for (const auto& x : r.rows)
        rows.push_back({{"t", x.t}, {"mean", x.mean}, {"se", x.se}, {"residual", x.residual}, {"pass", x.pass}});
    return {{"pass", r.pass}, {"rows", rows}};
}

json to_json(const BacktestReport& r) {
    json pos = json::array();
    for (const auto& p : r.positions) pos.push_back(to_json(p));
    json returns = json::array();
    for (double x : r.returns) returns.push_back(finite_or_null(x));
    return {{"times", r.times},
            {"wealth", r.wealth},
            {"log_xi", r.log_xi},
            {"positions", pos},
            {"returns", returns},
            {"simple_return", r.simple_return},
            {"max_drawdown", r.max_drawdown},
            {"min_wealth", r.min_wealth},
            {"max_financing_residual", r.max_financing_residual}};
}

json to_json(const VolEstimate& v) {
    return {{"method", v.method}, {"sigma", to_json(v.sigma)}, {"norms", to_json(v.norms)}};
}

SaharaPiece piece_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("piece must be an object");
    SaharaPiece p;
    p.alpha = num(j, "alpha");
    p.beta = num(j, "beta");
    p.d = num(j, "d");
    p.gamma = num_or(j, "gamma", 1.0);
    p.u = num_or(j, "u", 0.0);
    p.hara_limit = j.value("hara_limit", false);
    check_piece(p);
    return p;
}

PiecewiseUtility utility_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("utility must be an object");
    std::vector<double> bps = j.contains("breakpoints") ? num_list(arr(j, "breakpoints")) : std::vector<double>{};
    std::vector<SaharaPiece> pieces;
    for (const auto& p : arr(j, "pieces")) {
        if (p.contains("kind") && p.at("kind") != "sahara")
            throw ValidationError("piece kind " + p.at("kind").dump() + " is not PSAHARA");
        pieces.push_back(piece_from_json(p));
    }
    return PiecewiseUtility(std::move(bps), std::move(pieces));
}

bool is_piecewise_json(const json& j) {
    if (!j.is_object() || !j.contains("pieces") || !j.at("pieces").is_array()) return false;
    for (const auto& p : j.at("pieces"))
        if (p.contains("kind") && p.at("kind") != "sahara") return false;
    return true;
}

RawUtility raw_utility_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("utility must be an object");
    RawUtility U;
    if (j.contains("breakpoints")) U.breakpoints = num_list(arr(j, "breakpoints"));
    for (const auto& p : arr(j, "pieces")) {
        const std::string kind = p.value("kind", "sahara");
        if (kind == "sahara")
            U.pieces.push_back(RawPiece::from_sahara(piece_from_json(p)));
        else if (kind == "linear")
            U.pieces.push_back(RawPiece::linear_piece(num(p, "slope"), num(p, "intercept")));
        else if (kind == "power")
            U.pieces.push_back(RawPiece::power(num(p, "coef"), num(p, "anchor"), num(p, "exponent"), num_or(p, "shift", 0.0)));
        else
            throw ValidationError("unknown piece kind: " + kind);
    }
    U.check();
    return U;
}

LinearContract contract_from_json(const json& j) {
    std::vector<ContractSegment> segs;
    for (const auto& s : arr(j, "segments")) {
        double from = -kInf;
        if (s.contains("from") && !s.at("from").is_null()) from = num(s, "from");
        segs.push_back({from, num(s, "slope"), num_or(s, "intercept", 0.0)});
    }
    return LinearContract(std::move(segs));
}

MarketModel market_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("market must be an object");
    const double T = num(j, "T");
    if (!(T > 0.0)) throw ValidationError("T must be positive");
    const double spy = num_or(j, "steps_per_year", 252.0);
    if (!(spy > 0.0)) throw ValidationError("steps_per_year must be positive");
    const auto n = static_cast<std::size_t>(std::max(1.0, std::round(T * spy)));
    if (!j.contains("r") || !j.contains("mu") || !j.contains("sigma"))
        throw ValidationError("market needs r, mu and sigma");

    const json &jr = j.at("r"), &jm = j.at("mu"), &js = j.at("sigma");
    auto per_cell = [n](const json& v, int d_const, const char* name) {
        const int d = depth(v);
        if (d == d_const) return false;
        if (d == d_const + 1) {
            if (v.size() != n)
                throw ValidationError(std::string(name) + " path has " + std::to_string(v.size()) + " entries, expected " +
                                      std::to_string(n));
            return true;
        }
        throw ValidationError(std::string("bad shape for ") + name);
    };
    // mu: number | [m] | [[m] per cell]; sigma: number | [[q] x m] | per cell
    const bool r_path = per_cell(jr, 0, "r");
    const bool mu_path = jm.is_number() ? false : per_cell(jm, 1, "mu");
    const bool s_path = js.is_number() ? false : per_cell(js, 2, "sigma");
    auto mu_at = [&](std::size_t i) -> Eigen::VectorXd {
        if (jm.is_number()) return Eigen::VectorXd::Constant(1, jm.get<double>());
        return vec(mu_path ? jm.at(i) : jm);
    };
    auto sigma_at = [&](std::size_t i) -> Eigen::MatrixXd {
        if (js.is_number()) return Eigen::MatrixXd::Constant(1, 1, js.get<double>());
        return mat(s_path ? js.at(i) : js);
    };
    std::vector<MarketModel::Cell> cells(n);
    for (std::size_t i = 0; i < n; ++i) {
        const json& rv = r_path ? jr.at(i) : jr;
        if (!rv.is_number()) throw ValidationError("r entries must be numbers");
        cells[i].r = rv.get<double>();
        cells[i].mu = mu_at(i);
        cells[i].sigma = sigma_at(i);
    }
    return MarketModel(T, std::move(cells), j.value("allow_zero_premium", false));
}

OptimalPolicy policy_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("policy must be an object");
    if (!j.contains("utility") || !j.contains("market")) throw ValidationError("policy needs utility and market");
    PiecewiseUtility U = utility_from_json(j.at("utility"));
    MarketModel M = market_from_json(j.at("market"));
    const double x0 = num(j, "x0");
    if (j.contains("y_star") && !j.at("y_star").is_null()) return OptimalPolicy(std::move(U), std::move(M), x0, num(j, "y_star"));
    return OptimalPolicy::solve(std::move(U), std::move(M), x0);
}

ReturnsPanel read_returns_csv(const std::string& path, double h) {
    Table t = read_table(path);
    ReturnsPanel p;
    p.h = h;
    fill_panel(t, p, p.returns);
    if (p.returns.rows() < 2) throw ValidationError(path + ": need at least 2 observations");
    return p;
}

PricePanel read_prices_csv(const std::string& path) {
    Table t = read_table(path);
    PricePanel p;
    fill_panel(t, p, p.prices);
    p.check();
    return p;
}

std::vector<OptionQuote> read_options_csv(const std::string& path) {
    Table t = read_table(path);
    std::map<std::string, std::size_t> col;
    for (std::size_t k = 0; k < t.header.size(); ++k) col[t.header[k]] = k;
    for (const char* name : {"asset", "S", "K", "r", "T", "price"})
        if (!col.count(name)) throw ValidationError(path + ": missing column " + name);
    std::vector<OptionQuote> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        auto f = [&](const char* name) { return parse_cell(row[col[name]], i + 2); };
        out.push_back({row[col["asset"]], f("S"), f("K"), f("r"), f("T"), f("price")});
    }
    return out;
}

}  // namespace psahara
