#pragma once
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "psahara/backtest.hpp"
#include "psahara/envelope.hpp"
#include "psahara/market.hpp"
#include "psahara/montecarlo.hpp"
#include "psahara/policy.hpp"
#include "psahara/utility.hpp"
#include "psahara/volatility.hpp"

namespace psahara {

using json = nlohmann::json;

struct FileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
void write_json_file(const std::string& path, const json& j);

json to_json(const SaharaPiece& p);
json to_json(const PiecewiseUtility& U);
json to_json(const RawUtility& U);
json to_json(const LinearContract& h);
json to_json(const MarketModel& M);
json to_json(const OptimalPolicy& policy);
json to_json(const EnvelopeResult& r);
json to_json(const ValidationReport& r);
json to_json(const SimResult& s);
json to_json(const MartingaleReport& r);
json to_json(const BacktestReport& r);
json to_json(const VolEstimate& v);
json to_json(const Eigen::MatrixXd& m);
json to_json(const Eigen::VectorXd& v);

SaharaPiece piece_from_json(const json& j);
PiecewiseUtility utility_from_json(const json& j);
// accepts both the PSAHARA schema and pieces tagged with "kind": sahara | linear | power
RawUtility raw_utility_from_json(const json& j);
bool is_piecewise_json(const json& j);
LinearContract contract_from_json(const json& j);
// {"T", "steps_per_year", "r", "mu", "sigma"}; scalars and constant vectors/matrices broadcast over cells
MarketModel market_from_json(const json& j);
// solves for y* when "y_star" is absent
OptimalPolicy policy_from_json(const json& j);

// date,asset1,asset2,... with decimal returns
ReturnsPanel read_returns_csv(const std::string& path, double h = 1.0 / 252.0);
// date,asset1,asset2,... with positive prices
PricePanel read_prices_csv(const std::string& path);

struct OptionQuote {
    std::string asset;
    double S, K, r, T, price;
};
// asset,S,K,r,T,price
std::vector<OptionQuote> read_options_csv(const std::string& path);

}  // namespace psahara
