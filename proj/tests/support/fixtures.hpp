#pragma once
#include <cmath>

#include "psahara/incentive.hpp"
#include "psahara/market.hpp"
#include "psahara/utility.hpp"

namespace fixtures {

// worked example: jumps at -6 and -4.5, decreasing power arc, flat stretch on [-1, 2)
inline constexpr double kB1 = -890.0;
inline constexpr double kB2 = -200.0;
inline constexpr double kB3 = -227.31269525322924;
inline constexpr double kB4 = -41.10611536799175;

inline psahara::RawUtility example_raw() {
    using psahara::RawPiece;
    using psahara::SaharaPiece;
    psahara::RawUtility U;
    U.breakpoints = {-6.0, -4.5, -1.0, 2.0};
    U.pieces = {
        RawPiece::from_sahara(SaharaPiece{1.7, 1.0, 3.0, 2.0, 0.0}),
        RawPiece::power(-20.0, -4.5, -0.7, kB1),
        RawPiece::from_sahara(SaharaPiece{2.2, 1.0, 1.0, 1.5, kB2}),
        RawPiece::linear_piece(0.0, kB3),
        RawPiece::from_sahara(SaharaPiece{1.2, 1.0, 6.0, 7.0, kB4}),
    };
    return U;
}

// scalar market with r = 0.03, mu = 0.086, sigma = 0.1 over one year
inline psahara::MarketModel scalar_market(std::size_t cells = 252, double T = 1.0) {
    return psahara::MarketModel::constant(T, cells, 0.03, 0.086, 0.1);
}

inline psahara::IncentiveParams incentive_params(double T = 1.0) {
    psahara::IncentiveParams p;
    p.w = 0.2;
    p.v = 0.02;
    p.B_T = std::exp(0.05 * T);
    p.alpha = 2.0;
    p.beta = 1.0;
    p.d = 0.0;
    return p;
}

}  // namespace fixtures
