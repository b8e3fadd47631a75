#include <algorithm>
#include <cmath>
#include <sstream>

#include "psahara/utility.hpp"

namespace psahara {

RawPiece RawPiece::from_sahara(const SaharaPiece& p) {
    RawPiece r;
    r.kind = Kind::sahara;
    r.sahara = p;
    return r;
}

RawPiece RawPiece::linear_piece(double slope, double intercept) {
    RawPiece r;
    r.kind = Kind::linear;
    r.slope = slope;
    r.intercept = intercept;
    return r;
}

RawPiece RawPiece::power(double coef, double anchor, double exponent, double shift) {
    RawPiece r;
    r.kind = Kind::power;
    r.coef = coef;
    r.anchor = anchor;
    r.exponent = exponent;
    r.shift = shift;
    return r;
}

double RawPiece::value(double x) const {
    switch (kind) {
        case Kind::sahara: return sahara_value(x, sahara);
        case Kind::linear: return slope * x + intercept;
        case Kind::power: return coef * std::pow(std::abs(x - anchor), exponent) + shift;
    }
    return 0.0;
}

double RawPiece::deriv(double x) const {
    switch (kind) {
        case Kind::sahara: return sahara_marginal(x, sahara);
        case Kind::linear: return slope;
        case Kind::power: {
            double z = x - anchor;
            double sgn = z >= 0.0 ? 1.0 : -1.0;
            return sgn * coef * exponent * std::pow(std::abs(z), exponent - 1.0);
        }
    }
    return 0.0;
}

RawUtility RawUtility::from(const PiecewiseUtility& U) {
    RawUtility r;
    r.breakpoints = U.breakpoints();
    for (const auto& p : U.pieces()) r.pieces.push_back(RawPiece::from_sahara(p));
    return r;
}

void RawUtility::check() const {
    if (pieces.size() != breakpoints.size() + 1) throw ValidationError("need exactly one more piece than breakpoints");
    for (std::size_t k = 0; k < breakpoints.size(); ++k) {
        if (!std::isfinite(breakpoints[k])) throw ValidationError("breakpoints must be finite");
        if (k > 0 && !(breakpoints[k] > breakpoints[k - 1])) throw ValidationError("breakpoints must be strictly increasing");
    }
    for (std::size_t k = 0; k < pieces.size(); ++k) {
        const auto& p = pieces[k];
        double lo = k == 0 ? -kInf : breakpoints[k - 1];
        double hi = k == breakpoints.size() ? kInf : breakpoints[k];
        if (p.kind == RawPiece::Kind::sahara) {
            check_piece(p.sahara);
            if (p.sahara.hara_limit && k > 0 && !(lo > p.sahara.d))
                throw ValidationError("HARA-limit piece extends below its threshold d");
        } else if (p.kind == RawPiece::Kind::power) {
            if (!(p.anchor >= hi || p.anchor <= lo))
                throw ValidationError("power piece anchor must lie outside its cell");
            if (!std::isfinite(p.coef) || !std::isfinite(p.exponent) || !std::isfinite(p.shift))
                throw ValidationError("power piece parameters must be finite");
        } else if (!std::isfinite(p.slope) || !std::isfinite(p.intercept)) {
            throw ValidationError("linear piece parameters must be finite");
        }
    }
}

std::size_t RawUtility::locate(double x) const {
    return static_cast<std::size_t>(std::upper_bound(breakpoints.begin(), breakpoints.end(), x) - breakpoints.begin());
}

double RawUtility::operator()(double x) const { return pieces[locate(x)].value(x); }

double RawUtility::left_limit(std::size_t k) const { return pieces.at(k - 1).value(breakpoints.at(k - 1)); }

double RawUtility::domain_lo() const {
    const auto& p = pieces.front();
    return p.kind == RawPiece::Kind::sahara && p.sahara.hara_limit ? p.sahara.d : -kInf;
}

ValidationReport validate(const RawUtility& U, const GridSpec& grid) {
    ValidationReport rep;
    try {
        U.check();
    } catch (const std::exception& e) {
        rep.problems.push_back(e.what());
        return rep;
    }
    for (std::size_t k = 1; k <= U.breakpoints.size(); ++k) {
        double a = U.breakpoints[k - 1];
        BreakpointCheck c{};
        c.at = a;
        c.left_value = U.left_limit(k);
        c.right_value = U.pieces[k].value(a);
        c.residual = std::abs(c.right_value - c.left_value);
        if (std::isnan(c.residual)) c.residual = kInf;
        c.left_slope = U.pieces[k - 1].deriv(a);
        c.right_slope = U.pieces[k].deriv(a);
        c.continuous = c.residual <= 1e-10 * std::max(1.0, std::abs(c.right_value));
        if (!c.continuous) {
            std::ostringstream os;
            os.precision(10);
            os << "discontinuity at " << a << ": left limit " << c.left_value << ", value " << c.right_value;
            rep.problems.push_back(os.str());
        }
        rep.breakpoints.push_back(c);
    }

    double lo = grid.lo, hi = grid.hi;
    if (!(lo < hi)) {
        lo = U.breakpoints.empty() ? -10.0 : U.breakpoints.front() - 10.0;
        hi = U.breakpoints.empty() ? 10.0 : U.breakpoints.back() + 10.0;
    }
    double dlo = U.domain_lo();
    if (std::isfinite(dlo) && lo <= dlo) lo = dlo + 1e-9 * std::max(1.0, std::abs(dlo));
    std::size_t npts = std::max<std::size_t>(grid.points, 2);
    double prev_x = lo, prev_v = U(lo);
    bool in_run = false;
    for (std::size_t i = 1; i < npts; ++i) {
        double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(npts - 1);
        double v = U(x);
        bool bad = !(v > prev_v);
        if (bad) {
            if (in_run) rep.decreasing.back().hi = x;
            else rep.decreasing.push_back({prev_x, x});
        }
        in_run = bad;
        prev_x = x;
        prev_v = v;
    }
    for (const auto& iv : rep.decreasing) {
        std::ostringstream os;
        os.precision(10);
        os << "not increasing on [" << iv.lo << ", " << iv.hi << "]";
        rep.problems.push_back(os.str());
    }
    return rep;
}

ValidationReport validate(const PiecewiseUtility& U, const GridSpec& grid) {
    ValidationReport rep = validate(RawUtility::from(U), grid);
    for (std::size_t k = 1; k <= U.n(); ++k) {
        double a = U.breakpoint(k);
        bool ok = close_rel(U.left_slope(k), sahara_marginal(a, U.piece(k - 1)), 1e-12) &&
                  close_rel(U.right_slope(k), sahara_marginal(a, U.piece(k)), 1e-12);
        if (!ok) {
            rep.slope_chain_consistent = false;
            rep.problems.push_back("stored one-sided slopes disagree with the pieces at a_" + std::to_string(k));
        }
    }
    return rep;
}

}  // namespace psahara
