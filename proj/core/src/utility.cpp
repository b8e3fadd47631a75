#include "psahara/utility.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace psahara {

namespace {

bool log_branch(double alpha) { return std::abs(alpha - 1.0) < 1e-9; }

void check_domain(double x, const SaharaPiece& p) {
    if (p.hara_limit && !(x > p.d)) {
        std::ostringstream os;
        os << "x = " << x << " outside HARA-limit domain (d, inf) with d = " << p.d;
        throw DomainError(os.str());
    }
}

// y + sqrt(beta^2 + y^2) without cancellation for y << 0
double shifted_root(double y, double beta, double s) {
    return y >= 0.0 ? y + s : beta * beta / (s - y);
}

}  // namespace

void check_piece(const SaharaPiece& p) {
    if (!std::isfinite(p.alpha) || p.alpha < 0.0) throw ValidationError("piece alpha must be finite and >= 0");
    if (!std::isfinite(p.gamma) || !(p.gamma > 0.0)) throw ValidationError("piece gamma must be finite and > 0");
    if (!std::isfinite(p.d) || !std::isfinite(p.u)) throw ValidationError("piece d and u must be finite");
    if (p.hara_limit) {
        if (p.beta != 0.0) throw ValidationError("hara_limit piece requires beta = 0");
    } else if (!std::isfinite(p.beta) || !(p.beta > 0.0)) {
        throw ValidationError("piece beta must be > 0 unless flagged hara_limit");
    }
}

double sahara_value(double x, const SaharaPiece& p) {
    check_domain(x, p);
    if (p.linear()) return p.gamma * (x - p.d) + p.u;
    double y = x - p.d;
    double s = std::hypot(p.beta, y);
    double t = shifted_root(y, p.beta, s);
    double base;
    if (log_branch(p.alpha)) {
        base = 0.5 * std::log(t) + 0.5 * y / t;
    } else {
        base = -std::exp(-p.alpha * std::log(t)) * (y + p.alpha * s) / (p.alpha * p.alpha - 1.0);
    }
    return p.gamma * base + p.u;
}

double sahara_log_marginal(double x, const SaharaPiece& p) {
    check_domain(x, p);
    if (p.linear()) return std::log(p.gamma);
    double y = x - p.d;
    double s = std::hypot(p.beta, y);
    return std::log(p.gamma) - p.alpha * std::log(shifted_root(y, p.beta, s));
}

double sahara_marginal(double x, const SaharaPiece& p) {
    if (p.linear()) {
        check_domain(x, p);
        return p.gamma;
    }
    return std::exp(sahara_log_marginal(x, p));
}

double sahara_ara(double x, const SaharaPiece& p) {
    check_domain(x, p);
    return p.alpha / std::hypot(p.beta, x - p.d);
}

double sahara_inverse_marginal(double y, const SaharaPiece& p) {
    if (!(y > 0.0)) throw DomainError("inverse marginal needs y > 0");
    if (p.linear()) throw DomainError("linear piece (alpha = 0) has no single-valued inverse marginal");
    double t = std::exp((std::log(p.gamma) - std::log(y)) / p.alpha);
    return p.d + 0.5 * (t - p.beta * p.beta / t);
}

PiecewiseUtility::PiecewiseUtility(std::vector<double> breakpoints, std::vector<SaharaPiece> pieces)
    : breakpoints_(std::move(breakpoints)), pieces_(std::move(pieces)) {
    const std::size_t n = breakpoints_.size();
    if (pieces_.size() != n + 1) throw ValidationError("need exactly one more piece than breakpoints");
    for (std::size_t k = 0; k < n; ++k) {
        if (!std::isfinite(breakpoints_[k])) throw ValidationError("breakpoints must be finite");
        if (k > 0 && !(breakpoints_[k] > breakpoints_[k - 1]))
            throw ValidationError("breakpoints must be strictly increasing");
    }
    for (std::size_t k = 0; k <= n; ++k) {
        check_piece(pieces_[k]);
        if (pieces_[k].hara_limit) {
            double lo = k == 0 ? pieces_[k].d : breakpoints_[k - 1];
            if (k > 0 && !(lo > pieces_[k].d)) throw ValidationError("HARA-limit piece extends below its threshold d");
            if (k == 0 && n > 0 && !(breakpoints_[0] > lo)) throw ValidationError("HARA-limit first piece has empty domain");
        }
    }
    left_slopes_.assign(n + 2, std::nan(""));
    right_slopes_.assign(n + 1, kInf);
    left_slopes_[n + 1] = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        double a = breakpoints_[k - 1];
        double left = sahara_value(a, pieces_[k - 1]);
        double right = sahara_value(a, pieces_[k]);
        if (std::abs(left - right) > 1e-10 * std::max(1.0, std::abs(right))) {
            std::ostringstream os;
            os.precision(17);
            os << "value discontinuity at a_" << k << " = " << a << ": " << left << " vs " << right;
            throw ValidationError(os.str());
        }
        left_slopes_[k] = sahara_marginal(a, pieces_[k - 1]);
        right_slopes_[k] = sahara_marginal(a, pieces_[k]);
    }
}

std::size_t PiecewiseUtility::locate(double x) const {
    return static_cast<std::size_t>(std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x) - breakpoints_.begin());
}

double PiecewiseUtility::operator()(double x) const { return sahara_value(x, pieces_[locate(x)]); }

double PiecewiseUtility::marginal(double x) const { return sahara_marginal(x, pieces_[locate(x)]); }

double psahara_eval(const PiecewiseUtility& U, double x) { return U(x); }

LinearContract::LinearContract(std::vector<ContractSegment> segments) : segments_(std::move(segments)) {
    if (segments_.empty()) throw ValidationError("contract needs at least one segment");
    segments_.front().from = -kInf;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const auto& s = segments_[i];
        if (!(s.slope > 0.0) || !std::isfinite(s.slope) || !std::isfinite(s.intercept))
            throw ValidationError("contract must be increasing: every segment slope > 0");
        if (i == 0) continue;
        if (!std::isfinite(s.from) || !(s.from > segments_[i - 1].from))
            throw ValidationError("contract segment starts must be finite and increasing");
        const auto& prev = segments_[i - 1];
        double l = prev.slope * s.from + prev.intercept, r = s.slope * s.from + s.intercept;
        if (std::abs(l - r) > 1e-10 * std::max(1.0, std::abs(r))) throw ValidationError("contract must be continuous");
    }
}

LinearContract LinearContract::identity() { return LinearContract({{-kInf, 1.0, 0.0}}); }

LinearContract LinearContract::affine(double A, double B) { return LinearContract({{-kInf, A, B}}); }

LinearContract LinearContract::incentive(double w, double v, double B_T) {
    return LinearContract({{-kInf, v, 0.0}, {B_T, w + v, -w * B_T}});
}

double LinearContract::operator()(double x) const {
    auto it = std::upper_bound(segments_.begin(), segments_.end(), x,
                               [](double v, const ContractSegment& s) { return v < s.from; });
    const auto& s = *(it - 1);
    return s.slope * x + s.intercept;
}

double LinearContract::inverse(double value) const {
    std::size_t i = segments_.size() - 1;
    while (i > 0) {
        const auto& s = segments_[i];
        if (value >= s.slope * s.from + s.intercept) break;
        --i;
    }
    return (value - segments_[i].intercept) / segments_[i].slope;
}

PiecewiseUtility compose_with_contract(const PiecewiseUtility& U, const LinearContract& h) {
    std::vector<double> pts;
    for (std::size_t i = 1; i < h.segments().size(); ++i) pts.push_back(h.segments()[i].from);
    for (double a : U.breakpoints()) pts.push_back(h.inverse(a));
    std::sort(pts.begin(), pts.end());
    std::vector<double> cuts;
    for (double x : pts) {
        if (!cuts.empty() && std::abs(x - cuts.back()) <= 1e-12 * std::max(1.0, std::abs(x))) continue;
        cuts.push_back(x);
    }
    // the composed domain starts where h reaches the HARA threshold
    double lo = U.domain_lo();
    if (std::isfinite(lo)) {
        double xlo = h.inverse(lo);
        cuts.erase(cuts.begin(), std::upper_bound(cuts.begin(), cuts.end(), xlo + 1e-12 * std::max(1.0, std::abs(xlo))));
    }

    std::vector<SaharaPiece> pieces;
    for (std::size_t c = 0; c <= cuts.size(); ++c) {
        double mid;
        if (cuts.empty()) mid = 0.0;
        else if (c == 0) mid = cuts.front() - 1.0;
        else if (c == cuts.size()) mid = cuts.back() + 1.0;
        else mid = 0.5 * (cuts[c - 1] + cuts[c]);
        if (c == 0 && std::isfinite(lo)) {
            double xlo = h.inverse(lo);
            double right = cuts.empty() ? xlo + 2.0 : cuts.front();
            mid = 0.5 * (xlo + right);
        }
        auto seg = std::upper_bound(h.segments().begin(), h.segments().end(), mid,
                                    [](double v, const ContractSegment& s) { return v < s.from; }) - 1;
        double A = seg->slope, B = seg->intercept;
        const SaharaPiece& p = U.piece(U.locate(A * mid + B));
        SaharaPiece q = p;
        q.beta = p.beta / A;
        q.d = (p.d - B) / A;
        q.gamma = p.gamma * std::pow(A, 1.0 - p.alpha);
        if (!p.linear() && log_branch(p.alpha)) q.u = p.u + 0.5 * p.gamma * std::log(A);
        pieces.push_back(q);
    }
    return PiecewiseUtility(cuts, pieces);
}

}  // namespace psahara
