#include "psahara/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace psahara {

namespace {

using Kind = RawPiece::Kind;

double len_tol(double x) { return std::isfinite(x) ? 1e-12 * std::max(1.0, std::abs(x)) : 0.0; }

struct Arc {
    const RawPiece* p = nullptr;
    std::size_t index = 0;
    double lo = -kInf, hi = kInf;

    double value(double x) const { return p->value(x); }
    double deriv(double x) const { return p->deriv(x); }

    // argmax over [lo, hi] of value(x) - m x; may return +-inf for unbounded cells
    double argmax(double m) const {
        switch (p->kind) {
            case Kind::sahara: {
                if (p->sahara.linear()) return p->sahara.gamma > m ? hi : lo;
                if (!(m > 0.0)) return hi;
                return std::clamp(sahara_inverse_marginal(m, p->sahara), lo, hi);
            }
            case Kind::linear: return p->slope > m ? hi : lo;
            case Kind::power: {
                if (std::isfinite(lo) && !(deriv(lo) > m)) return lo;
                if (std::isfinite(hi) && !(deriv(hi) < m)) return hi;
                double cp = p->coef * p->exponent;
                double inv = 1.0 / (p->exponent - 1.0);
                double x = p->anchor >= hi ? p->anchor - std::pow(-m / cp, inv) : p->anchor + std::pow(m / cp, inv);
                if (!std::isfinite(x)) return std::isfinite(lo) ? lo : hi;
                return std::clamp(x, lo, hi);
            }
        }
        return lo;
    }

    double conj(double m) const {
        double x = argmax(m);
        if (!std::isfinite(x)) return kInf;
        return value(x) - m * x;
    }
};

struct Elem {
    std::size_t arc;
    double lo, hi;
    double in_slope;   // left slope of the hull at lo
    double out_slope;  // slope of the bridge to the next element
};

struct Tangent {
    double m, xa, xb;
};

std::string pair_name(const Arc& a, const Arc& b) {
    std::ostringstream os;
    os << "pieces " << a.index << " and " << b.index;
    return os.str();
}

Tangent common_tangent(const Arc& A, const Arc& B) {
    if (A.hi == B.lo && std::isfinite(A.hi)) {
        double p = A.hi;
        double va = A.value(p), vb = B.value(p);
        double da = A.deriv(p), db = B.deriv(p);
        if (std::isfinite(va) && std::isfinite(vb) && std::isfinite(da) && std::isfinite(db) &&
            std::abs(va - vb) <= 1e-12 * std::max(1.0, std::abs(vb)) && da >= db - 1e-12 * std::max(1.0, std::abs(db)))
            return {std::max(da, db), p, p};
    }
    auto h = [&](double m) {
        double cb = B.conj(m);
        if (cb == kInf) return -kInf;
        return A.conj(m) - cb;
    };
    double lo = 1.0, hi = 1.0;
    double hv = h(1.0);
    int guard = 0;
    if (hv < 0.0) {
        while (true) {
            hi = lo * 4.0;
            double v = h(hi);
            if (v >= 0.0) break;
            lo = hi;
            if (++guard > 600) throw SolverError("failed to bracket a tangency between " + pair_name(A, B));
        }
    } else if (hv > 0.0) {
        double m = 1.0;
        while (true) {
            m = m > 1e-300 ? m / 4.0 : (m > 0.0 ? -1.0 : m * 4.0);
            double v = h(m);
            if (v <= 0.0) {
                lo = m;
                break;
            }
            hi = m;
            if (++guard > 1400) throw SolverError("failed to bracket a tangency between " + pair_name(A, B));
        }
    }
    if (lo != hi) {
        for (int it = 0; it < 2000; ++it) {
            double mid = (lo > 0.0 && hi > 2.0 * lo) ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            double v = h(mid);
            if (v < 0.0) lo = mid;
            else if (v > 0.0) hi = mid;
            else {
                lo = hi = mid;
                break;
            }
        }
    }
    double m = 0.5 * (lo + hi);
    return {m, A.argmax(m), B.argmax(m)};
}

}  // namespace

EnvelopeResult concave_envelope(const RawUtility& U) {
    U.check();
    const std::size_t np = U.pieces.size();
    auto strictly_concave_sahara = [](const RawPiece& p) { return p.kind == Kind::sahara && p.sahara.alpha > 0.0; };
    if (!strictly_concave_sahara(U.pieces.front()) || !strictly_concave_sahara(U.pieces.back()))
        throw ValidationError("non-coercive input: first and last pieces must be SAHARA with alpha > 0");
    for (std::size_t k = 0; k < np; ++k) {
        const auto& p = U.pieces[k];
        if (p.kind == Kind::power && p.coef * p.exponent * (p.exponent - 1.0) > 0.0)
            throw ValidationError("piece " + std::to_string(k) + " is convex; envelope expects concave or linear pieces");
    }

    std::vector<Arc> arcs(np);
    for (std::size_t k = 0; k < np; ++k) {
        arcs[k].p = &U.pieces[k];
        arcs[k].index = k;
        arcs[k].lo = k == 0 ? U.domain_lo() : U.breakpoints[k - 1];
        arcs[k].hi = k + 1 == np ? kInf : U.breakpoints[k];
    }

    std::vector<Elem> st;
    st.push_back({0, arcs[0].lo, arcs[0].hi, kInf, 0.0});
    for (std::size_t b = 1; b < np; ++b) {
        Tangent tg{};
        while (true) {
            Elem& top = st.back();
            Arc A = arcs[top.arc];
            A.lo = top.lo;
            Arc B = arcs[b];
            tg = common_tangent(A, B);
            bool clamped_left = tg.xa <= top.lo + len_tol(top.lo);
            if (st.size() > 1 && clamped_left && tg.m > top.in_slope + 1e-12 * std::abs(tg.m)) {
                st.pop_back();
                st.back().hi = arcs[st.back().arc].hi;
                continue;
            }
            break;
        }
        Elem& top = st.back();
        double in_slope;
        if (tg.xb - tg.xa > len_tol(tg.xa)) {
            in_slope = tg.m;
        } else {
            tg.xb = tg.xa;
            in_slope = tg.xa > top.lo + len_tol(top.lo) ? arcs[top.arc].deriv(tg.xa) : top.in_slope;
        }
        top.hi = tg.xa;
        top.out_slope = tg.m;
        st.push_back({b, tg.xb, arcs[b].hi, in_slope, 0.0});
    }

    // tangency residual checks on every bridge of positive length
    for (std::size_t j = 0; j + 1 < st.size(); ++j) {
        double xa = st[j].hi, xb = st[j + 1].lo, m = st[j].out_slope;
        if (!(xb - xa > len_tol(xa))) continue;
        const Arc& A = arcs[st[j].arc];
        const Arc& B = arcs[st[j + 1].arc];
        double chord = (B.value(xb) - A.value(xa)) / (xb - xa);
        bool ok = std::abs(chord - m) <= 1e-9 * std::max(1.0, std::abs(m));
        if (xa > A.lo + len_tol(A.lo) && xa < A.hi - len_tol(A.hi))
            ok = ok && std::abs(A.deriv(xa) - m) <= 1e-9 * std::max(1.0, std::abs(m));
        if (xb > B.lo + len_tol(B.lo) && xb < B.hi - len_tol(B.hi))
            ok = ok && std::abs(B.deriv(xb) - m) <= 1e-9 * std::max(1.0, std::abs(m));
        if (!ok) throw SolverError("tangency residual above tolerance between " + pair_name(A, B));
        if (!(m > 0.0)) throw ValidationError("envelope is not increasing: bridge slope <= 0 between " + pair_name(A, B));
    }

    struct Seg {
        SaharaPiece piece;
        double lo;
    };
    std::vector<Seg> segs;
    auto push = [&](const SaharaPiece& p, double lo) {
        if (!segs.empty() && segs.back().piece.linear() && p.linear() &&
            std::abs(segs.back().piece.gamma - p.gamma) <= 1e-12 * std::max(1.0, p.gamma))
            return;
        segs.push_back({p, lo});
    };
    for (std::size_t j = 0; j < st.size(); ++j) {
        const Elem& e = st[j];
        const Arc& A = arcs[e.arc];
        if (j == 0 || e.hi - e.lo > len_tol(e.lo)) {
            SaharaPiece p;
            switch (A.p->kind) {
                case Kind::sahara: p = A.p->sahara; break;
                case Kind::linear:
                    if (!(A.p->slope > 0.0))
                        throw ValidationError("envelope keeps a non-increasing linear piece " + std::to_string(e.arc));
                    p = {0.0, 1.0, e.lo, A.p->slope, A.value(e.lo), false};
                    break;
                case Kind::power:
                    throw ValidationError("envelope keeps a non-SAHARA power arc from piece " + std::to_string(e.arc));
            }
            push(p, e.lo);
        }
        if (j + 1 < st.size() && st[j + 1].lo - e.hi > len_tol(e.hi)) {
            push({0.0, 1.0, e.hi, e.out_slope, A.value(e.hi), false}, e.hi);
        }
    }
    std::vector<double> bps;
    std::vector<SaharaPiece> pieces;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        if (i > 0) bps.push_back(segs[i].lo);
        pieces.push_back(segs[i].piece);
    }
    EnvelopeResult res{PiecewiseUtility(bps, pieces), {}, {}};

    for (std::size_t j = 0; j + 1 < st.size(); ++j) {
        double xa = st[j].hi, xb = st[j + 1].lo, m = st[j].out_slope;
        if (!(xb - xa > len_tol(xa))) continue;
        double mid = 0.5 * (xa + xb);
        double line = arcs[st[j].arc].value(xa) + m * (mid - xa);
        double orig = U(mid);
        if (!(std::abs(orig - line) <= 1e-9 * std::max(1.0, std::abs(line)))) res.bridges.push_back({xa, xb, m});
    }
    const auto& E = res.envelope;
    for (std::size_t k = 1; k <= E.n(); ++k)
        if (E.right_slope(k) < E.left_slope(k) * (1.0 - 1e-9)) res.kinks.push_back(E.breakpoint(k));
    return res;
}

EnvelopeResult concave_envelope(const PiecewiseUtility& U) { return concave_envelope(RawUtility::from(U)); }

ConcavityCheck is_concave(const PiecewiseUtility& U) {
    for (std::size_t k = 1; k <= U.n(); ++k) {
        if (U.right_slope(k) > U.left_slope(k) * (1.0 + 1e-12)) {
            std::ostringstream os;
            os.precision(10);
            os << "marginal increases across a_" << k << ": " << U.left_slope(k) << " -> " << U.right_slope(k);
            return {false, U.breakpoint(k), os.str()};
        }
    }
    return {};
}

ConcavityCheck is_concave(const RawUtility& U) {
    U.check();
    auto piece_ok = [&](std::size_t k) -> ConcavityCheck {
        const auto& p = U.pieces[k];
        if (p.kind == Kind::power && p.coef * p.exponent * (p.exponent - 1.0) > 0.0) {
            double at = k == 0 ? U.breakpoints.front() : U.breakpoints[k - 1];
            return {false, at, "piece " + std::to_string(k) + " is convex"};
        }
        return {};
    };
    for (std::size_t k = 0; k < U.pieces.size(); ++k) {
        if (auto c = piece_ok(k); !c.concave) return c;
        if (k + 1 == U.pieces.size()) break;
        double a = U.breakpoints[k];
        double l = U.pieces[k].value(a), r = U.pieces[k + 1].value(a);
        if (!(std::abs(l - r) <= 1e-10 * std::max(1.0, std::abs(r)))) {
            std::ostringstream os;
            os.precision(10);
            os << "jump at " << a << ": " << l << " -> " << r;
            return {false, a, os.str()};
        }
        double dl = U.pieces[k].deriv(a), dr = U.pieces[k + 1].deriv(a);
        if (dr > dl * (1.0 + 1e-12) + 1e-300) {
            std::ostringstream os;
            os.precision(10);
            os << "marginal increases at " << a << ": " << dl << " -> " << dr;
            return {false, a, os.str()};
        }
    }
    return {};
}

}  // namespace psahara
