#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "psahara/envelope.hpp"

using namespace psahara;

namespace {

bool inside_bridge(const EnvelopeResult& r, double x, double pad = 0.0) {
    for (const auto& b : r.bridges)
        if (x > b.left + pad && x < b.right - pad) return true;
    return false;
}

// random continuous PSAHARA utility with SAHARA end pieces and optional linear middles
PiecewiseUtility random_psahara(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> N(1, 4);
    std::uniform_real_distribution<double> A(0.3, 3.0), B(0.3, 2.0), D(-4.0, 4.0), G(0.2, 4.0), gap(0.5, 3.0), coin(0.0, 1.0);
    const int n = N(rng);
    std::vector<double> bps;
    double x = -4.0;
    for (int k = 0; k < n; ++k) bps.push_back(x += gap(rng));
    std::vector<SaharaPiece> pieces;
    for (int k = 0; k <= n; ++k) {
        const bool linear = k > 0 && k < n && coin(rng) < 0.3;
        SaharaPiece p = linear ? SaharaPiece{0.0, 1.0, bps[k - 1], G(rng), 0.0} : SaharaPiece{A(rng), B(rng), D(rng), G(rng), 0.0};
        if (k > 0) p.u = sahara_value(bps[k - 1], pieces.back()) - sahara_value(bps[k - 1], SaharaPiece{p.alpha, p.beta, p.d, p.gamma, 0.0});
        pieces.push_back(p);
    }
    return PiecewiseUtility(bps, pieces);
}

}  // namespace

TEST(Envelope, ConcavePieceIsUnchanged) {
    const SaharaPiece p{2.0, 1.0, 0.0, 1.0, 0.0};
    const auto r = concave_envelope(PiecewiseUtility(p));
    EXPECT_TRUE(r.bridges.empty());
    EXPECT_TRUE(r.kinks.empty());
    ASSERT_EQ(r.envelope.n(), 0u);
    EXPECT_EQ(r.envelope.piece(0), p);
}

TEST(Envelope, ExampleStructure) {
    const auto raw = fixtures::example_raw();
    const auto r = concave_envelope(raw);
    const auto& E = r.envelope;
    ASSERT_EQ(E.n(), 5u);
    const double alphas[] = {1.7, 0.0, 0.0, 2.2, 0.0, 1.2};
    for (std::size_t k = 0; k <= 5; ++k) EXPECT_DOUBLE_EQ(E.piece(k).alpha, alphas[k]) << k;
    EXPECT_DOUBLE_EQ(E.piece(0).d, 3.0);
    EXPECT_DOUBLE_EQ(E.piece(5).d, 6.0);
    ASSERT_EQ(r.kinks.size(), 2u);
    EXPECT_DOUBLE_EQ(r.kinks[0], E.breakpoint(2));
    EXPECT_DOUBLE_EQ(r.kinks[1], E.breakpoint(4));
    EXPECT_DOUBLE_EQ(r.kinks[0], -6.0);
    EXPECT_DOUBLE_EQ(r.kinks[1], -1.0);
    ASSERT_EQ(r.bridges.size(), 3u);
    EXPECT_NEAR(r.bridges[0].left, E.breakpoint(1), 1e-12);
    EXPECT_NEAR(r.bridges[2].right, E.breakpoint(5), 1e-12);
    // tangency values frozen from the grid-hull oracle below
    EXPECT_NEAR(r.bridges[0].left, -6.8818, 1e-3);
    EXPECT_NEAR(r.bridges[1].right, -3.2292, 1e-3);
    EXPECT_NEAR(r.bridges[2].right, 4.6823, 1e-3);
}

TEST(Envelope, IncentiveHasOneSmoothBridge) {
    const auto ip = fixtures::incentive_params();
    const auto r = concave_envelope(incentive_utility(ip));
    ASSERT_EQ(r.bridges.size(), 1u);
    EXPECT_TRUE(r.kinks.empty());
    EXPECT_LT(r.bridges[0].left, ip.B_T);
    EXPECT_GT(r.bridges[0].right, ip.B_T);
    EXPECT_NEAR(r.bridges[0].left, -18.5887, 1e-3);
    EXPECT_NEAR(r.bridges[0].right, 5.2094, 1e-3);
    EXPECT_NEAR(r.bridges[0].slope, 0.041394, 1e-6);
}

TEST(Envelope, DominatesAndMatchesOffBridge) {
    const auto raw = fixtures::example_raw();
    const auto r = concave_envelope(raw);
    for (int i = 0; i <= 20000; ++i) {
        const double x = -30.0 + 60.0 * i / 20000.0;
        const double e = psahara_eval(r.envelope, x), u = raw(x);
        ASSERT_GE(e, u - 1e-9 * std::max(1.0, std::abs(u))) << x;
        if (!inside_bridge(r, x) && x != -6.0 && x != -1.0)
            ASSERT_NEAR(e, u, 1e-9 * std::max(1.0, std::abs(u))) << x;
    }
}

TEST(Envelope, TangencyAgreesWithGridHull) {
    const auto check = [](const RawUtility& raw, double lo, double hi) {
        const auto r = concave_envelope(raw);
        const std::size_t pts = 1000000;
        const double cell = (hi - lo) / static_cast<double>(pts - 1);
        // breakpoints are sampled too, otherwise a jump lands between grid points and tilts the chord
        const auto hull = oracle::hull_bridges([&](double x) { return raw(x); }, lo, hi, pts, 3, raw.breakpoints);
        // contiguous bridges sharing a kink show up as separate hull edges
        ASSERT_EQ(hull.size(), r.bridges.size());
        for (std::size_t k = 0; k < hull.size(); ++k) {
            EXPECT_LE(std::abs(hull[k].left - r.bridges[k].left), 2 * cell) << k;
            EXPECT_LE(std::abs(hull[k].right - r.bridges[k].right), 2 * cell) << k;
        }
    };
    check(fixtures::example_raw(), -30.0, 30.0);
    check(RawUtility::from(incentive_utility(fixtures::incentive_params())), -30.0, 30.0);
}

TEST(Envelope, Idempotent) {
    const auto E = concave_envelope(fixtures::example_raw()).envelope;
    const auto r2 = concave_envelope(E);
    EXPECT_TRUE(r2.bridges.empty());
    ASSERT_EQ(r2.envelope.n(), E.n());
    for (int i = 0; i <= 2000; ++i) {
        const double x = -20.0 + 40.0 * i / 2000.0;
        ASSERT_NEAR(psahara_eval(r2.envelope, x), psahara_eval(E, x), 1e-9 * std::max(1.0, std::abs(psahara_eval(E, x))));
    }
}

TEST(Envelope, MinimalOnBridges) {
    const auto raw = fixtures::example_raw();
    const auto r = concave_envelope(raw);
    for (const auto& b : r.bridges) {
        const double mid = 0.5 * (b.left + b.right);
        const double el = psahara_eval(r.envelope, b.left), er = psahara_eval(r.envelope, b.right);
        // both ends touch the original, so the chord is the least concave majorant there
        EXPECT_NEAR(el, raw(b.left), 1e-9 * std::abs(el));
        EXPECT_NEAR(er, raw(b.right), 1e-9 * std::abs(er));
        const double lowered = psahara_eval(r.envelope, mid) - 1e-6;
        EXPECT_LT(lowered, 0.5 * (el + er));
    }
}

TEST(Envelope, BridgesAreWhereEnvelopeDiffers) {
    const auto raw = fixtures::example_raw();
    const auto r = concave_envelope(raw);
    for (int i = 0; i <= 60000; ++i) {
        const double x = -30.0 + i * 1e-3;
        const double e = psahara_eval(r.envelope, x), u = raw(x);
        const bool differs = e - u > 1e-9 * std::max(1.0, std::abs(u));
        if (differs) ASSERT_TRUE(inside_bridge(r, x)) << x;
        if (inside_bridge(r, x, 1e-2)) ASSERT_TRUE(differs) << x;
    }
}

TEST(Envelope, RandomSpecsGiveConcaveEnvelopes) {
    std::mt19937_64 rng(2024);
    for (int s = 0; s < 50; ++s) {
        const auto U = random_psahara(rng);
        const auto r = concave_envelope(U);
        const auto c = is_concave(r.envelope);
        ASSERT_TRUE(c.concave) << "spec " << s << ": " << c.reason;
        for (int i = 0; i <= 400; ++i) {
            const double x = -12.0 + 24.0 * i / 400.0;
            const double u = psahara_eval(U, x);
            ASSERT_GE(psahara_eval(r.envelope, x), u - 1e-9 * std::max(1.0, std::abs(u)));
        }
    }
}

TEST(Envelope, RejectsNonCoerciveInput) {
    RawUtility U;
    U.breakpoints = {0.0};
    U.pieces = {RawPiece::from_sahara({2.0, 1.0, 0.0, 1.0, 0.0}), RawPiece::linear_piece(0.5, -2.0 / 3.0)};
    EXPECT_THROW(concave_envelope(U), ValidationError);
}

TEST(IsConcave, Cases) {
    EXPECT_TRUE(is_concave(PiecewiseUtility(SaharaPiece{2.0, 1.0, 0.0, 1.0, 0.0})).concave);
    const auto c = is_concave(fixtures::example_raw());
    EXPECT_FALSE(c.concave);
    ASSERT_TRUE(c.where.has_value());
    EXPECT_DOUBLE_EQ(*c.where, -6.0);
    EXPECT_FALSE(is_concave(incentive_utility(fixtures::incentive_params())).concave);
}
