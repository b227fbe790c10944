#include "pageflat/mesh.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "pageflat/polyfit.hpp"

using namespace pageflat;

namespace {

PolyCurve const_curve(double value, Axis ax, double lo, double hi) {
    return PolyCurve({value}, ax, lo, hi);
}

GridLattice uniform_lattice(int M, int N) {
    GridLattice l;
    l.spec = GridSpec(M, N);
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < M; ++i) l.points.push_back({static_cast<double>(i), static_cast<double>(j)});
    return l;
}

}  // namespace

// --- scale factor (worked examples) -----------------------------------------

TEST(ScaleFactor, SunkenWorkedExample) {
    // kappa_i = -kappa_f with kappa_f = 0.5 > 0: k = 0.5, gamma = 1/kappa_f.
    EXPECT_DOUBLE_EQ(scale_factor(-0.5, 0.5, 1e-6), 2.0);
}

TEST(ScaleFactor, EqualCurvaturesAreNeutral) {
    EXPECT_DOUBLE_EQ(scale_factor(0.7, 0.7, 1e-6), 1.0);
    EXPECT_DOUBLE_EQ(scale_factor(-2.0, -2.0, 1e-6), 1.0);
    EXPECT_DOUBLE_EQ(scale_factor(0.0, 0.0, 1e-6), 1.0);
}

TEST(ScaleFactor, NegativeKTakesAbsoluteValue) {
    // kappa_i = 0.25, kappa_f = -0.25: k = -0.25 < 0, gamma = |k|.
    EXPECT_DOUBLE_EQ(scale_factor(0.25, -0.25, 1e-6), 0.25);
}

TEST(ScaleFactor, ReciprocalSymmetry) {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> d(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double ki = d(rng), kf = d(rng);
        if (std::abs(kf - ki) < 2e-6) continue;
        const double g1 = scale_factor(ki, kf, 1e-6);
        const double g2 = scale_factor(kf, ki, 1e-6);  // negated k
        EXPECT_NEAR(g1 * g2, 1.0, 1e-12);
        EXPECT_GT(g1, 0.0);
    }
}

// --- series -----------------------------------------------------------------

TEST(BuildSeries, StraightLinesAreUniform) {
    const PolyCurve top({5.0, 0.0, 0.0}, Axis::x, 0.0, 100.0);
    const PolyCurve bottom({80.0, 0.0, 0.0}, Axis::x, 0.0, 100.0);
    const ScaleSeries s = build_series(top, bottom, 9);
    for (double g : s.gammas) EXPECT_DOUBLE_EQ(g, 1.0);
    for (int i = 1; i < 9; ++i) EXPECT_NEAR(s.Gammas[i], 1.0 / 8.0, 1e-12);
    EXPECT_EQ(s.clamped, 0);
}

TEST(BuildSeries, GammaSumsToOne) {
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> d(-0.5, 0.5);
    for (int trial = 0; trial < 10; ++trial) {
        const PolyCurve top({d(rng), d(rng), d(rng)}, Axis::x, -1.0, 1.0);
        const PolyCurve bottom({d(rng), d(rng), d(rng)}, Axis::x, -1.0, 1.0);
        const ScaleSeries s = build_series(top, bottom, 17);
        double sum = 0.0;
        for (int i = 1; i < 17; ++i) sum += s.Gammas[i];
        EXPECT_NEAR(sum, 1.0, 1e-9);
        for (double g : s.gammas) EXPECT_GT(g, 0.0);
    }
}

// Direction checks against the protruding/sunken grid-density behavior.
// With the image-top boundary convex (x^2) and the image-bottom concave
// (-x^2) the page protrudes toward the camera: intervals widen where |kappa|
// is largest. The mirrored pair is the sunken case and densifies there.
TEST(BuildSeries, ProtrudingPairSparserAtHighCurvature) {
    const PolyCurve top({0.0, 0.0, 1.0}, Axis::x, -1.0, 1.0);      // x^2
    const PolyCurve bottom({0.0, 0.0, -1.0}, Axis::x, -1.0, 1.0);  // -x^2
    const ScaleSeries s = build_series(top, bottom, 11);
    // |kappa| peaks at the domain center (x = 0, index 5).
    const double mid = s.Gammas[5];
    const double edge = s.Gammas[1];
    EXPECT_GT(mid, edge);
}

TEST(BuildSeries, SunkenPairDenserAtHighCurvature) {
    const PolyCurve top({0.0, 0.0, -1.0}, Axis::x, -1.0, 1.0);    // -x^2
    const PolyCurve bottom({0.0, 0.0, 1.0}, Axis::x, -1.0, 1.0);  // x^2
    const ScaleSeries s = build_series(top, bottom, 11);
    const double mid = s.Gammas[5];
    const double edge = s.Gammas[1];
    EXPECT_LT(mid, edge);
}

// Pointwise curvature sampling handles inflected boundaries without any
// explicit segmentation: for the antisymmetric x^3 pair the two concavity
// halves receive reciprocal treatment, mirrored about the inflection.
TEST(BuildSeries, InflectedBoundariesSplitAtTheSignChange) {
    const PolyCurve top({0.0, 0.0, 0.0, 1.0}, Axis::x, -1.0, 1.0);     // x^3
    const PolyCurve bottom({0.0, 0.0, 0.0, -1.0}, Axis::x, -1.0, 1.0);  // -x^3
    SeriesOptions opt;
    opt.epsilon = 1e-9;
    opt.clamp_lo = 1e-6;
    opt.clamp_hi = 1e6;
    const int n = 12;  // even: samples avoid the k = 0 inflection itself
    const ScaleSeries s = build_series(top, bottom, n, opt);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(s.gammas[i] * s.gammas[n - 1 - i], 1.0, 1e-9) << i;
}

TEST(BuildSeries, ClampEngagesAndCounts) {
    // Steep toy curvature drives gamma past the clamp.
    const PolyCurve top({0.0, 0.0, 40.0}, Axis::x, -1.0, 1.0);
    const PolyCurve bottom({0.0, 0.0, -40.0}, Axis::x, -1.0, 1.0);
    SeriesOptions opt;
    opt.clamp_lo = 0.5;
    opt.clamp_hi = 2.0;
    const ScaleSeries s = build_series(top, bottom, 11, opt);
    EXPECT_GT(s.clamped, 0);
    for (double g : s.gammas) {
        EXPECT_GE(g, 0.5);
        EXPECT_LE(g, 2.0);
    }
}

// --- interval points -----------------------------------------------------------

TEST(IntervalPoints, UniformSeries) {
    ScaleSeries s;
    s.gammas.assign(5, 1.0);
    s.Gammas = {0.0, 0.25, 0.25, 0.25, 0.25};
    const auto xs = interval_points(s, 0.0, 100.0);
    const std::vector<double> expected{0, 25, 50, 75, 100};
    ASSERT_EQ(xs.size(), expected.size());
    for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_NEAR(xs[i], expected[i], 1e-12);
}

TEST(IntervalPoints, CumulativeSumOracle) {
    ScaleSeries s;
    s.gammas.assign(4, 1.0);
    s.Gammas = {0.0, 0.5, 0.25, 0.25};
    const auto xs = interval_points(s, 0.0, 8.0);
    const std::vector<double> expected{0, 4, 6, 8};
    ASSERT_EQ(xs.size(), expected.size());
    for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_NEAR(xs[i], expected[i], 1e-12);
}

TEST(IntervalPoints, AlwaysHitsBothEndpointsStrictlyIncreasing) {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> d(0.05, 3.0);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 3 + trial % 9;
        ScaleSeries s;
        s.gammas.resize(n);
        s.Gammas.assign(n, 0.0);
        double sum = 0.0;
        for (int i = 1; i < n; ++i) {
            s.gammas[i] = d(rng);
            sum += s.gammas[i];
        }
        s.gammas[0] = 1.0;
        for (int i = 1; i < n; ++i) s.Gammas[i] = s.gammas[i] / sum;
        const auto xs = interval_points(s, -3.0, 47.0);
        EXPECT_DOUBLE_EQ(xs.front(), -3.0);
        EXPECT_NEAR(xs.back(), 47.0, 1e-6);
        for (std::size_t i = 1; i < xs.size(); ++i) EXPECT_GT(xs[i], xs[i - 1]);
    }
}

// --- lattice ----------------------------------------------------------------------

TEST(BuildLattice, StraightFamiliesGiveCartesianProduct) {
    const CurveFamily vertical = evolve_family(const_curve(2.0, Axis::y, 0.0, 10.0),
                                               const_curve(8.0, Axis::y, 0.0, 10.0), 6);
    const CurveFamily horizontal = evolve_family(const_curve(1.0, Axis::x, 2.0, 8.0),
                                                 const_curve(7.0, Axis::x, 2.0, 8.0), 6);
    const std::vector<double> xs{2.0, 4.0, 6.5, 8.0};
    const std::vector<double> ys{1.0, 3.5, 7.0};
    const GridLattice l = build_lattice(vertical, xs, horizontal, ys);
    ASSERT_EQ(l.points.size(), 12u);
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 4; ++i) {
            EXPECT_NEAR(l.at(j, i).x, xs[i], 1e-9);
            EXPECT_NEAR(l.at(j, i).y, ys[j], 1e-9);
        }
}

TEST(BuildLattice, CylinderSceneMatchesAnalyticNodes) {
    // Tilt-0 cylinder: magnification m(u) = D/(D-h(u)) with a parabolic
    // bump. True node (i,j) = (sx(u_i), cy + (v_j - cy) m(u_i)).
    const double W = 800.0, H = 1000.0, A = 100.0, D = 2500.0;
    const double cx = (W - 1) / 2, cy = (H - 1) / 2;
    auto h = [&](double u) { return 4.0 * A * (u / (W - 1)) * (1.0 - u / (W - 1)); };
    auto m = [&](double u) { return D / (D - h(u)); };
    auto sx = [&](double u) { return cx + (u - cx) * m(u); };

    // Boundary curves in photo space, sampled and fitted as the pipeline
    // would fit traced chains.
    std::vector<Vec2> top_pts, bottom_pts;
    for (int s = 0; s <= 400; ++s) {
        const double u = (W - 1) * s / 400.0;
        top_pts.push_back({sx(u), cy + (0.0 - cy) * m(u)});
        bottom_pts.push_back({sx(u), cy + (H - 1 - cy) * m(u)});
    }
    FitResult top = fit(top_pts, 4, Axis::x);
    FitResult bottom = fit(bottom_pts, 4, Axis::x);
    ASSERT_LT(top.rms, 0.05);
    ASSERT_LT(bottom.rms, 0.05);
    const double x_lo = std::min(top.curve.domain_lo, bottom.curve.domain_lo);
    const double x_hi = std::max(top.curve.domain_hi, bottom.curve.domain_hi);
    top.curve.domain_lo = bottom.curve.domain_lo = x_lo;
    top.curve.domain_hi = bottom.curve.domain_hi = x_hi;

    // Side edges are straight verticals (h = 0 there).
    const CurveFamily vertical =
        evolve_family(const_curve(0.0, Axis::y, top.curve.eval(0.0), bottom.curve.eval(0.0)),
                      const_curve(W - 1, Axis::y, top.curve.eval(0.0), bottom.curve.eval(0.0)), 64);
    const CurveFamily horizontal = evolve_family(top.curve, bottom.curve, 64);

    const int M = 10, N = 8;
    std::vector<double> xs, ys;
    for (int i = 0; i < M; ++i) xs.push_back(sx((W - 1) * i / (M - 1.0)));
    const double y0 = cy + (0.0 - cy) * 1.0, y1 = cy + (H - 1 - cy) * 1.0;  // edges: m = 1
    for (int j = 0; j < N; ++j) ys.push_back(y0 + (y1 - y0) * j / (N - 1.0));

    const GridLattice l = build_lattice(vertical, xs, horizontal, ys);
    double worst = 0.0;
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < M; ++i) {
            const double u = (W - 1) * i / (M - 1.0);
            const double v = (H - 1) * j / (N - 1.0);
            const Vec2 truth{sx(u), cy + (v - cy) * m(u)};
            worst = std::max(worst, distance(l.at(j, i), truth));
        }
    EXPECT_LE(worst, 0.5);
}

TEST(BuildLattice, DoubleCrossingIsAFold) {
    // x = y against y = x^2 crosses twice over [-2, 2].
    const PolyCurve diag({0.0, 1.0}, Axis::y, -2.0, 4.0);
    const PolyCurve parab({0.0, 0.0, 1.0}, Axis::x, -2.0, 2.0);
    const CurveFamily vertical = evolve_family(diag, diag, 4);
    const CurveFamily horizontal = evolve_family(parab, parab, 4);
    const std::vector<double> xs{-2.0, 2.0};
    const std::vector<double> ys{0.0, 4.0};
    try {
        (void)build_lattice(vertical, xs, horizontal, ys);
        FAIL() << "expected mesh fold";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("mesh fold"), std::string::npos);
    }
}

// --- blocks ------------------------------------------------------------------------

TEST(ExtractBlocks, SmallestGrid) {
    const auto blocks = extract_blocks(uniform_lattice(2, 2));
    ASSERT_EQ(blocks.size(), 1u);
    EXPECT_EQ(blocks[0].k, 0u);
    EXPECT_EQ(blocks[0].corners[0], (Vec2{0, 0}));
    EXPECT_EQ(blocks[0].corners[1], (Vec2{1, 0}));
    EXPECT_EQ(blocks[0].corners[2], (Vec2{0, 1}));
    EXPECT_EQ(blocks[0].corners[3], (Vec2{1, 1}));
}

TEST(ExtractBlocks, FourByThreeIndexSet) {
    const auto blocks = extract_blocks(uniform_lattice(4, 3));
    std::set<std::size_t> ks;
    for (const auto& b : blocks) ks.insert(b.k);
    EXPECT_EQ(ks, (std::set<std::size_t>{0, 1, 2, 4, 5, 6}));
}

TEST(ExtractBlocks, RightEdgeColumnExcluded) {
    for (const auto& b : extract_blocks(uniform_lattice(5, 4))) EXPECT_NE(b.k % 5, 4u);
}

TEST(ExtractBlocks, CountMatchesBruteForcePredicate) {
    for (int M = 2; M <= 12; ++M)
        for (int N = 2; N <= 12; ++N) {
            // Brute-force enumeration of the admissibility predicate.
            std::size_t count = 0;
            for (std::size_t k = 0; k < static_cast<std::size_t>(M) * N; ++k)
                if (k % M != static_cast<std::size_t>(M - 1) && k < static_cast<std::size_t>(M) * (N - 1))
                    ++count;
            EXPECT_EQ(count, static_cast<std::size_t>(M - 1) * (N - 1));
            EXPECT_EQ(extract_blocks(uniform_lattice(M, N)).size(), count);
        }
}

TEST(ExtractBlocks, UnionCoversAllButTopRowAndRightColumnOrigins) {
    const int M = 7, N = 5;
    std::set<std::size_t> origins;
    for (const auto& b : extract_blocks(uniform_lattice(M, N))) origins.insert(b.k);
    for (std::size_t k = 0; k < static_cast<std::size_t>(M) * N; ++k) {
        const bool expected = (k % M != M - 1) && (k < static_cast<std::size_t>(M) * (N - 1));
        EXPECT_EQ(origins.count(k) == 1, expected) << "k=" << k;
    }
}
