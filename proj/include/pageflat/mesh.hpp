#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "pageflat/geometry.hpp"
#include "pageflat/parallel.hpp"
#include "pageflat/polyfit.hpp"

namespace pageflat {

// Lattice sampling counts. M is the number of lattice columns (samples
// along the horizontal axis), N the number of rows (samples along the
// vertical axis); blocks index as k = row * M + col, so k mod M != M-1
// excludes the rightmost column and k < M*(N-1) the bottom row.
struct GridSpec {
    int M = 2;  // columns
    int N = 2;  // rows

    GridSpec() = default;
    GridSpec(int m, int n) : M(m), N(n) {
        if (m < 2 || n < 2) throw std::invalid_argument("grid needs at least 2 samples per axis");
    }
};

// ---------------------------------------------------------------------------
// Curvature-driven interval scaling
// ---------------------------------------------------------------------------

// Scaling factor of one sampling interval from the curvature of the two
// opposite boundaries: k = (kappa_f - kappa_i) / 2, gamma = |k|^(-k/|k|).
// Below epsilon the boundaries count as flat/symmetric and the interval is
// neutral (gamma = 1), which is also the formula's sensible limit.
[[nodiscard]] inline double scale_factor(double kappa_i, double kappa_f, double epsilon) noexcept {
    const double k = (kappa_f - kappa_i) / 2.0;
    if (std::abs(k) < epsilon) return 1.0;
    return k > 0.0 ? 1.0 / std::abs(k) : std::abs(k);
}

// Raw and normalized interval scale series along one axis. Gammas[0] is
// unused (the first sample is the start point and takes no interval);
// Gammas[1..] sum to 1.
struct ScaleSeries {
    std::vector<double> gammas;
    std::vector<double> Gammas;
    Axis axis = Axis::x;
    int clamped = 0;  // samples pinned to the clamp bounds
};

struct SeriesOptions {
    double epsilon = 1e-2;       // |k| below this counts as flat (1/px)
    double clamp_lo = 0.1;       // gamma clamp before normalization
    double clamp_hi = 10.0;
    CurvatureForm form = CurvatureForm::standard;
};

// Samples both boundary curves at `samples` uniform abscissae over their
// shared domain, converts the curvature pairs to scale factors, clamps,
// and normalizes. kappa_i comes from `first` (the boundary nearer the
// image top, or image left for vertical series), kappa_f from `second`.
[[nodiscard]] inline ScaleSeries build_series(const PolyCurve& first, const PolyCurve& second, int samples,
                                              const SeriesOptions& opt = {}) {
    if (samples < 2) throw std::invalid_argument("series needs at least 2 samples");
    if (first.axis != second.axis) throw std::invalid_argument("series boundaries disagree on axis");
    if (std::abs(first.domain_lo - second.domain_lo) > 1e-6 || std::abs(first.domain_hi - second.domain_hi) > 1e-6)
        throw std::invalid_argument("series boundaries disagree on domain");
    if (!(opt.clamp_lo > 0.0) || opt.clamp_hi < opt.clamp_lo)
        throw std::invalid_argument("bad gamma clamp");

    ScaleSeries s;
    s.axis = first.axis;
    s.gammas.resize(samples);
    s.Gammas.assign(samples, 0.0);

    for (int i = 0; i < samples; ++i) {
        const double x = first.domain_lo +
                         (first.domain_hi - first.domain_lo) * static_cast<double>(i) / (samples - 1);
        const double ki = curvature(first, x, opt.form);
        const double kf = curvature(second, x, opt.form);
        double g = scale_factor(ki, kf, opt.epsilon);
        if (!std::isfinite(g)) throw std::runtime_error("curvature form produced non-finite scale factor");
        if (g < opt.clamp_lo || g > opt.clamp_hi) {
            g = std::clamp(g, opt.clamp_lo, opt.clamp_hi);
            ++s.clamped;
        }
        s.gammas[i] = g;
    }

    double sum = 0.0;
    for (int i = 1; i < samples; ++i) sum += s.gammas[i];
    for (int i = 1; i < samples; ++i) s.Gammas[i] = s.gammas[i] / sum;
    return s;
}

// Cumulative interval points: X_0 = x0, X_{i+1} = X_i + Gamma_{i+1} * (xLast
// - x0). Normalization telescopes the last point onto xLast.
[[nodiscard]] inline std::vector<double> interval_points(const ScaleSeries& series, double x0, double x_last) {
    if (!(x0 < x_last)) throw std::invalid_argument("interval domain is empty");
    const std::size_t n = series.Gammas.size();
    std::vector<double> xs(n);
    xs[0] = x0;
    for (std::size_t i = 1; i < n; ++i) xs[i] = xs[i - 1] + series.Gammas[i] * (x_last - x0);
    return xs;
}

// ---------------------------------------------------------------------------
// Lattice
// ---------------------------------------------------------------------------

// Row-major intersection grid: point k = row * M + col, row 0 at the
// smallest vertical coordinate (image top).
struct GridLattice {
    std::vector<Vec2> points;
    GridSpec spec;

    [[nodiscard]] const Vec2& at(int row, int col) const {
        return points[static_cast<std::size_t>(row) * spec.M + col];
    }
};

// Quadrilateral cell anchored at lattice point k: corners are (p_k, p_{k+1},
// p_{k+M}, p_{k+M+1}), i.e. origin, +col, +row, +both.
struct QuadBlock {
    std::array<Vec2, 4> corners{};
    std::size_t k = 0;
};

namespace detail {

// Signals a cell whose two curves fail to cross exactly once in-domain.
[[noreturn]] inline void throw_mesh_fold(int col, int row) {
    throw std::runtime_error("mesh fold at (" + std::to_string(col) + "," + std::to_string(row) + ")");
}

// Intersection of a near-vertical member x = v(y) with a near-horizontal
// member y = h(x): root of F(x) = v(h(x)) - x. Newton from the seed with a
// scanned-bracket bisection fallback; more than one crossing is a fold.
inline Vec2 intersect_members(const PolyCurve& vertical, const PolyCurve& horizontal, double seed_x,
                              double x_lo, double x_hi, int col, int row) {
    auto F = [&](double x) { return vertical.eval(horizontal.eval(x)) - x; };
    auto dF = [&](double x) { return vertical.deriv(horizontal.eval(x), 1) * horizontal.deriv(x, 1) - 1.0; };

    const double span = x_hi - x_lo;
    const double lo = x_lo - 0.05 * span, hi = x_hi + 0.05 * span;

    // Crossing census over the strict domain.
    constexpr int kScan = 64;
    int crossings = 0;
    int bracket = -1;
    double prev = F(x_lo);
    int last_hit = -10;
    for (int s = 1; s <= kScan; ++s) {
        const double x = x_lo + span * static_cast<double>(s) / kScan;
        const double cur = F(x);
        const bool hit = (prev == 0.0) || (prev * cur < 0.0);
        if (hit && s - last_hit > 1) {
            ++crossings;
            bracket = s - 1;
            last_hit = s;
        }
        prev = cur;
    }
    if (prev == 0.0 && kScan - last_hit > 1) {
        ++crossings;
        bracket = kScan - 1;
    }
    if (crossings > 1) throw_mesh_fold(col, row);

    double x = seed_x;
    bool converged = false;
    for (int it = 0; it < 50; ++it) {
        const double f = F(x);
        if (std::abs(f) < 1e-10) {
            converged = true;
            break;
        }
        const double d = dF(x);
        if (std::abs(d) < 1e-12) break;
        x -= f / d;
        if (x < lo || x > hi) break;
    }
    if (!converged && bracket >= 0) {
        double a = x_lo + span * static_cast<double>(bracket) / kScan;
        double b = a + span / kScan;
        double fa = F(a);
        for (int it = 0; it < 200; ++it) {
            const double m = 0.5 * (a + b);
            const double fm = F(m);
            if (std::abs(fm) < 1e-12 || b - a < 1e-13 * (1.0 + std::abs(m))) {
                x = m;
                converged = true;
                break;
            }
            if (fa * fm <= 0.0)
                b = m;
            else {
                a = m;
                fa = fm;
            }
        }
        if (!converged) {
            x = 0.5 * (a + b);
            converged = std::abs(F(x)) < 1e-6;
        }
    }
    if (!converged || x < lo || x > hi) throw_mesh_fold(col, row);
    return {x, horizontal.eval(x)};
}

}  // namespace detail

// Intersects the vertical evolution family (members x = v(y), placed at the
// column positions xs) with the horizontal family (members y = h(x), placed
// at the row positions ys). Families are sampled continuously along their
// coefficient line, so member placement carries no quantization error.
[[nodiscard]] inline GridLattice build_lattice(const CurveFamily& vertical, const std::vector<double>& xs,
                                               const CurveFamily& horizontal, const std::vector<double>& ys,
                                               unsigned jobs = 1) {
    if (xs.size() < 2 || ys.size() < 2) throw std::invalid_argument("lattice needs at least 2x2 positions");
    const int M = static_cast<int>(xs.size());
    const int N = static_cast<int>(ys.size());
    const double x0 = xs.front(), x_last = xs.back();
    const double y0 = ys.front(), y_last = ys.back();

    std::vector<PolyCurve> v_members, h_members;
    v_members.reserve(M);
    h_members.reserve(N);
    for (int i = 0; i < M; ++i) v_members.push_back(vertical.member_at((xs[i] - x0) / (x_last - x0)));
    for (int j = 0; j < N; ++j) h_members.push_back(horizontal.member_at((ys[j] - y0) / (y_last - y0)));

    GridLattice lattice;
    lattice.spec = GridSpec(M, N);
    lattice.points.resize(static_cast<std::size_t>(M) * N);
    parallel_for(lattice.points.size(), jobs, [&](std::size_t k) {
        const int row = static_cast<int>(k) / M;
        const int col = static_cast<int>(k) % M;
        lattice.points[k] =
            detail::intersect_members(v_members[col], h_members[row], xs[col], x0, x_last, col, row);
    });

    // A valid mesh is monotone along rows and columns; a violation means the
    // families folded between the sampled crossings.
    for (int row = 0; row < N; ++row)
        for (int col = 0; col + 1 < M; ++col)
            if (!(lattice.at(row, col).x < lattice.at(row, col + 1).x)) detail::throw_mesh_fold(col, row);
    for (int col = 0; col < M; ++col)
        for (int row = 0; row + 1 < N; ++row)
            if (!(lattice.at(row, col).y < lattice.at(row + 1, col).y)) detail::throw_mesh_fold(col, row);
    return lattice;
}

// All admissible quadrilateral blocks (one per lattice point that has both
// a right and a down neighbor): exactly (M-1)(N-1) of them.
[[nodiscard]] inline std::vector<QuadBlock> extract_blocks(const GridLattice& lattice) {
    const std::size_t M = static_cast<std::size_t>(lattice.spec.M);
    const std::size_t N = static_cast<std::size_t>(lattice.spec.N);
    std::vector<QuadBlock> blocks;
    blocks.reserve((M - 1) * (N - 1));
    for (std::size_t k = 0; k < M * N; ++k) {
        if (k % M == M - 1 || k >= M * (N - 1)) continue;
        blocks.push_back({{lattice.points[k], lattice.points[k + 1], lattice.points[k + M],
                           lattice.points[k + M + 1]},
                          k});
    }
    return blocks;
}

}  // namespace pageflat
