#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "pageflat/geometry.hpp"
#include "pageflat/numeric.hpp"

namespace pageflat {

// Which image coordinate is the curve's free variable: Axis::x means
// y = P(x) (top/bottom boundaries), Axis::y means x = P(y) (left/right).
enum class Axis { x, y };

// Polynomial boundary curve, coefficients ascending (c0 + c1 x + ...),
// values in pixels, valid over [domain_lo, domain_hi]. Evaluation outside
// the domain is permitted (mild extrapolation near surface corners).
struct PolyCurve {
    std::vector<double> coeffs;
    Axis axis = Axis::x;
    double domain_lo = 0.0;
    double domain_hi = 1.0;

    PolyCurve() = default;
    PolyCurve(std::vector<double> c, Axis ax, double lo, double hi)
        : coeffs(std::move(c)), axis(ax), domain_lo(lo), domain_hi(hi) {
        if (coeffs.empty()) throw std::invalid_argument("polynomial needs at least one coefficient");
        if (!(lo < hi)) throw std::invalid_argument("polynomial domain is empty");
    }

    [[nodiscard]] int degree() const noexcept { return static_cast<int>(coeffs.size()) - 1; }

    [[nodiscard]] double eval(double x) const noexcept {
        double acc = 0.0;
        for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
        return acc;
    }

    // Exact derivative via coefficient shift-multiply; orders above 2 are
    // outside this library's needs and rejected.
    [[nodiscard]] double deriv(double x, int order = 1) const {
        if (order < 1 || order > 2) throw std::invalid_argument("derivative order must be 1 or 2");
        double acc = 0.0;
        if (order == 1) {
            for (std::size_t i = coeffs.size(); i-- > 1;) acc = acc * x + coeffs[i] * static_cast<double>(i);
        } else {
            for (std::size_t i = coeffs.size(); i-- > 2;)
                acc = acc * x + coeffs[i] * static_cast<double>(i) * static_cast<double>(i - 1);
        }
        return acc;
    }

    // Coefficient vector of P'' (ascending), possibly all zero.
    [[nodiscard]] std::vector<double> second_derivative_coeffs() const {
        if (coeffs.size() < 3) return {0.0};
        std::vector<double> out(coeffs.size() - 2);
        for (std::size_t i = 2; i < coeffs.size(); ++i)
            out[i - 2] = coeffs[i] * static_cast<double>(i) * static_cast<double>(i - 1);
        return out;
    }
};

// ---------------------------------------------------------------------------
// Least-squares fitting
// ---------------------------------------------------------------------------

struct FitResult {
    PolyCurve curve;
    double rms = 0.0;  // root-mean-square residual of the fit
};

namespace detail {

// Coefficients of P(s*x + o) given coefficients of P(t), ascending order.
inline std::vector<double> compose_affine(const std::vector<double>& c, double s, double o) {
    std::vector<double> out(c.size(), 0.0);
    std::vector<double> pow_k{1.0};  // (s x + o)^k, ascending
    for (std::size_t k = 0; k < c.size(); ++k) {
        for (std::size_t i = 0; i < pow_k.size(); ++i) out[i] += c[k] * pow_k[i];
        if (k + 1 < c.size()) {
            std::vector<double> next(pow_k.size() + 1, 0.0);
            for (std::size_t i = 0; i < pow_k.size(); ++i) {
                next[i] += pow_k[i] * o;
                next[i + 1] += pow_k[i] * s;
            }
            pow_k = std::move(next);
        }
    }
    return out;
}

}  // namespace detail

// Least-squares polynomial fit of ordinate(axis) against abscissa(axis) over
// the chain. Abscissae are mapped to [-1,1] before forming the normal
// equations (raw pixel coordinates would make the system hopelessly
// ill-conditioned at degree 4+), then mapped back.
[[nodiscard]] inline FitResult fit(std::span<const Vec2> chain, int degree, Axis axis) {
    if (degree < 2) throw std::invalid_argument("fit degree must be at least 2");
    const std::size_t n = chain.size();
    if (n < static_cast<std::size_t>(degree) + 1) throw std::invalid_argument("chain too short for degree");

    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = (axis == Axis::x) ? chain[i].x : chain[i].y;
        ys[i] = (axis == Axis::x) ? chain[i].y : chain[i].x;
    }
    const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi - lo < 1e-9) throw std::runtime_error("degenerate abscissae");

    // t = s*x + o maps [lo,hi] -> [-1,1]
    const double s = 2.0 / (hi - lo);
    const double o = -(hi + lo) / (hi - lo);

    const std::size_t m = static_cast<std::size_t>(degree) + 1;
    std::vector<double> ata(m * m, 0.0), atb(m, 0.0), basis(m);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = s * xs[i] + o;
        basis[0] = 1.0;
        for (std::size_t k = 1; k < m; ++k) basis[k] = basis[k - 1] * t;
        for (std::size_t r = 0; r < m; ++r) {
            atb[r] += basis[r] * ys[i];
            for (std::size_t c = 0; c < m; ++c) ata[r * m + c] += basis[r] * basis[c];
        }
    }
    std::vector<double> t_coeffs;
    try {
        t_coeffs = detail::solve_linear(std::move(ata), std::move(atb), m, 1e-10 * static_cast<double>(n));
    } catch (const std::runtime_error&) {
        throw std::runtime_error("degenerate abscissae");
    }

    PolyCurve curve(detail::compose_affine(t_coeffs, s, o), axis, lo, hi);
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = curve.eval(xs[i]) - ys[i];
        sq += r * r;
    }
    return {std::move(curve), std::sqrt(sq / static_cast<double>(n))};
}

// ---------------------------------------------------------------------------
// Curvature and inflection points
// ---------------------------------------------------------------------------

// standard: kappa = P'' / (1 + P'^2)^(3/2), signed by P''.
// as_printed: P'' / (1 + P')^(3/2) — a literal transcription kept for
// comparison; it is dimensionally odd and yields NaN where P' < -1.
enum class CurvatureForm { standard, as_printed };

[[nodiscard]] inline double curvature(const PolyCurve& p, double x,
                                      CurvatureForm form = CurvatureForm::standard) {
    const double d1 = p.deriv(x, 1);
    const double d2 = p.deriv(x, 2);
    const double base = (form == CurvatureForm::standard) ? 1.0 + d1 * d1 : 1.0 + d1;
    return d2 / std::pow(base, 1.5);
}

namespace detail {

// Durand–Kerner simultaneous root iteration for a real polynomial given by
// ascending coefficients. Good enough for the low degrees seen here.
inline std::vector<std::complex<double>> poly_roots(std::vector<double> coeffs) {
    while (coeffs.size() > 1 && std::abs(coeffs.back()) < 1e-14) coeffs.pop_back();
    const int deg = static_cast<int>(coeffs.size()) - 1;
    if (deg < 1) return {};
    if (deg == 1) return {std::complex<double>(-coeffs[0] / coeffs[1], 0.0)};

    std::vector<std::complex<double>> monic(coeffs.size());
    for (std::size_t i = 0; i < coeffs.size(); ++i) monic[i] = coeffs[i] / coeffs.back();

    auto eval = [&](std::complex<double> z) {
        std::complex<double> acc = 0.0;
        for (std::size_t i = monic.size(); i-- > 0;) acc = acc * z + monic[i];
        return acc;
    };

    std::vector<std::complex<double>> r(deg);
    const std::complex<double> seed(0.4, 0.9);
    std::complex<double> p = 1.0;
    for (int k = 0; k < deg; ++k) {
        p *= seed;
        r[k] = p;
    }
    for (int iter = 0; iter < 500; ++iter) {
        double worst = 0.0;
        for (int k = 0; k < deg; ++k) {
            std::complex<double> denom = 1.0;
            for (int j = 0; j < deg; ++j)
                if (j != k) denom *= (r[k] - r[j]);
            if (std::abs(denom) < 1e-30) denom = 1e-30;
            const std::complex<double> delta = eval(r[k]) / denom;
            r[k] -= delta;
            worst = std::max(worst, std::abs(delta));
        }
        if (worst < 1e-13) break;
    }
    return r;
}

}  // namespace detail

// Real roots of P'' strictly inside the domain where P'' changes sign —
// i.e. genuine concave/convex transitions, ascending. Tangential (even
// multiplicity) roots are not inflections and are dropped.
[[nodiscard]] inline std::vector<double> inflections(const PolyCurve& p) {
    if (p.degree() < 2) throw std::invalid_argument("inflections need degree >= 2");
    const std::vector<double> dd = p.second_derivative_coeffs();

    const double span = p.domain_hi - p.domain_lo;
    std::vector<double> candidates;
    for (const auto& z : detail::poly_roots(dd)) {
        if (std::abs(z.imag()) > 1e-7 * (1.0 + std::abs(z.real()))) continue;
        const double x = z.real();
        if (x <= p.domain_lo || x >= p.domain_hi) continue;
        candidates.push_back(x);
    }
    std::sort(candidates.begin(), candidates.end());
    std::vector<double> merged;
    for (double x : candidates) {
        if (merged.empty() || x - merged.back() > 1e-9 * span) merged.push_back(x);
    }

    auto eval_dd = [&](double x) {
        double acc = 0.0;
        for (std::size_t i = dd.size(); i-- > 0;) acc = acc * x + dd[i];
        return acc;
    };

    std::vector<double> out;
    for (std::size_t i = 0; i < merged.size(); ++i) {
        const double left_bound = (i == 0) ? p.domain_lo : (merged[i - 1] + merged[i]) / 2.0;
        const double right_bound = (i + 1 == merged.size()) ? p.domain_hi : (merged[i] + merged[i + 1]) / 2.0;
        const double sl = eval_dd((left_bound + merged[i]) / 2.0);
        const double sr = eval_dd((merged[i] + right_bound) / 2.0);
        if (sl * sr < 0.0) out.push_back(merged[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Uniform coefficient evolution
// ---------------------------------------------------------------------------

// Family of curves interpolating coefficient-wise from start to a target:
// member(i) = start + i * step, i in [0, count). member(count-1) is the
// target. For polynomials, stepping coefficients and stepping values agree.
struct CurveFamily {
    PolyCurve start;
    std::vector<double> step;
    int count = 0;

    [[nodiscard]] PolyCurve member(int i) const {
        if (i < 0 || i >= count) throw std::out_of_range("family member index");
        std::vector<double> c = start.coeffs;
        for (std::size_t k = 0; k < c.size(); ++k) c[k] += step[k] * static_cast<double>(i);
        return PolyCurve(std::move(c), start.axis, start.domain_lo, start.domain_hi);
    }

    // Curve at position fraction t in [0,1] along the family's coefficient
    // line. Fractional positions interpolate between members — the continuum
    // the discrete family approximates as its step count grows.
    [[nodiscard]] PolyCurve member_at(double t) const {
        const double f = std::clamp(t, 0.0, 1.0) * static_cast<double>(count - 1);
        std::vector<double> c = start.coeffs;
        for (std::size_t k = 0; k < c.size(); ++k) c[k] += step[k] * f;
        return PolyCurve(std::move(c), start.axis, start.domain_lo, start.domain_hi);
    }
};

// Uniform evolution from p0 to pn in `steps` equal coefficient increments
// (count = steps + 1 curves). Degrees are equalized by zero padding.
[[nodiscard]] inline CurveFamily evolve_family(const PolyCurve& p0, const PolyCurve& pn, int steps) {
    if (steps < 2) throw std::invalid_argument("evolution needs at least 2 steps");
    if (p0.axis != pn.axis) throw std::invalid_argument("evolution endpoints disagree on axis");
    if (std::abs(p0.domain_lo - pn.domain_lo) > 1e-9 || std::abs(p0.domain_hi - pn.domain_hi) > 1e-9)
        throw std::invalid_argument("evolution endpoints disagree on domain");

    const std::size_t m = std::max(p0.coeffs.size(), pn.coeffs.size());
    std::vector<double> c0(m, 0.0), cn(m, 0.0);
    std::copy(p0.coeffs.begin(), p0.coeffs.end(), c0.begin());
    std::copy(pn.coeffs.begin(), pn.coeffs.end(), cn.begin());

    std::vector<double> step(m);
    for (std::size_t k = 0; k < m; ++k) step[k] = (cn[k] - c0[k]) / static_cast<double>(steps);

    CurveFamily fam;
    fam.start = PolyCurve(std::move(c0), p0.axis, p0.domain_lo, p0.domain_hi);
    fam.step = std::move(step);
    fam.count = steps + 1;
    return fam;
}

}  // namespace pageflat
