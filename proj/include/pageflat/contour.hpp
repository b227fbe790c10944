#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pageflat/geometry.hpp"
#include "pageflat/raster.hpp"

namespace pageflat {

// Ordered border-pixel walk of a foreground component. Consecutive points
// are 8-connected; a closed contour wraps last-to-first. Traversal order is
// normalized to counterclockwise on screen (negative shoelace area in
// y-down coordinates). Components of one or two pixels yield degenerate
// closed contours with fewer than 4 points.
struct Contour {
    std::vector<Vec2> points;
    bool closed = true;
};

// The book's landmark set: outer quadrilateral corners ordered TL, TR, BR,
// BL, plus the two spine kink points in book mode.
struct PageOutline {
    std::array<Vec2, 4> corners{};  // TL, TR, BR, BL
    std::optional<Vec2> spine_top;
    std::optional<Vec2> spine_bottom;

    [[nodiscard]] bool has_spine() const noexcept { return spine_top && spine_bottom; }
};

// Four boundary point-chains of one smooth page surface. Directions: top
// and bottom run left to right, left and right run top to bottom, and the
// chains share endpoints pairwise at the surface corners.
struct SurfaceBoundary {
    std::vector<Vec2> top;
    std::vector<Vec2> bottom;
    std::vector<Vec2> left;
    std::vector<Vec2> right;
};

// ---------------------------------------------------------------------------
// Border following (outer borders of 8-connected components)
// ---------------------------------------------------------------------------

namespace detail {

// Neighborhood in clockwise screen order starting at west.
inline constexpr std::array<std::array<int, 2>, 8> kClockwise{{
    {{0, -1}}, {{-1, -1}}, {{-1, 0}}, {{-1, 1}}, {{0, 1}}, {{1, 1}}, {{1, 0}}, {{1, -1}},
}};  // (row, col) deltas: W NW N NE E SE S SW

struct BorderGrid {
    int rows, cols;
    std::vector<int> f;  // 0 background, 1 unvisited fg, +/-label visited

    [[nodiscard]] int& at(int r, int c) { return f[static_cast<std::size_t>(r) * cols + c]; }
    [[nodiscard]] int at(int r, int c) const { return f[static_cast<std::size_t>(r) * cols + c]; }
};

inline int dir_index(int dr, int dc) {
    for (int d = 0; d < 8; ++d)
        if (kClockwise[d][0] == dr && kClockwise[d][1] == dc) return d;
    return 0;
}

// One border trace of the border-following algorithm, with the marking
// scheme that prevents re-detection. Returns the visited pixel sequence.
inline std::vector<std::array<int, 2>> follow_border(BorderGrid& g, int r0, int c0, int r_from, int c_from,
                                                     int nbd) {
    std::vector<std::array<int, 2>> walk;

    // 3.1: clockwise from the triggering neighbor, first nonzero pixel.
    const int start_d = dir_index(r_from - r0, c_from - c0);
    int r1 = -1, c1 = -1;
    for (int k = 0; k < 8; ++k) {
        const int d = (start_d + k) % 8;
        const int rr = r0 + kClockwise[d][0], cc = c0 + kClockwise[d][1];
        if (g.at(rr, cc) != 0) {
            r1 = rr;
            c1 = cc;
            break;
        }
    }
    if (r1 < 0) {  // isolated pixel: the whole border
        g.at(r0, c0) = -nbd;
        walk.push_back({r0, c0});
        return walk;
    }

    // 3.2 onward.
    int r2 = r1, c2 = c1;  // previous border pixel (search anchor)
    int r3 = r0, c3 = c0;  // current border pixel
    while (true) {
        walk.push_back({r3, c3});
        // 3.3: counterclockwise from the neighbor after (r2,c2).
        const int anchor = dir_index(r2 - r3, c2 - c3);
        bool east_seen_zero = false;
        int r4 = -1, c4 = -1;
        for (int k = 1; k <= 8; ++k) {
            const int d = ((anchor - k) % 8 + 8) % 8;  // counterclockwise
            const int rr = r3 + kClockwise[d][0], cc = c3 + kClockwise[d][1];
            if (g.at(rr, cc) != 0) {
                r4 = rr;
                c4 = cc;
                break;
            }
            if (rr == r3 && cc == c3 + 1) east_seen_zero = true;
        }
        // 3.4: marking.
        if (east_seen_zero)
            g.at(r3, c3) = -nbd;
        else if (g.at(r3, c3) == 1)
            g.at(r3, c3) = nbd;
        // 3.5: termination — back at the start in the starting configuration.
        if (r4 == r0 && c4 == c0 && r3 == r1 && c3 == c1) break;
        r2 = r3;
        c2 = c3;
        r3 = r4;
        c3 = c4;
    }
    // The walk revisits the start as its final step configuration; drop the
    // duplicate tail sample if the trace closed on itself immediately.
    if (walk.size() > 1 && walk.front() == walk.back()) walk.pop_back();
    return walk;
}

}  // namespace detail

// All outer borders of 8-connected foreground components, largest enclosed
// area first. Hole borders are traced internally only to keep the marking
// sound; they are not returned.
[[nodiscard]] inline std::vector<Contour> trace_borders(const BinaryMask& mask) {
    const int rows = mask.height() + 2, cols = mask.width() + 2;
    detail::BorderGrid g{rows, cols, std::vector<int>(static_cast<std::size_t>(rows) * cols, 0)};
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask.at(x, y)) g.at(y + 1, x + 1) = 1;

    std::vector<Contour> out;
    int nbd = 1;
    for (int r = 1; r < rows - 1; ++r) {
        for (int c = 1; c < cols - 1; ++c) {
            const int v = g.at(r, c);
            if (v == 0) continue;
            if (v == 1 && g.at(r, c - 1) == 0) {
                // outer border start
                ++nbd;
                auto walk = detail::follow_border(g, r, c, r, c - 1, nbd);
                Contour contour;
                contour.points.reserve(walk.size());
                for (const auto& p : walk)
                    contour.points.push_back({static_cast<double>(p[1] - 1), static_cast<double>(p[0] - 1)});
                // normalize to counterclockwise on screen
                if (contour.points.size() > 2 && signed_area(contour.points) > 0.0)
                    std::reverse(contour.points.begin(), contour.points.end());
                out.push_back(std::move(contour));
            } else if (v >= 1 && g.at(r, c + 1) == 0) {
                // hole border: trace purely for the marking side effect
                ++nbd;
                detail::follow_border(g, r, c, r, c + 1, nbd);
            }
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const Contour& a, const Contour& b) {
        return std::abs(signed_area(a.points)) > std::abs(signed_area(b.points));
    });
    return out;
}

// ---------------------------------------------------------------------------
// Quadrilateral outline
// ---------------------------------------------------------------------------

namespace detail {

inline void douglas_peucker(std::span<const Vec2> pts, double eps, std::vector<Vec2>& out) {
    if (pts.size() < 3) {
        for (const Vec2& p : pts) out.push_back(p);
        return;
    }
    double worst = -1.0;
    std::size_t split = 0;
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
        const double d = line_point_distance(pts.front(), pts.back(), pts[i]);
        if (d > worst) {
            worst = d;
            split = i;
        }
    }
    if (worst <= eps) {
        out.push_back(pts.front());
        out.push_back(pts.back());
        return;
    }
    std::vector<Vec2> a, b;
    douglas_peucker(pts.subspan(0, split + 1), eps, a);
    douglas_peucker(pts.subspan(split), eps, b);
    out.insert(out.end(), a.begin(), a.end() - 1);
    out.insert(out.end(), b.begin(), b.end());
}

// Closed-polygon simplification: split at the two mutually farthest anchor
// points (approximated as farthest-from-centroid, then farthest-from-that),
// simplify both halves, rejoin. Returns vertex count for the closed result.
inline std::vector<Vec2> simplify_closed(const std::vector<Vec2>& pts, std::size_t ia, std::size_t ib,
                                         double eps) {
    const std::size_t n = pts.size();
    std::vector<Vec2> half1, half2;
    half1.reserve(n);
    for (std::size_t i = ia;; i = (i + 1) % n) {
        half1.push_back(pts[i]);
        if (i == ib) break;
    }
    half2.reserve(n);
    for (std::size_t i = ib;; i = (i + 1) % n) {
        half2.push_back(pts[i]);
        if (i == ia) break;
    }
    half2.push_back(pts[ia]);

    std::vector<Vec2> s1, s2;
    douglas_peucker(half1, eps, s1);
    douglas_peucker(half2, eps, s2);
    std::vector<Vec2> merged = std::move(s1);
    merged.insert(merged.end(), s2.begin() + 1, s2.end() - 1);
    return merged;  // closed polygon, first vertex pts[ia]
}

}  // namespace detail

// Outer quadrilateral of a closed contour: Douglas-Peucker with the
// tolerance ramped until exactly four vertices survive, reordered TL, TR,
// BR, BL. Degenerate contours that never simplify to a quadrilateral are
// rejected.
[[nodiscard]] inline std::array<Vec2, 4> approx_quadrilateral(const Contour& c) {
    if (!c.closed || c.points.size() < 4) throw std::invalid_argument("quadrilateral needs a closed contour of >= 4 points");
    const auto& pts = c.points;
    const std::size_t n = pts.size();

    Vec2 centroid{0, 0};
    for (const Vec2& p : pts) centroid = centroid + p;
    centroid = centroid * (1.0 / static_cast<double>(n));
    std::size_t ia = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i)
        if (const double d = distance(pts[i], centroid); d > best) {
            best = d;
            ia = i;
        }
    std::size_t ib = 0;
    best = -1.0;
    for (std::size_t i = 0; i < n; ++i)
        if (const double d = distance(pts[i], pts[ia]); d > best) {
            best = d;
            ib = i;
        }
    if (ia == ib) throw std::runtime_error("no quadrilateral outline");

    auto count_at = [&](double eps) { return detail::simplify_closed(pts, ia, ib, eps).size(); };

    // Ramp until at most 4 vertices survive, then bisect for exactly 4.
    double lo = 0.0, hi = 0.5;
    while (count_at(hi) > 4) {
        lo = hi;
        hi *= 1.5;
        if (hi > 1e7) throw std::runtime_error("no quadrilateral outline");
    }
    double eps = hi;
    if (count_at(hi) < 4) {
        for (int iter = 0; iter < 80; ++iter) {
            const double mid = 0.5 * (lo + hi);
            const std::size_t k = count_at(mid);
            if (k == 4) {
                eps = mid;
                break;
            }
            (k > 4 ? lo : hi) = mid;
        }
        if (count_at(eps) != 4) throw std::runtime_error("no quadrilateral outline");
    }
    const std::vector<Vec2> quad = detail::simplify_closed(pts, ia, ib, eps);

    // Role assignment by the corner sums/differences; upright pages only.
    auto pick = [&](auto key) {
        return *std::min_element(quad.begin(), quad.end(),
                                 [&](const Vec2& a, const Vec2& b) { return key(a) < key(b); });
    };
    const Vec2 tl = pick([](const Vec2& p) { return p.x + p.y; });
    const Vec2 br = pick([](const Vec2& p) { return -(p.x + p.y); });
    const Vec2 tr = pick([](const Vec2& p) { return p.y - p.x; });
    const Vec2 bl = pick([](const Vec2& p) { return p.x - p.y; });
    const std::array<Vec2, 4> corners{tl, tr, br, bl};
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (corners[i] == corners[j]) throw std::runtime_error("no quadrilateral outline");
    if (std::abs(signed_area(corners)) < 1.0) throw std::runtime_error("no quadrilateral outline");
    return corners;
}

// ---------------------------------------------------------------------------
// Kink (non-differentiable point) detection
// ---------------------------------------------------------------------------

// Cyclic index range on a contour: `count` points starting at `begin`.
struct IndexRange {
    std::size_t begin = 0;
    std::size_t count = 0;
};

// Indices where the turning angle between the chords entering and leaving a
// point (each spanning `window` points) exceeds `threshold`. Detections
// within `window` indices of each other merge to the locally maximal angle.
[[nodiscard]] inline std::vector<std::size_t> find_kinks(const Contour& c, std::size_t window,
                                                         double threshold, IndexRange roi) {
    if (window < 1) throw std::invalid_argument("kink window must be >= 1");
    const std::size_t n = c.points.size();
    if (roi.count > n) throw std::invalid_argument("roi exceeds contour length");
    if (n < 2 * window + 1) return {};

    auto wrap = [n](std::size_t i, std::ptrdiff_t d) {
        return static_cast<std::size_t>((static_cast<std::ptrdiff_t>(i) + d % static_cast<std::ptrdiff_t>(n) +
                                         static_cast<std::ptrdiff_t>(n)) %
                                        static_cast<std::ptrdiff_t>(n));
    };

    struct Hit {
        std::size_t order;  // position within the roi (for merge adjacency)
        std::size_t index;
        double angle;
    };
    std::vector<Hit> hits;
    for (std::size_t o = 0; o < roi.count; ++o) {
        const std::size_t i = wrap(roi.begin, static_cast<std::ptrdiff_t>(o));
        const Vec2 vin = c.points[i] - c.points[wrap(i, -static_cast<std::ptrdiff_t>(window))];
        const Vec2 vout = c.points[wrap(i, static_cast<std::ptrdiff_t>(window))] - c.points[i];
        if (norm(vin) < 1e-12 || norm(vout) < 1e-12) continue;
        const double a = angle_between(vin, vout);
        if (a > threshold) hits.push_back({o, i, a});
    }

    struct Group {
        std::size_t best;  // hit index with the maximal angle
        std::size_t first_order, last_order;
    };
    std::vector<Group> groups;
    std::size_t g = 0;
    while (g < hits.size()) {
        std::size_t end = g + 1;
        std::size_t best = g;
        while (end < hits.size() && hits[end].order - hits[end - 1].order <= window) {
            if (hits[end].angle > hits[best].angle) best = end;
            ++end;
        }
        groups.push_back({best, hits[g].order, hits[end - 1].order});
        g = end;
    }
    // A full-contour ROI is cyclic: a cluster straddling the ROI start shows
    // up as separate first and last groups and must be merged.
    if (roi.count == n && groups.size() > 1 &&
        groups.front().first_order + n - groups.back().last_order <= window) {
        if (hits[groups.back().best].angle > hits[groups.front().best].angle)
            groups.front().best = groups.back().best;
        groups.pop_back();
    }
    std::vector<std::size_t> out;
    out.reserve(groups.size());
    for (const Group& grp : groups) out.push_back(hits[grp.best].index);
    return out;
}

// ---------------------------------------------------------------------------
// Surface splitting
// ---------------------------------------------------------------------------

namespace detail {

inline std::size_t landmark_index(const Contour& c, Vec2 p) {
    for (std::size_t i = 0; i < c.points.size(); ++i)
        if (std::abs(c.points[i].x - p.x) < 1e-9 && std::abs(c.points[i].y - p.y) < 1e-9) return i;
    throw std::runtime_error("landmark off contour");
}

// Contour arc from landmark index a to landmark index b walking forward
// (cyclically), endpoints included.
inline std::vector<Vec2> arc(const Contour& c, std::size_t a, std::size_t b) {
    std::vector<Vec2> out;
    const std::size_t n = c.points.size();
    for (std::size_t i = a;; i = (i + 1) % n) {
        out.push_back(c.points[i]);
        if (i == b) break;
    }
    return out;
}

inline std::vector<Vec2> reversed(std::vector<Vec2> v) {
    std::reverse(v.begin(), v.end());
    return v;
}

// Straight chain between two landmarks, densely sampled so downstream
// fitting has enough abscissae at any supported degree.
inline std::vector<Vec2> straight_chain(Vec2 a, Vec2 b, std::size_t samples = 33) {
    std::vector<Vec2> out;
    out.reserve(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(samples - 1);
        out.push_back({a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t});
    }
    return out;
}

}  // namespace detail

// Positions of a landmark ring on the contour plus the rotational direction
// the contour traverses it in: `forward` means walking the contour forward
// visits the ring entries in their given order.
struct RingIndices {
    std::vector<std::size_t> idx;
    bool forward = true;
};

[[nodiscard]] inline RingIndices landmark_ring_indices(const Contour& c, const std::vector<Vec2>& ring) {
    RingIndices out;
    out.idx.resize(ring.size());
    for (std::size_t k = 0; k < ring.size(); ++k) out.idx[k] = detail::landmark_index(c, ring[k]);
    const std::size_t n = c.points.size();
    auto fwd_gap = [n](std::size_t a, std::size_t b) { return (b + n - a) % n; };
    // From ring[0], walking forward must reach ring[1] before ring[m-1];
    // otherwise the contour runs the ring backwards.
    out.forward = fwd_gap(out.idx[0], out.idx[1]) <= fwd_gap(out.idx[0], out.idx[ring.size() - 1]);
    return out;
}

namespace detail {

// Arcs between consecutive ring entries, oriented so ring[k] -> ring[k+1].
inline std::vector<std::vector<Vec2>> ring_arcs(const Contour& c, const std::vector<Vec2>& ring) {
    const std::size_t m = ring.size();
    const RingIndices ri = landmark_ring_indices(c, ring);
    const std::vector<std::size_t>& idx = ri.idx;
    const bool forward = ri.forward;

    std::vector<std::vector<Vec2>> arcs(m);
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t k2 = (k + 1) % m;
        arcs[k] = forward ? arc(c, idx[k], idx[k2]) : reversed(arc(c, idx[k2], idx[k]));
    }
    // Every landmark must be an arc endpoint only; a landmark strictly
    // inside another arc means the ring ordering does not match the contour.
    for (std::size_t k = 0; k < m; ++k) {
        const auto& a = arcs[k];
        for (std::size_t k2 = 0; k2 < m; ++k2) {
            if (ring[k2] == a.front() || ring[k2] == a.back()) continue;
            for (const Vec2& p : a)
                if (p == ring[k2]) throw std::runtime_error("landmark ordering inconsistent on contour");
        }
    }
    return arcs;
}

}  // namespace detail

// Cuts the contour at the outline landmarks and assembles per-surface
// boundary chains. Book mode (spine points present) yields {left, right};
// single-page mode yields one boundary covering the whole outline. The
// spine itself is not part of the traced contour, so both book surfaces
// receive a synthesized straight spine chain as their shared edge.
[[nodiscard]] inline std::vector<SurfaceBoundary> split_surfaces(const Contour& c, const PageOutline& outline) {
    const Vec2 tl = outline.corners[0], tr = outline.corners[1], br = outline.corners[2], bl = outline.corners[3];

    if (!outline.has_spine()) {
        // Ring in screen-counterclockwise order: TL -> BL -> BR -> TR.
        const auto arcs = detail::ring_arcs(c, {tl, bl, br, tr});
        SurfaceBoundary sb;
        sb.left = arcs[0];
        sb.bottom = arcs[1];
        sb.right = detail::reversed(arcs[2]);
        sb.top = detail::reversed(arcs[3]);
        return {std::move(sb)};
    }

    const Vec2 st = *outline.spine_top, sb_pt = *outline.spine_bottom;
    const auto arcs = detail::ring_arcs(c, {tl, bl, sb_pt, br, tr, st});
    const auto spine = detail::straight_chain(st, sb_pt);

    SurfaceBoundary left;
    left.left = arcs[0];                     // TL -> BL
    left.bottom = arcs[1];                   // BL -> SB
    left.right = spine;                      // ST -> SB
    left.top = detail::reversed(arcs[5]);    // TL -> ST

    SurfaceBoundary right;
    right.left = spine;                      // ST -> SB
    right.bottom = arcs[2];                  // SB -> BR
    right.right = detail::reversed(arcs[3]);  // TR -> BR
    right.top = detail::reversed(arcs[4]);    // ST -> TR
    return {std::move(left), std::move(right)};
}

}  // namespace pageflat
