#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "pageflat/geometry.hpp"
#include "pageflat/mesh.hpp"
#include "pageflat/parallel.hpp"
#include "pageflat/polyfit.hpp"
#include "pageflat/raster.hpp"

namespace pageflat {

// Pinhole camera hovering over the page center at `distance`, tilted about
// the horizontal axis by `tilt` radians and re-aimed so the page center
// stays on the principal ray.
struct Camera {
    double distance = 6000.0;
    double tilt = 0.0;
};

// Synthetic curved-page scene with exact geometry: flat content lifted to
// z = h(u) (a cylinder along the vertical axis) and photographed by an
// ideal pinhole. Book scenes carry a second profile for the right page and
// meet it at spine_u, forming the non-differentiable spine crease.
struct WarpScene {
    Raster flat;
    PolyCurve height_profile;
    std::optional<PolyCurve> height_profile_right;
    double spine_u = -1.0;
    Camera camera;
    std::uint32_t seed = 1;
    int margin_x = 64;
    int margin_y = 64;

    [[nodiscard]] bool is_book() const noexcept { return height_profile_right.has_value(); }

    [[nodiscard]] double height(double u) const {
        if (is_book() && u >= spine_u) return height_profile_right->eval(u);
        return height_profile.eval(u);
    }

    // Height with the abscissa clamped to the page extent: rays that leave
    // the page during inverse mapping must not see the polynomial's
    // extrapolation tails.
    [[nodiscard]] double height_clamped(double u) const {
        const double hi = is_book() ? height_profile_right->domain_hi : height_profile.domain_hi;
        return height(std::clamp(u, height_profile.domain_lo, hi));
    }
};

// Exact render of a scene: the distorted photo plus the projections of a
// uniform flat grid (per page in book mode) and of the spine endpoints.
struct GroundTruth {
    Raster image;  // distorted photo on a page-plus-margins canvas
    Raster flat;   // the undistorted content the pipeline should recover
    GridLattice mesh;
    std::optional<GridLattice> mesh_right;
    std::optional<Vec2> spine_top;
    std::optional<Vec2> spine_bottom;
    int margin_x = 0;
    int margin_y = 0;
};

namespace detail {

struct Projector {
    double cx, cy, dist, cos_t, sin_t, oy;

    Projector(const WarpScene& s)
        : cx((s.flat.width() - 1) / 2.0),
          cy((s.flat.height() - 1) / 2.0),
          dist(s.camera.distance),
          cos_t(std::cos(s.camera.tilt)),
          sin_t(std::sin(s.camera.tilt)),
          oy(s.camera.distance * std::tan(s.camera.tilt)) {}

    // World surface point -> screen coordinates (world 2-D frame, no margin).
    [[nodiscard]] Vec2 project(double u, double v, double z) const {
        const double qx = u - cx, qy = v - cy, qz = z - dist;
        const double xc = qx;
        const double yc = qy * cos_t + qz * sin_t;
        const double zc = qy * sin_t - qz * cos_t;
        if (zc <= 1e-9) throw std::runtime_error("invalid camera");
        return {dist * xc / zc + cx, dist * yc / zc + cy + oy};
    }

    // Screen point -> flat page coordinates, by intersecting the pixel ray
    // with the surface z = h(u). Bisection over the ray parameter; the
    // surface height is bounded so the bracket is immediate.
    [[nodiscard]] Vec2 unproject(const WarpScene& s, double sx, double sy, double min_h) const {
        const double dx = (sx - cx) / dist;
        const double dy = (sy - cy - oy) / dist;
        // camera basis: right (1,0,0), up (0,cos,sin), forward (0,sin,-cos)
        const double wx = dx;
        const double wy = dy * cos_t + sin_t;
        const double wz = dy * sin_t - cos_t;
        auto g = [&](double t) {
            const double pz = dist + t * wz;
            const double pu = cx + t * wx;
            return pz - s.height_clamped(pu);
        };
        double t_lo = 0.0;
        double t_hi = (dist - (min_h - 1.0)) / -wz;
        if (!(g(t_lo) > 0.0) || !(g(t_hi) < 0.0)) throw std::runtime_error("invalid camera");
        for (int it = 0; it < 64; ++it) {
            const double tm = 0.5 * (t_lo + t_hi);
            (g(tm) > 0.0 ? t_lo : t_hi) = tm;
        }
        const double t = 0.5 * (t_lo + t_hi);
        return {cx + t * wx, cy + t * wy};
    }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

// Renders the distorted photo by inverse-mapping every canvas pixel through
// the camera onto the surface, sampling the flat content bilinearly. Page
// edges are antialiased with a 3x3 subpixel grid. Deterministic for a fixed
// scene; the photo background is black so the page binarizes cleanly.
[[nodiscard]] inline GroundTruth render(const WarpScene& scene, const GridSpec& spec, unsigned jobs = 1) {
    const int W = scene.flat.width(), H = scene.flat.height();
    const detail::Projector proj(scene);

    double min_h = 0.0, max_h = 0.0;
    for (int i = 0; i <= 256; ++i) {
        const double u = (W - 1) * static_cast<double>(i) / 256.0;
        const double z = scene.height(u);
        min_h = std::min(min_h, z);
        max_h = std::max(max_h, z);
    }
    if (scene.camera.distance <= max_h) throw std::runtime_error("invalid camera");

    GroundTruth truth;
    truth.flat = scene.flat;
    truth.margin_x = scene.margin_x;
    truth.margin_y = scene.margin_y;

    const int cw = W + 2 * scene.margin_x, ch = H + 2 * scene.margin_y;
    truth.image = Raster(cw, ch, scene.flat.channels());
    const int channels = scene.flat.channels();

    parallel_for(static_cast<std::size_t>(ch), jobs, [&](std::size_t row) {
        const int oy = static_cast<int>(row);
        for (int ox = 0; ox < cw; ++ox) {
            auto page_uv = [&](double fx, double fy) {
                return proj.unproject(scene, ox + fx - scene.margin_x, oy + fy - scene.margin_y, min_h);
            };
            const Vec2 center = page_uv(0.0, 0.0);
            const bool inside = center.x >= -0.5 && center.x <= W - 0.5 && center.y >= -0.5 && center.y <= H - 0.5;
            const double border_d = std::min(std::min(center.x + 0.5, W - 0.5 - center.x),
                                             std::min(center.y + 0.5, H - 0.5 - center.y));
            if (std::abs(border_d) > 1.5) {  // far from the page edge
                if (!inside) continue;       // stays background black
                const auto v = sample_bilinear(scene.flat, center.x, center.y);
                for (int c = 0; c < channels; ++c) truth.image.set(ox, oy, c, quantize(v[c]));
                continue;
            }
            double acc[3] = {0, 0, 0};
            for (int sy = 0; sy < 3; ++sy)
                for (int sx = 0; sx < 3; ++sx) {
                    const Vec2 uv = page_uv((sx - 1) / 3.0, (sy - 1) / 3.0);
                    if (uv.x < -0.5 || uv.x > W - 0.5 || uv.y < -0.5 || uv.y > H - 0.5) continue;
                    const auto v = sample_bilinear(scene.flat, uv.x, uv.y);
                    for (int c = 0; c < channels; ++c) acc[c] += v[c];
                }
            for (int c = 0; c < channels; ++c) truth.image.set(ox, oy, c, quantize(acc[c] / 9.0));
        }
    });

    // Ground-truth meshes: exact projections of uniform flat grids.
    auto project_grid = [&](double u_lo, double u_hi) {
        GridLattice g;
        g.spec = spec;
        g.points.resize(static_cast<std::size_t>(spec.M) * spec.N);
        for (int j = 0; j < spec.N; ++j)
            for (int i = 0; i < spec.M; ++i) {
                const double u = u_lo + (u_hi - u_lo) * static_cast<double>(i) / (spec.M - 1);
                const double v = (H - 1) * static_cast<double>(j) / (spec.N - 1);
                const Vec2 p = proj.project(u, v, scene.height(u));
                g.points[static_cast<std::size_t>(j) * spec.M + i] = {p.x + scene.margin_x,
                                                                      p.y + scene.margin_y};
            }
        return g;
    };
    if (scene.is_book()) {
        truth.mesh = project_grid(0.0, scene.spine_u);
        truth.mesh_right = project_grid(scene.spine_u, W - 1.0);
        const Vec2 st = proj.project(scene.spine_u, 0.0, scene.height(scene.spine_u));
        const Vec2 sb = proj.project(scene.spine_u, H - 1.0, scene.height(scene.spine_u));
        truth.spine_top = Vec2{st.x + scene.margin_x, st.y + scene.margin_y};
        truth.spine_bottom = Vec2{sb.x + scene.margin_x, sb.y + scene.margin_y};
    } else {
        truth.mesh = project_grid(0.0, W - 1.0);
    }
    return truth;
}

// ---------------------------------------------------------------------------
// Test-page content and scene presets
// ---------------------------------------------------------------------------

// White page with black horizontal rules and pseudo-text glyph rows: the
// rules feed the line-straightness metric, the glyphs give SSIM texture.
[[nodiscard]] inline Raster make_test_page(int w, int h, std::uint32_t seed) {
    Raster page(w, h, 1, 255);
    std::mt19937 rng(seed);
    const int margin = std::max(24, w / 16);
    std::uniform_int_distribution<int> glyph_w(12, 30), gap_w(6, 18), drop(0, 9);

    int y = margin;
    bool rule = true;
    while (y < h - margin) {
        if (rule) {
            for (int yy = y; yy < std::min(y + 3, h - margin); ++yy)
                for (int x = margin; x < w - margin; ++x) page.set(x, yy, 0, 0);
            y += 3 + 24;
        } else {
            const int gh = 16;
            if (y + gh >= h - margin) break;
            int x = margin;
            while (x < w - margin) {
                const int gw = glyph_w(rng);
                const int gap = gap_w(rng);
                if (drop(rng) < 7) {
                    for (int yy = y; yy < y + gh; ++yy)
                        for (int xx = x; xx < std::min(x + gw, w - margin); ++xx) page.set(xx, yy, 0, 20);
                }
                x += gw + gap;
            }
            y += gh + 14;
        }
        rule = !rule;
    }
    return page;
}

namespace detail {

// Degree-4 least-squares stand-in for a half-cosine arch of height `amp`
// over [lo, hi], pinned near zero at both ends.
inline PolyCurve cosine_arch(double amp, double lo, double hi) {
    std::vector<Vec2> pts;
    pts.reserve(201);
    for (int i = 0; i <= 200; ++i) {
        const double t = static_cast<double>(i) / 200.0;
        pts.push_back({lo + (hi - lo) * t, amp * std::sin(3.14159265358979323846 * t)});
    }
    auto f = fit(pts, 4, Axis::x);
    return f.curve;
}

}  // namespace detail

// Zero-curvature page on a 1200x1600 canvas. Page dimensions are chosen
// commensurate with the default 30x30 grid so the identity pipeline stays
// resample-exact.
[[nodiscard]] inline WarpScene make_identity_scene(std::uint32_t seed = 7) {
    WarpScene s;
    s.flat = make_test_page(1016, 1306, seed);
    s.height_profile = PolyCurve({0.0, 0.0, 0.0}, Axis::x, 0.0, 1015.0);
    s.camera = {6000.0, 0.0};
    s.seed = seed;
    s.margin_x = 92;
    s.margin_y = 147;
    return s;
}

// Half-cosine cylinder: page width 1000, bump height 120, no tilt.
[[nodiscard]] inline WarpScene make_cylinder_scene(std::uint32_t seed = 11, double bump = 120.0,
                                                   double distance = 6000.0) {
    WarpScene s;
    s.flat = make_test_page(1000, 2000, seed);
    s.height_profile = detail::cosine_arch(bump, 0.0, 999.0);
    s.camera = {distance, 0.0};
    s.seed = seed;
    s.margin_x = 64;
    s.margin_y = 64;
    return s;
}

// Two-page book with a V-crease at the spine: each page is a cosine arch
// that returns to z = 0 at the spine, so the height field is continuous but
// not differentiable there.
[[nodiscard]] inline WarpScene make_book_scene(std::uint32_t seed = 13, double bump = 100.0,
                                               double distance = 1800.0) {
    WarpScene s;
    s.flat = make_test_page(1100, 1500, seed);
    s.spine_u = 550.0;
    s.height_profile = detail::cosine_arch(bump, 0.0, 550.0);
    s.height_profile_right = detail::cosine_arch(bump, 550.0, 1099.0);
    s.camera = {distance, 0.0};
    s.seed = seed;
    s.margin_x = 72;
    s.margin_y = 72;
    return s;
}

// Flat page photographed off-axis; exercises the global rectification.
[[nodiscard]] inline WarpScene make_tilted_scene(std::uint32_t seed = 17, double tilt = 0.12) {
    WarpScene s;
    s.flat = make_test_page(1000, 1400, seed);
    s.height_profile = PolyCurve({0.0, 0.0, 0.0}, Axis::x, 0.0, 999.0);
    s.camera = {4000.0, tilt};
    s.seed = seed;
    s.margin_x = 150;
    s.margin_y = 150;
    return s;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

[[nodiscard]] inline Raster resample_bilinear(const Raster& img, int w, int h) {
    Raster out(w, h, img.channels());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double u = (img.width() - 1) * static_cast<double>(x) / std::max(1, w - 1);
            const double v = (img.height() - 1) * static_cast<double>(y) / std::max(1, h - 1);
            const auto s = sample_bilinear(img, u, v);
            for (int c = 0; c < img.channels(); ++c) out.set(x, y, c, quantize(s[c]));
        }
    return out;
}

// Mean SSIM over all 8x8 windows (uniform weights, unit stride), computed
// on grayscale with the conventional stabilizing constants.
[[nodiscard]] inline double ssim(const Raster& a_in, const Raster& b_in) {
    const Raster a = a_in.channels() == 3 ? to_grayscale(a_in) : a_in;
    const Raster b = b_in.channels() == 3 ? to_grayscale(b_in) : b_in;
    if (!a.same_shape(b)) throw std::invalid_argument("ssim inputs must match in shape");
    const int w = a.width(), h = a.height(), win = 8;
    if (w < win || h < win) throw std::invalid_argument("ssim inputs too small");

    const int iw = w + 1, ih = h + 1;
    std::vector<double> sa(static_cast<std::size_t>(iw) * ih, 0.0), sb = sa, saa = sa, sbb = sa, sab = sa;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y + 1) * iw + (x + 1);
            const std::size_t up = i - iw, left = i - 1, diag = up - 1;
            const double va = a.at(x, y), vb = b.at(x, y);
            sa[i] = va + sa[up] + sa[left] - sa[diag];
            sb[i] = vb + sb[up] + sb[left] - sb[diag];
            saa[i] = va * va + saa[up] + saa[left] - saa[diag];
            sbb[i] = vb * vb + sbb[up] + sbb[left] - sbb[diag];
            sab[i] = va * vb + sab[up] + sab[left] - sab[diag];
        }
    auto box = [&](const std::vector<double>& s, int x, int y) {
        const std::size_t x1 = x + win, y1 = y + win;
        return s[y1 * iw + x1] - s[static_cast<std::size_t>(y) * iw + x1] - s[y1 * iw + x] +
               s[static_cast<std::size_t>(y) * iw + x];
    };

    const double c1 = (0.01 * 255) * (0.01 * 255);
    const double c2 = (0.03 * 255) * (0.03 * 255);
    const double n = win * win;
    double acc = 0.0;
    std::size_t count = 0;
    for (int y = 0; y + win <= h; ++y)
        for (int x = 0; x + win <= w; ++x) {
            const double ma = box(sa, x, y) / n, mb = box(sb, x, y) / n;
            const double va = box(saa, x, y) / n - ma * ma;
            const double vb = box(sbb, x, y) / n - mb * mb;
            const double cov = box(sab, x, y) / n - ma * mb;
            acc += ((2 * ma * mb + c1) * (2 * cov + c2)) /
                   ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++count;
        }
    return acc / static_cast<double>(count);
}

// Max deviation of the test-pattern rules from straight: dark connected
// components spanning at least half the image width are treated as rules;
// per column centroids are fitted with a least-squares line and the largest
// absolute residual over all rules is returned. Zero when no rule is found.
[[nodiscard]] inline double line_straightness(const Raster& img_in) {
    const Raster img = img_in.channels() == 3 ? to_grayscale(img_in) : img_in;
    const int w = img.width(), h = img.height();
    std::vector<int> label(static_cast<std::size_t>(w) * h, -1);
    auto dark = [&](int x, int y) { return img.at(x, y) < 128; };

    double worst = 0.0;
    int next = 0;
    std::vector<std::array<int, 2>> stack;
    for (int y0 = 0; y0 < h; ++y0)
        for (int x0 = 0; x0 < w; ++x0) {
            if (!dark(x0, y0) || label[static_cast<std::size_t>(y0) * w + x0] >= 0) continue;
            const int id = next++;
            stack.push_back({x0, y0});
            label[static_cast<std::size_t>(y0) * w + x0] = id;
            std::vector<std::array<int, 2>> pixels;
            while (!stack.empty()) {
                const auto [x, y] = stack.back();
                stack.pop_back();
                pixels.push_back({x, y});
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = x + dx, ny = y + dy;
                        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                        auto& l = label[static_cast<std::size_t>(ny) * w + nx];
                        if (l < 0 && dark(nx, ny)) {
                            l = id;
                            stack.push_back({nx, ny});
                        }
                    }
            }
            int min_x = w, max_x = 0;
            for (const auto& p : pixels) {
                min_x = std::min(min_x, p[0]);
                max_x = std::max(max_x, p[0]);
            }
            if (max_x - min_x + 1 < w / 2) continue;  // not a rule

            // per-column centroid, then line fit
            std::vector<double> sum_y(static_cast<std::size_t>(max_x - min_x + 1), 0.0);
            std::vector<int> cnt(sum_y.size(), 0);
            for (const auto& p : pixels) {
                sum_y[p[0] - min_x] += p[1];
                ++cnt[p[0] - min_x];
            }
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            int m = 0;
            for (std::size_t i = 0; i < cnt.size(); ++i) {
                if (!cnt[i]) continue;
                const double cx = static_cast<double>(i);
                const double cy = sum_y[i] / cnt[i];
                sx += cx;
                sy += cy;
                sxx += cx * cx;
                sxy += cx * cy;
                ++m;
            }
            if (m < 2) continue;
            const double denom = m * sxx - sx * sx;
            const double slope = denom != 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
            const double icept = (sy - slope * sx) / m;
            for (std::size_t i = 0; i < cnt.size(); ++i) {
                if (!cnt[i]) continue;
                const double cy = sum_y[i] / cnt[i];
                worst = std::max(worst, std::abs(cy - (slope * static_cast<double>(i) + icept)));
            }
        }
    return worst;
}

[[nodiscard]] inline double mesh_rmse(const GridLattice& a, const GridLattice& b) {
    if (a.points.size() != b.points.size()) throw std::invalid_argument("mesh size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        const Vec2 d = a.points[i] - b.points[i];
        acc += d.x * d.x + d.y * d.y;
    }
    return std::sqrt(acc / static_cast<double>(a.points.size()));
}

struct ScoreMetrics {
    double mesh_rmse = std::numeric_limits<double>::quiet_NaN();
    double ssim = 0.0;
    double line_straightness = 0.0;
};

[[nodiscard]] inline Raster crop(const Raster& img, int w, int h) {
    Raster out(w, h, img.channels());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < img.channels(); ++c) out.set(x, y, c, img.at(x, y, c));
    return out;
}

// Scores a pipeline result against the ground truth. Dimension mismatches
// of a few pixels are tile-rounding bookkeeping, not scale differences, and
// are aligned by origin-cropping to the common region; larger mismatches
// are resampled onto the flat content's dimensions. The mesh error is
// reported only when a recovered lattice is supplied.
[[nodiscard]] inline ScoreMetrics score(const Raster& result, const GroundTruth& truth,
                                        const GridLattice* recovered_mesh = nullptr) {
    Raster aligned = result;
    Raster reference = truth.flat;
    const int dw = std::abs(result.width() - truth.flat.width());
    const int dh = std::abs(result.height() - truth.flat.height());
    if (dw != 0 || dh != 0) {
        if (dw <= 4 && dh <= 4) {
            const int w = std::min(result.width(), truth.flat.width());
            const int h = std::min(result.height(), truth.flat.height());
            aligned = crop(result, w, h);
            reference = crop(truth.flat, w, h);
        } else {
            aligned = resample_bilinear(result, truth.flat.width(), truth.flat.height());
        }
    }
    if (aligned.channels() != reference.channels()) {
        if (aligned.channels() == 3) aligned = to_grayscale(aligned);
        if (reference.channels() == 3) reference = to_grayscale(reference);
    }
    ScoreMetrics m;
    m.ssim = ssim(aligned, reference);
    m.line_straightness = line_straightness(aligned);
    if (recovered_mesh) m.mesh_rmse = mesh_rmse(*recovered_mesh, truth.mesh);
    return m;
}

}  // namespace pageflat
