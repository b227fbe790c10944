#pragma once

// Debug-overlay drawing onto rasters (no file IO here).

#include <algorithm>
#include <cmath>
#include <span>

#include "pageflat/geometry.hpp"
#include "pageflat/mesh.hpp"
#include "pageflat/polyfit.hpp"
#include "pageflat/raster.hpp"

namespace pageflat {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
};

[[nodiscard]] inline Raster to_rgb(const Raster& img) {
    if (img.channels() == 3) return img;
    Raster out(img.width(), img.height(), 3);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const std::uint8_t v = img.at(x, y, 0);
            out.set(x, y, 0, v);
            out.set(x, y, 1, v);
            out.set(x, y, 2, v);
        }
    return out;
}

inline void put_pixel(Raster& img, int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) return;
    img.set(x, y, 0, c.r);
    img.set(x, y, 1, c.g);
    img.set(x, y, 2, c.b);
}

inline void draw_line(Raster& img, Vec2 a, Vec2 b, Rgb c) {
    const double len = std::max(std::abs(b.x - a.x), std::abs(b.y - a.y));
    const int steps = std::max(1, static_cast<int>(std::ceil(len)));
    for (int i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) / steps;
        put_pixel(img, static_cast<int>(std::lround(a.x + (b.x - a.x) * t)),
                  static_cast<int>(std::lround(a.y + (b.y - a.y) * t)), c);
    }
}

inline void draw_cross(Raster& img, Vec2 p, int radius, Rgb c) {
    draw_line(img, {p.x - radius, p.y}, {p.x + radius, p.y}, c);
    draw_line(img, {p.x, p.y - radius}, {p.x, p.y + radius}, c);
}

inline void draw_polyline(Raster& img, std::span<const Vec2> pts, Rgb c, bool close = false) {
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) draw_line(img, pts[i], pts[i + 1], c);
    if (close && pts.size() > 2) draw_line(img, pts.back(), pts.front(), c);
}

inline void draw_curve(Raster& img, const PolyCurve& p, Rgb c, int samples = 256) {
    Vec2 prev{};
    for (int i = 0; i <= samples; ++i) {
        const double t = p.domain_lo + (p.domain_hi - p.domain_lo) * static_cast<double>(i) / samples;
        const Vec2 pt = p.axis == Axis::x ? Vec2{t, p.eval(t)} : Vec2{p.eval(t), t};
        if (i > 0) draw_line(img, prev, pt, c);
        prev = pt;
    }
}

inline void draw_lattice(Raster& img, const GridLattice& l, Rgb c) {
    for (int row = 0; row < l.spec.N; ++row)
        for (int col = 0; col + 1 < l.spec.M; ++col) draw_line(img, l.at(row, col), l.at(row, col + 1), c);
    for (int col = 0; col < l.spec.M; ++col)
        for (int row = 0; row + 1 < l.spec.N; ++row) draw_line(img, l.at(row, col), l.at(row + 1, col), c);
}

}  // namespace pageflat
