#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pageflat/geometry.hpp"
#include "pageflat/mesh.hpp"
#include "pageflat/numeric.hpp"
#include "pageflat/parallel.hpp"
#include "pageflat/raster.hpp"

namespace pageflat {

// 3x3 projective map, row-major, normalized to h9 = 1. apply() maps a point
// of the map's source plane: (x', y') = (h1 x + h2 y + h3, h4 x + h5 y +
// h6) / t with t = h7 x + h8 y + h9.
struct Homography {
    std::array<double, 9> h{1, 0, 0, 0, 1, 0, 0, 0, 1};

    [[nodiscard]] Vec2 apply(Vec2 p) const {
        const double t = h[6] * p.x + h[7] * p.y + h[8];
        return {(h[0] * p.x + h[1] * p.y + h[2]) / t, (h[3] * p.x + h[4] * p.y + h[5]) / t};
    }

    [[nodiscard]] double det() const noexcept {
        return h[0] * (h[4] * h[8] - h[5] * h[7]) - h[1] * (h[3] * h[8] - h[5] * h[6]) +
               h[2] * (h[3] * h[7] - h[4] * h[6]);
    }

    [[nodiscard]] Homography inverse() const {
        const double d = det();
        if (std::abs(d) < 1e-12) throw std::runtime_error("no homography");
        std::array<double, 9> a{
            (h[4] * h[8] - h[5] * h[7]) / d, (h[2] * h[7] - h[1] * h[8]) / d, (h[1] * h[5] - h[2] * h[4]) / d,
            (h[5] * h[6] - h[3] * h[8]) / d, (h[0] * h[8] - h[2] * h[6]) / d, (h[2] * h[3] - h[0] * h[5]) / d,
            (h[3] * h[7] - h[4] * h[6]) / d, (h[1] * h[6] - h[0] * h[7]) / d, (h[0] * h[4] - h[1] * h[3]) / d};
        if (std::abs(a[8]) > 1e-12)
            for (double& v : a) v /= a[8];
        return {a};
    }
};

// Solves the 8-unknown system of the four correspondences src[i] -> dst[i]
// by Gaussian elimination with partial pivoting, h9 fixed at 1. The result
// is verified against the defining correspondences before returning.
[[nodiscard]] inline Homography solve_homography(std::span<const Vec2, 4> src, std::span<const Vec2, 4> dst) {
    if (has_collinear_triple(src, 1e-9) || has_collinear_triple(dst, 1e-9))
        throw std::runtime_error("degenerate correspondence");

    std::vector<double> a(64, 0.0), b(8, 0.0);
    for (int i = 0; i < 4; ++i) {
        const double x = src[i].x, y = src[i].y;
        const double xp = dst[i].x, yp = dst[i].y;
        double* r0 = a.data() + (2 * i) * 8;
        double* r1 = a.data() + (2 * i + 1) * 8;
        r0[0] = x; r0[1] = y; r0[2] = 1; r0[6] = -xp * x; r0[7] = -xp * y;
        r1[3] = x; r1[4] = y; r1[5] = 1; r1[6] = -yp * x; r1[7] = -yp * y;
        b[2 * i] = xp;
        b[2 * i + 1] = yp;
    }
    std::vector<double> x;
    try {
        x = detail::solve_linear(std::move(a), std::move(b), 8);
    } catch (const std::runtime_error&) {
        throw std::runtime_error("no homography");
    }
    Homography out{{x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7], 1.0}};
    if (std::abs(out.det()) < 1e-12) throw std::runtime_error("no homography");
    for (int i = 0; i < 4; ++i)
        if (distance(out.apply(src[i]), dst[i]) > 1e-6) throw std::runtime_error("no homography");
    return out;
}

// ---------------------------------------------------------------------------
// Full-image inverse warp
// ---------------------------------------------------------------------------

// Renders out_w x out_h by pulling every output pixel center through `map`
// (output coords -> source coords) and sampling the source bilinearly.
template <typename MapFn>
[[nodiscard]] Raster warp_full(const Raster& img, MapFn&& map, int out_w, int out_h, unsigned jobs = 1,
                               SampleOptions opt = {}) {
    Raster out(out_w, out_h, img.channels());
    parallel_for(static_cast<std::size_t>(out_h), jobs, [&](std::size_t row) {
        const int py = static_cast<int>(row);
        for (int px = 0; px < out_w; ++px) {
            const Vec2 s = map(Vec2{static_cast<double>(px), static_cast<double>(py)});
            const auto v = sample_bilinear(img, s.x, s.y, opt);
            for (int c = 0; c < img.channels(); ++c) out.set(px, py, c, quantize(v[c]));
        }
    });
    return out;
}

// Maps the quadrilateral `corners` (TL, TR, BR, BL) onto the full out_w x
// out_h rectangle: the global perspective correction.
[[nodiscard]] inline Raster rectify_global(const Raster& img, std::span<const Vec2, 4> corners, int out_w,
                                           int out_h, unsigned jobs = 1) {
    if (out_w < 2 || out_h < 2) throw std::invalid_argument("rectified size too small");
    const std::array<Vec2, 4> rect{{{0.0, 0.0},
                                    {static_cast<double>(out_w - 1), 0.0},
                                    {static_cast<double>(out_w - 1), static_cast<double>(out_h - 1)},
                                    {0.0, static_cast<double>(out_h - 1)}}};
    const Homography h = solve_homography(rect, corners);
    return warp_full(img, [&](Vec2 p) { return h.apply(p); }, out_w, out_h, jobs);
}

// ---------------------------------------------------------------------------
// Block warping and recombination
// ---------------------------------------------------------------------------

// Congruent target cell geometry. Output raster is (cols*cell_w) x
// (rows*cell_h) with row 0 at the image top.
struct TileLayout {
    int cell_w = 0;
    int cell_h = 0;
    int cols = 0;  // M - 1
    int rows = 0;  // N - 1
};

// Inverse-maps one lattice block to its congruent cell_w x cell_h tile. The
// continuous cell [0,cell_w]x[0,cell_h] maps onto the quad, so adjacent
// tiles consume adjacent source regions without overlap, and an axis-
// aligned integer block reproduces the source crop exactly.
[[nodiscard]] inline Raster warp_block(const Raster& img, const QuadBlock& block, const TileLayout& layout) {
    const double w = layout.cell_w, h = layout.cell_h;
    const std::array<Vec2, 4> cell{{{0.0, 0.0}, {w, 0.0}, {0.0, h}, {w, h}}};
    const Homography hm = solve_homography(cell, block.corners);
    return warp_full(img, [&](Vec2 p) { return hm.apply(p); }, layout.cell_w, layout.cell_h, 1);
}

struct Tile {
    std::size_t k = 0;  // block index in the source lattice
    Raster image;
};

// Splices the tiles back into one rectangle: block k lands at column
// (k mod M), row floor(k / M). With lattice row 0 already at the image top
// the placement is direct (the origin conventions coincide).
[[nodiscard]] inline Raster recombine(std::span<const Tile> tiles, const TileLayout& layout) {
    const std::size_t expected = static_cast<std::size_t>(layout.cols) * layout.rows;
    if (tiles.size() != expected) throw std::runtime_error("tile mismatch: expected " + std::to_string(expected) +
                                                           " tiles, got " + std::to_string(tiles.size()));
    const std::size_t M = static_cast<std::size_t>(layout.cols) + 1;
    const int channels = tiles.empty() ? 1 : tiles[0].image.channels();
    Raster out(layout.cols * layout.cell_w, layout.rows * layout.cell_h, channels);
    std::vector<std::uint8_t> seen(expected, 0);
    for (const Tile& t : tiles) {
        const std::size_t col = t.k % M;
        const std::size_t row = t.k / M;
        if (col >= static_cast<std::size_t>(layout.cols) || row >= static_cast<std::size_t>(layout.rows))
            throw std::runtime_error("tile mismatch: bad block index " + std::to_string(t.k));
        const std::size_t slot = row * layout.cols + col;
        if (seen[slot]) throw std::runtime_error("tile mismatch: duplicate block index " + std::to_string(t.k));
        seen[slot] = 1;
        if (t.image.width() != layout.cell_w || t.image.height() != layout.cell_h ||
            t.image.channels() != channels)
            throw std::runtime_error("tile mismatch: bad tile shape at block " + std::to_string(t.k));
        const int ox = static_cast<int>(col) * layout.cell_w;
        const int oy = static_cast<int>(row) * layout.cell_h;
        for (int y = 0; y < layout.cell_h; ++y)
            for (int x = 0; x < layout.cell_w; ++x)
                for (int c = 0; c < channels; ++c) out.set(ox + x, oy + y, c, t.image.at(x, y, c));
    }
    for (std::uint8_t s : seen)
        if (!s) throw std::runtime_error("tile mismatch: missing tile");
    return out;
}

// Warps every block against the source image in parallel and recombines.
[[nodiscard]] inline Raster warp_and_recombine(const Raster& img, std::span<const QuadBlock> blocks,
                                               const TileLayout& layout, unsigned jobs = 1) {
    std::vector<Tile> tiles(blocks.size());
    parallel_for(blocks.size(), jobs, [&](std::size_t i) {
        tiles[i] = Tile{blocks[i].k, warp_block(img, blocks[i], layout)};
    });
    return recombine(tiles, layout);
}

}  // namespace pageflat
