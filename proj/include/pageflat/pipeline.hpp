#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pageflat/contour.hpp"
#include "pageflat/geometry.hpp"
#include "pageflat/mesh.hpp"
#include "pageflat/overlay.hpp"
#include "pageflat/parallel.hpp"
#include "pageflat/polyfit.hpp"
#include "pageflat/raster.hpp"
#include "pageflat/warp.hpp"

namespace pageflat {

// ---------------------------------------------------------------------------
// Logging (PAGEFLAT_LOG = error|warn|info|debug)
// ---------------------------------------------------------------------------

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

[[nodiscard]] inline LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("PAGEFLAT_LOG");
        if (!env) return LogLevel::warn;
        const std::string v(env);
        if (v == "error") return LogLevel::error;
        if (v == "info") return LogLevel::info;
        if (v == "debug") return LogLevel::debug;
        return LogLevel::warn;
    }();
    return level;
}

inline void log(LogLevel level, const std::string& msg) {
    if (level > log_level()) return;
    static constexpr const char* names[] = {"error", "warn", "info", "debug"};
    std::cerr << "[pageflat] " << names[static_cast<int>(level)] << ": " << msg << '\n';
}

// ---------------------------------------------------------------------------
// Configuration and errors
// ---------------------------------------------------------------------------

class PipelineError : public std::runtime_error {
public:
    PipelineError(std::string stage, const std::string& message)
        : std::runtime_error(stage + ": " + message), stage_(std::move(stage)) {}
    [[nodiscard]] const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

struct PipelineConfig {
    int degree = 4;                      // boundary fit order, 2..8
    int grid_m = 30;                     // lattice columns per surface
    int grid_n = 30;                     // lattice rows per surface
    std::optional<int> threshold;        // manual binarization override
    double kink_angle = 30.0 * 3.14159265358979323846 / 180.0;
    std::size_t kink_window = 5;
    double gamma_clamp_lo = 0.1;
    double gamma_clamp_hi = 10.0;
    double epsilon = 1e-2;               // |k| below this counts as flat (1/px)
    bool book_mode = true;
    bool curvature_as_printed = false;
    unsigned jobs = 0;                   // 0 = all cores
    bool debug_overlays = false;
    bool dump_tiles = false;

    void validate() const {
        if (degree < 2 || degree > 8) throw PipelineError("config", "degree must be in 2..8");
        if (grid_m < 2 || grid_n < 2) throw PipelineError("config", "grid must be at least 2x2");
        if (threshold && (*threshold < 0 || *threshold > 255))
            throw PipelineError("config", "threshold must be in 0..255");
        if (!(gamma_clamp_lo > 0.0) || gamma_clamp_hi < gamma_clamp_lo)
            throw PipelineError("config", "gamma clamp must satisfy 0 < lo <= hi");
        if (!(kink_angle > 0.0)) throw PipelineError("config", "kink angle must be positive");
        if (kink_window < 1) throw PipelineError("config", "kink window must be >= 1");
        if (!(epsilon >= 0.0)) throw PipelineError("config", "epsilon must be non-negative");
    }

    [[nodiscard]] unsigned effective_jobs() const { return jobs ? jobs : default_jobs(); }
};

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct SurfaceData {
    std::array<double, 4> fit_rms{};               // top, bottom, left, right
    std::array<std::vector<double>, 4> fit_coeffs;  // fitted boundary polynomials
    GridLattice lattice_rect;  // recovered lattice, rectified space
    GridLattice lattice_input; // same lattice mapped to input coords
    int gamma_clamped = 0;
    double side_tilt_deg = 0.0;  // worst left/right deviation from vertical
};

struct FlattenReport {
    int threshold = -1;
    std::array<Vec2, 4> quad_input{};
    std::array<Vec2, 4> quad_rect{};
    std::optional<Vec2> spine_top_rect, spine_bottom_rect;
    std::optional<Vec2> spine_top_input, spine_bottom_input;
    Homography rect_to_input;  // maps rectified coords back onto the photo
    int page_w = 0, page_h = 0, pad = 0;
    int grid_m = 0, grid_n = 0;
    std::vector<SurfaceData> surfaces;
    std::vector<std::pair<std::string, double>> timings_ms;
    double total_ms = 0.0;
    std::vector<std::string> warnings;
    int out_w = 0, out_h = 0;
};

struct FlattenResult {
    Raster output;
    FlattenReport report;
    std::vector<std::pair<std::string, Raster>> debug_images;  // name -> overlay
    std::vector<Tile> tiles;                                   // only with dump_tiles
};

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

namespace detail {

class StageClock {
public:
    explicit StageClock(FlattenReport& report) : report_(report), start_(clock::now()), stage_(start_) {}

    void lap(const std::string& name) {
        const auto now = clock::now();
        report_.timings_ms.emplace_back(name, std::chrono::duration<double, std::milli>(now - stage_).count());
        stage_ = now;
        log(LogLevel::info, "stage " + name + " done (" +
                                std::to_string(report_.timings_ms.back().second) + " ms)");
    }
    void finish() {
        report_.total_ms = std::chrono::duration<double, std::milli>(clock::now() - start_).count();
    }

private:
    using clock = std::chrono::steady_clock;
    FlattenReport& report_;
    clock::time_point start_;
    clock::time_point stage_;
};

[[nodiscard]] inline Raster mask_to_raster(const BinaryMask& mask) {
    Raster out(mask.width(), mask.height(), 1);
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) out.set(x, y, 0, mask.at(x, y) ? 255 : 0);
    return out;
}

[[nodiscard]] inline Raster hconcat(const Raster& a, const Raster& b) {
    if (a.height() != b.height() || a.channels() != b.channels())
        throw PipelineError("assemble", "surface outputs disagree on height or channels");
    Raster out(a.width() + b.width(), a.height(), a.channels());
    for (int y = 0; y < a.height(); ++y) {
        for (int x = 0; x < a.width(); ++x)
            for (int c = 0; c < a.channels(); ++c) out.set(x, y, c, a.at(x, y, c));
        for (int x = 0; x < b.width(); ++x)
            for (int c = 0; c < b.channels(); ++c) out.set(a.width() + x, y, c, b.at(x, y, c));
    }
    return out;
}

// Cyclic ROI strictly between two landmark indices, shrunk by `buffer` so
// the corner turns themselves stay out of the kink search.
[[nodiscard]] inline IndexRange roi_between(std::size_t from, std::size_t to, bool forward, std::size_t n,
                                            std::size_t buffer) {
    const std::size_t a = forward ? from : to;
    const std::size_t b = forward ? to : from;
    const std::size_t gap = (b + n - a) % n;
    if (gap <= 2 * buffer + 1) return {a, 0};
    return {(a + buffer) % n, gap - 2 * buffer + 1};
}

// Mean absolute slope of a left/right boundary fit, as degrees off vertical.
[[nodiscard]] inline double side_tilt_degrees(const PolyCurve& q) {
    double acc = 0.0;
    constexpr int samples = 32;
    for (int i = 0; i <= samples; ++i) {
        const double y = q.domain_lo + (q.domain_hi - q.domain_lo) * static_cast<double>(i) / samples;
        acc += std::abs(q.deriv(y, 1));
    }
    return std::atan(acc / (samples + 1)) * 180.0 / 3.14159265358979323846;
}

}  // namespace detail

// Runs the full flattening chain on a decoded image: grayscale, binarize,
// trace, quadrilateral, global rectification, spine landmarks and surface
// split (book mode), boundary fits, curvature series, lattice, block warp,
// recombination, and surface concatenation.
[[nodiscard]] inline FlattenResult run_flatten(const Raster& input, const PipelineConfig& cfg) {
    cfg.validate();
    const unsigned jobs = cfg.effective_jobs();
    const int M = cfg.grid_m, N = cfg.grid_n;

    FlattenResult result;
    FlattenReport& report = result.report;
    report.grid_m = M;
    report.grid_n = N;
    detail::StageClock clock(report);

    // --- grayscale -----------------------------------------------------
    const Raster gray = input.channels() == 3 ? to_grayscale(input) : input;
    clock.lap("grayscale");

    // --- binarize ------------------------------------------------------
    BinaryMask mask;
    try {
        if (cfg.threshold) {
            mask = threshold_mask(gray, *cfg.threshold);
            report.threshold = *cfg.threshold;
        } else {
            BinarizeResult r = binarize_otsu(gray);
            mask = std::move(r.mask);
            report.threshold = r.threshold;
        }
    } catch (const std::exception& e) {
        throw PipelineError("binarize", std::string(e.what()) + "; consider --threshold");
    }
    clock.lap("binarize");

    // --- trace + quadrilateral on the photo -----------------------------
    std::array<Vec2, 4> quad;
    {
        const std::vector<Contour> contours = trace_borders(mask);
        if (contours.empty())
            throw PipelineError("contour", "no foreground component; check contrast or --threshold");
        if (contours.size() > 1 &&
            std::abs(signed_area(contours[1].points)) > 0.05 * std::abs(signed_area(contours[0].points)))
            report.warnings.push_back("multiple large components; flattening the largest");
        try {
            quad = approx_quadrilateral(contours[0]);
        } catch (const std::exception& e) {
            throw PipelineError("contour", e.what());
        }
        if (cfg.debug_overlays) {
            Raster ov = to_rgb(input);
            draw_polyline(ov, contours[0].points, Rgb{255, 64, 64}, true);
            for (const Vec2& p : quad) draw_cross(ov, p, 12, Rgb{64, 255, 64});
            result.debug_images.emplace_back("contour", std::move(ov));
        }
    }
    report.quad_input = quad;
    clock.lap("trace");

    // --- global rectification (padded so bulges stay on canvas) ---------
    const double w_chord = (distance(quad[1], quad[0]) + distance(quad[2], quad[3])) / 2.0;
    const double h_chord = (distance(quad[3], quad[0]) + distance(quad[2], quad[1])) / 2.0;
    const int page_w = static_cast<int>(std::lround(w_chord)) + 1;
    const int page_h = static_cast<int>(std::lround(h_chord)) + 1;
    const int pad = static_cast<int>(std::lround(0.08 * std::max(page_w, page_h)));
    const int rect_w = page_w + 2 * pad, rect_h = page_h + 2 * pad;
    report.page_w = page_w;
    report.page_h = page_h;
    report.pad = pad;

    Homography rect_to_input;  // rectified coords -> photo coords
    try {
        const std::array<Vec2, 4> rect_pts{{{static_cast<double>(pad), static_cast<double>(pad)},
                                            {static_cast<double>(pad + page_w - 1), static_cast<double>(pad)},
                                            {static_cast<double>(pad + page_w - 1), static_cast<double>(pad + page_h - 1)},
                                            {static_cast<double>(pad), static_cast<double>(pad + page_h - 1)}}};
        rect_to_input = solve_homography(rect_pts, quad);
    } catch (const std::exception& e) {
        throw PipelineError("rectify", e.what());
    }
    report.rect_to_input = rect_to_input;
    const Raster rect_img =
        warp_full(input, [&](Vec2 p) { return rect_to_input.apply(p); }, rect_w, rect_h, jobs);
    const BinaryMask mask2 = threshold_mask(
        warp_full(detail::mask_to_raster(mask), [&](Vec2 p) { return rect_to_input.apply(p); }, rect_w,
                  rect_h, jobs),
        128);
    clock.lap("rectify");

    // --- landmarks on the rectified mask ---------------------------------
    Contour contour2;
    std::array<Vec2, 4> quad2;
    PageOutline outline;
    try {
        std::vector<Contour> contours2 = trace_borders(mask2);
        if (contours2.empty()) throw std::runtime_error("rectified mask is empty");
        contour2 = std::move(contours2[0]);
        quad2 = approx_quadrilateral(contour2);
        outline.corners = quad2;
    } catch (const PipelineError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError("contour", e.what());
    }
    report.quad_rect = quad2;

    if (cfg.book_mode) {
        const RingIndices ring =
            landmark_ring_indices(contour2, {quad2[0], quad2[3], quad2[2], quad2[1]});  // TL BL BR TR
        const std::size_t n = contour2.points.size();
        const std::size_t buffer = cfg.kink_window + 4;
        // ring: idx[0]=TL idx[1]=BL idx[2]=BR idx[3]=TR; top arc TR->TL,
        // bottom arc BL->BR (in screen-counterclockwise ring order).
        const IndexRange roi_top = detail::roi_between(ring.idx[3], ring.idx[0], ring.forward, n, buffer);
        const IndexRange roi_bottom = detail::roi_between(ring.idx[1], ring.idx[2], ring.forward, n, buffer);
        const double mid_x = (quad2[0].x + quad2[1].x + quad2[2].x + quad2[3].x) / 4.0;

        auto pick_spine = [&](const IndexRange& roi, const char* which) {
            const std::vector<std::size_t> kinks = find_kinks(contour2, cfg.kink_window, cfg.kink_angle, roi);
            if (kinks.empty())
                throw PipelineError("landmarks", std::string("no spine kink on the ") + which +
                                                     " edge; lower --kink-angle or use --mode single");
            std::size_t best = kinks[0];
            for (std::size_t k : kinks)
                if (std::abs(contour2.points[k].x - mid_x) < std::abs(contour2.points[best].x - mid_x))
                    best = k;
            return contour2.points[best];
        };
        outline.spine_top = pick_spine(roi_top, "top");
        outline.spine_bottom = pick_spine(roi_bottom, "bottom");
        report.spine_top_rect = outline.spine_top;
        report.spine_bottom_rect = outline.spine_bottom;
        report.spine_top_input = rect_to_input.apply(*outline.spine_top);
        report.spine_bottom_input = rect_to_input.apply(*outline.spine_bottom);
    }
    clock.lap("landmarks");

    // --- split + per-surface fits ----------------------------------------
    std::vector<SurfaceBoundary> surfaces;
    try {
        surfaces = split_surfaces(contour2, outline);
    } catch (const std::exception& e) {
        throw PipelineError("split", e.what());
    }

    struct SurfaceCurves {
        PolyCurve top, bottom, left, right;
    };
    std::vector<SurfaceCurves> curves(surfaces.size());
    report.surfaces.resize(surfaces.size());
    for (std::size_t s = 0; s < surfaces.size(); ++s) {
        try {
            FitResult ft = fit(surfaces[s].top, cfg.degree, Axis::x);
            FitResult fb = fit(surfaces[s].bottom, cfg.degree, Axis::x);
            FitResult fl = fit(surfaces[s].left, cfg.degree, Axis::y);
            FitResult fr = fit(surfaces[s].right, cfg.degree, Axis::y);
            report.surfaces[s].fit_rms = {ft.rms, fb.rms, fl.rms, fr.rms};
            for (double rms : report.surfaces[s].fit_rms)
                if (rms > 3.0) {
                    report.warnings.push_back("surface " + std::to_string(s) +
                                              " boundary fit residual above 3 px; consider --degree");
                    break;
                }
            // Opposite boundaries must share a domain before evolving.
            const double x_lo = std::min(ft.curve.domain_lo, fb.curve.domain_lo);
            const double x_hi = std::max(ft.curve.domain_hi, fb.curve.domain_hi);
            ft.curve.domain_lo = fb.curve.domain_lo = x_lo;
            ft.curve.domain_hi = fb.curve.domain_hi = x_hi;
            const double y_lo = std::min(fl.curve.domain_lo, fr.curve.domain_lo);
            const double y_hi = std::max(fl.curve.domain_hi, fr.curve.domain_hi);
            fl.curve.domain_lo = fr.curve.domain_lo = y_lo;
            fl.curve.domain_hi = fr.curve.domain_hi = y_hi;

            report.surfaces[s].fit_coeffs = {ft.curve.coeffs, fb.curve.coeffs, fl.curve.coeffs,
                                             fr.curve.coeffs};
            const double tilt = std::max(detail::side_tilt_degrees(fl.curve), detail::side_tilt_degrees(fr.curve));
            report.surfaces[s].side_tilt_deg = tilt;
            if (tilt > 5.0)
                report.warnings.push_back("surface " + std::to_string(s) + " side boundary deviates " +
                                          std::to_string(tilt) + " deg from vertical");
            curves[s] = {std::move(ft.curve), std::move(fb.curve), std::move(fl.curve), std::move(fr.curve)};
        } catch (const std::exception& e) {
            throw PipelineError("fit", e.what());
        }
    }
    clock.lap("fit");

    // --- series, lattice, blocks ------------------------------------------
    SeriesOptions series_opts;
    series_opts.epsilon = cfg.epsilon;
    series_opts.clamp_lo = cfg.gamma_clamp_lo;
    series_opts.clamp_hi = cfg.gamma_clamp_hi;
    series_opts.form = cfg.curvature_as_printed ? CurvatureForm::as_printed : CurvatureForm::standard;

    std::vector<GridLattice> lattices(surfaces.size());
    for (std::size_t s = 0; s < surfaces.size(); ++s) {
        try {
            const SurfaceCurves& sc = curves[s];
            const ScaleSeries series_x = build_series(sc.top, sc.bottom, M, series_opts);
            const ScaleSeries series_y = build_series(sc.left, sc.right, N, series_opts);
            report.surfaces[s].gamma_clamped = series_x.clamped + series_y.clamped;
            const std::vector<double> xs = interval_points(series_x, sc.top.domain_lo, sc.top.domain_hi);
            const std::vector<double> ys = interval_points(series_y, sc.left.domain_lo, sc.left.domain_hi);
            const CurveFamily vertical = evolve_family(sc.left, sc.right, std::max(4 * M, 64));
            const CurveFamily horizontal = evolve_family(sc.top, sc.bottom, std::max(4 * N, 64));
            lattices[s] = build_lattice(vertical, xs, horizontal, ys, jobs);

            report.surfaces[s].lattice_rect = lattices[s];
            GridLattice in_space = lattices[s];
            for (Vec2& p : in_space.points) p = rect_to_input.apply(p);
            report.surfaces[s].lattice_input = std::move(in_space);
        } catch (const std::exception& e) {
            throw PipelineError("mesh", e.what());
        }
    }
    if (cfg.debug_overlays) {
        Raster ov = to_rgb(rect_img);
        for (std::size_t s = 0; s < surfaces.size(); ++s) {
            draw_curve(ov, curves[s].top, Rgb{64, 128, 255});
            draw_curve(ov, curves[s].bottom, Rgb{64, 128, 255});
            draw_lattice(ov, lattices[s], Rgb{255, 160, 32});
        }
        if (outline.spine_top) draw_cross(ov, *outline.spine_top, 12, Rgb{255, 32, 255});
        if (outline.spine_bottom) draw_cross(ov, *outline.spine_bottom, 12, Rgb{255, 32, 255});
        result.debug_images.emplace_back("lattice", std::move(ov));
    }
    clock.lap("mesh");

    // --- warp + recombine ---------------------------------------------------
    const int cell_h = std::max(1, static_cast<int>(std::lround(static_cast<double>(page_h) / (N - 1))));
    std::vector<Raster> outputs;
    outputs.reserve(surfaces.size());
    for (std::size_t s = 0; s < surfaces.size(); ++s) {
        try {
            const double surface_w = curves[s].top.domain_hi - curves[s].top.domain_lo + 1.0;
            const int cell_w = std::max(1, static_cast<int>(std::lround(surface_w / (M - 1))));
            const TileLayout layout{cell_w, cell_h, M - 1, N - 1};
            const std::vector<QuadBlock> blocks = extract_blocks(lattices[s]);
            if (cfg.dump_tiles) {
                std::vector<Tile> tiles(blocks.size());
                parallel_for(blocks.size(), jobs, [&](std::size_t i) {
                    tiles[i] = Tile{blocks[i].k, warp_block(rect_img, blocks[i], layout)};
                });
                outputs.push_back(recombine(tiles, layout));
                for (Tile& t : tiles) result.tiles.push_back(std::move(t));
            } else {
                outputs.push_back(warp_and_recombine(rect_img, blocks, layout, jobs));
            }
        } catch (const std::exception& e) {
            throw PipelineError("warp", e.what());
        }
    }
    clock.lap("warp");

    // --- assemble ------------------------------------------------------------
    result.output = outputs.size() == 2 ? detail::hconcat(outputs[0], outputs[1]) : std::move(outputs[0]);
    report.out_w = result.output.width();
    report.out_h = result.output.height();
    clock.lap("assemble");
    clock.finish();
    return result;
}

}  // namespace pageflat
