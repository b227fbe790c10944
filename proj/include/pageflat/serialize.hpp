#pragma once

// JSON encodings of the CLI-facing artifacts: scene specs, flatten reports,
// lattices, landmarks, and score metrics.

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "pageflat/mesh.hpp"
#include "pageflat/pipeline.hpp"
#include "pageflat/synth.hpp"

namespace pageflat {

using nlohmann::json;

inline json to_json(Vec2 p) { return json::array({p.x, p.y}); }

[[nodiscard]] inline json lattice_to_json(const GridLattice& l) {
    json pts = json::array();
    for (const Vec2& p : l.points) pts.push_back(to_json(p));
    return json{{"M", l.spec.M}, {"N", l.spec.N}, {"points", pts}};
}

[[nodiscard]] inline GridLattice lattice_from_json(const json& j) {
    GridLattice l;
    l.spec = GridSpec(j.at("M").get<int>(), j.at("N").get<int>());
    for (const auto& p : j.at("points")) l.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    if (l.points.size() != static_cast<std::size_t>(l.spec.M) * l.spec.N)
        throw std::runtime_error("lattice JSON point count mismatch");
    return l;
}

// ---------------------------------------------------------------------------
// Scene spec
// ---------------------------------------------------------------------------

[[nodiscard]] inline json scene_to_json(const WarpScene& s) {
    json j{{"width", s.flat.width()},
           {"height", s.flat.height()},
           {"seed", s.seed},
           {"distance", s.camera.distance},
           {"tilt", s.camera.tilt},
           {"margin_x", s.margin_x},
           {"margin_y", s.margin_y},
           {"profile_coeffs", s.height_profile.coeffs}};
    if (s.is_book()) {
        j["right_profile_coeffs"] = s.height_profile_right->coeffs;
        j["spine_x"] = s.spine_u;
    }
    return j;
}

// Page content is regenerated from (width, height, seed), so a scene file
// fully determines its render.
[[nodiscard]] inline WarpScene scene_from_json(const json& j) {
    WarpScene s;
    const int w = j.at("width").get<int>();
    const int h = j.at("height").get<int>();
    s.seed = j.value("seed", 1u);
    s.flat = make_test_page(w, h, s.seed);
    s.camera.distance = j.at("distance").get<double>();
    s.camera.tilt = j.value("tilt", 0.0);
    s.margin_x = j.value("margin_x", 64);
    s.margin_y = j.value("margin_y", 64);
    if (j.contains("right_profile_coeffs")) {
        s.spine_u = j.at("spine_x").get<double>();
        s.height_profile =
            PolyCurve(j.at("profile_coeffs").get<std::vector<double>>(), Axis::x, 0.0, s.spine_u);
        s.height_profile_right =
            PolyCurve(j.at("right_profile_coeffs").get<std::vector<double>>(), Axis::x, s.spine_u, w - 1.0);
    } else {
        s.height_profile = PolyCurve(j.at("profile_coeffs").get<std::vector<double>>(), Axis::x, 0.0, w - 1.0);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Pipeline config and report
// ---------------------------------------------------------------------------

[[nodiscard]] inline json config_to_json(const PipelineConfig& c) {
    json j{{"degree", c.degree},
           {"grid_m", c.grid_m},
           {"grid_n", c.grid_n},
           {"kink_angle", c.kink_angle},
           {"kink_window", c.kink_window},
           {"gamma_clamp_lo", c.gamma_clamp_lo},
           {"gamma_clamp_hi", c.gamma_clamp_hi},
           {"epsilon", c.epsilon},
           {"mode", c.book_mode ? "book" : "single"},
           {"curvature_as_printed", c.curvature_as_printed},
           {"jobs", c.jobs},
           {"debug_overlays", c.debug_overlays},
           {"dump_tiles", c.dump_tiles}};
    if (c.threshold) j["threshold"] = *c.threshold;
    return j;
}

[[nodiscard]] inline PipelineConfig config_from_json(const json& j) {
    PipelineConfig c;
    c.degree = j.value("degree", c.degree);
    c.grid_m = j.value("grid_m", c.grid_m);
    c.grid_n = j.value("grid_n", c.grid_n);
    c.kink_angle = j.value("kink_angle", c.kink_angle);
    c.kink_window = j.value("kink_window", c.kink_window);
    c.gamma_clamp_lo = j.value("gamma_clamp_lo", c.gamma_clamp_lo);
    c.gamma_clamp_hi = j.value("gamma_clamp_hi", c.gamma_clamp_hi);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.book_mode = j.value("mode", "book") == std::string("book");
    c.curvature_as_printed = j.value("curvature_as_printed", false);
    c.jobs = j.value("jobs", 0u);
    c.debug_overlays = j.value("debug_overlays", false);
    c.dump_tiles = j.value("dump_tiles", false);
    if (j.contains("threshold")) c.threshold = j.at("threshold").get<int>();
    return c;
}

[[nodiscard]] inline json report_to_json(const FlattenReport& r, const PipelineConfig& cfg) {
    json j;
    j["config"] = config_to_json(cfg);
    j["threshold"] = r.threshold;
    j["grid"] = {{"M", r.grid_m}, {"N", r.grid_n}};
    j["page"] = {{"w", r.page_w}, {"h", r.page_h}, {"pad", r.pad}};
    j["output"] = {{"w", r.out_w}, {"h", r.out_h}};
    j["quad_input"] = json::array();
    for (const Vec2& p : r.quad_input) j["quad_input"].push_back(to_json(p));
    j["quad_rect"] = json::array();
    for (const Vec2& p : r.quad_rect) j["quad_rect"].push_back(to_json(p));
    if (r.spine_top_input && r.spine_bottom_input)
        j["spine_input"] = json::array({to_json(*r.spine_top_input), to_json(*r.spine_bottom_input)});
    j["rect_to_input"] = r.rect_to_input.h;
    j["surfaces"] = json::array();
    for (const SurfaceData& s : r.surfaces) {
        j["surfaces"].push_back({{"fit_rms", s.fit_rms},
                                 {"fit_coeffs", s.fit_coeffs},
                                 {"gamma_clamped", s.gamma_clamped},
                                 {"side_tilt_deg", s.side_tilt_deg},
                                 {"lattice_rect", lattice_to_json(s.lattice_rect)},
                                 {"lattice_input", lattice_to_json(s.lattice_input)}});
    }
    j["timings_ms"] = json::object();
    double sum = 0.0;
    for (const auto& [name, ms] : r.timings_ms) {
        j["timings_ms"][name] = ms;
        sum += ms;
    }
    j["timings_ms"]["total"] = r.total_ms;
    j["timings_ms"]["stage_sum"] = sum;
    j["warnings"] = r.warnings;
    return j;
}

[[nodiscard]] inline json metrics_to_json(const ScoreMetrics& m) {
    json j{{"ssim", m.ssim}, {"line_straightness", m.line_straightness}};
    if (!std::isnan(m.mesh_rmse)) j["mesh_rmse"] = m.mesh_rmse;
    return j;
}

// Landmark export: {"corners": [[x,y]x4], "spine": [[x,y],[x,y]]}.
[[nodiscard]] inline json landmarks_to_json(const FlattenReport& r) {
    json corners = json::array();
    for (const Vec2& p : r.quad_input) corners.push_back(to_json(p));
    json j{{"corners", corners}};
    if (r.spine_top_input && r.spine_bottom_input)
        j["spine"] = json::array({to_json(*r.spine_top_input), to_json(*r.spine_bottom_input)});
    return j;
}

inline void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

[[nodiscard]] inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    json j;
    in >> j;
    return j;
}

}  // namespace pageflat
