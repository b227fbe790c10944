// pageflat CLI: flatten distorted page photos, generate synthetic scenes,
// and score results against their ground truth.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pageflat/image_io.hpp"
#include "pageflat/pipeline.hpp"
#include "pageflat/serialize.hpp"
#include "pageflat/synth.hpp"

namespace fs = std::filesystem;
using namespace pageflat;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitStage = 3;

struct GridOpt {
    int m = 30, n = 30;
};

void add_grid_option(CLI::App* cmd, GridOpt& grid) {
    cmd->add_option_function<std::string>(
           "--grid",
           [&grid](const std::string& s) {
               const auto x = s.find('x');
               if (x == std::string::npos) throw CLI::ValidationError("--grid expects MxN, e.g. 30x30");
               grid.m = std::stoi(s.substr(0, x));
               grid.n = std::stoi(s.substr(x + 1));
               if (grid.m < 2 || grid.n < 2) throw CLI::ValidationError("--grid needs M,N >= 2");
           },
           "Lattice sampling MxN (default 30x30)")
        ->type_name("MxN");
}

WarpScene scene_from_preset(const std::string& name) {
    if (name == "identity") return make_identity_scene();
    if (name == "cylinder") return make_cylinder_scene();
    if (name == "book") return make_book_scene();
    if (name == "tilted") return make_tilted_scene();
    throw std::runtime_error("unknown preset " + name + " (identity|cylinder|book|tilted)");
}

int run_flatten_cmd(const std::string& in_path, const std::string& out_path, const PipelineConfig& cfg,
                    const std::string& report_path, const std::string& debug_dir) {
    Raster input;
    try {
        input = read_image(in_path);
    } catch (const std::exception& e) {
        std::cerr << "error in stage io: " << e.what() << '\n';
        return kExitUsage;
    }

    FlattenResult result = run_flatten(input, cfg);

    try {
        write_image(result.output, out_path);
        if (!report_path.empty()) write_json_file(report_to_json(result.report, cfg), report_path);
        if (!debug_dir.empty()) {
            fs::create_directories(debug_dir);
            for (const auto& [name, img] : result.debug_images)
                write_png(img, (fs::path(debug_dir) / (name + ".png")).string());
            write_json_file(landmarks_to_json(result.report),
                            (fs::path(debug_dir) / "landmarks.json").string());
            json lattices = json::array();
            for (const SurfaceData& s : result.report.surfaces)
                lattices.push_back(lattice_to_json(s.lattice_input));
            write_json_file(lattices, (fs::path(debug_dir) / "lattice.json").string());
            if (cfg.dump_tiles) {
                fs::create_directories(fs::path(debug_dir) / "tiles");
                for (const Tile& t : result.tiles) {
                    char name[32];
                    std::snprintf(name, sizeof name, "tile_%05zu.png", t.k);
                    write_png(t.image, (fs::path(debug_dir) / "tiles" / name).string());
                }
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error in stage io: " << e.what() << '\n';
        return kExitUsage;
    }
    std::cout << "flattened " << in_path << " -> " << out_path << " (" << result.output.width() << "x"
              << result.output.height() << ", " << result.report.total_ms << " ms)\n";
    for (const std::string& w : result.report.warnings) std::cerr << "warning: " << w << '\n';
    return 0;
}

int run_synth_cmd(const WarpScene& scene, const GridOpt& grid, const std::string& out_dir, unsigned jobs) {
    const GroundTruth truth = render(scene, GridSpec(grid.m, grid.n), jobs ? jobs : default_jobs());
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    write_png(truth.flat, (dir / "flat.png").string());
    write_png(truth.image, (dir / "image.png").string());
    write_json_file(scene_to_json(scene), (dir / "scene.json").string());

    json t{{"margin_x", truth.margin_x}, {"margin_y", truth.margin_y}, {"mesh", lattice_to_json(truth.mesh)}};
    if (truth.mesh_right) t["mesh_right"] = lattice_to_json(*truth.mesh_right);
    if (truth.spine_top && truth.spine_bottom)
        t["spine"] = json::array({to_json(*truth.spine_top), to_json(*truth.spine_bottom)});
    write_json_file(t, (dir / "truth.json").string());
    std::cout << "rendered scene -> " << out_dir << " (photo " << truth.image.width() << "x"
              << truth.image.height() << ")\n";
    return 0;
}

int run_score_cmd(const std::string& result_path, const std::string& truth_dir, const std::string& out_path,
                  const std::string& lattice_report, int surface_index) {
    const fs::path dir(truth_dir);
    const Raster result = read_image(result_path);

    GroundTruth truth;
    truth.flat = read_png((dir / "flat.png").string());
    const json t = read_json_file((dir / "truth.json").string());
    truth.margin_x = t.value("margin_x", 0);
    truth.margin_y = t.value("margin_y", 0);
    truth.mesh = lattice_from_json(surface_index == 1 && t.contains("mesh_right") ? t.at("mesh_right")
                                                                                  : t.at("mesh"));

    std::optional<GridLattice> recovered;
    if (!lattice_report.empty()) {
        const json r = read_json_file(lattice_report);
        const auto& surfaces = r.at("surfaces");
        if (surface_index < 0 || surface_index >= static_cast<int>(surfaces.size()))
            throw std::runtime_error("--surface index out of range for report");
        recovered = lattice_from_json(surfaces.at(surface_index).at("lattice_input"));
    }

    const ScoreMetrics m = score(result, truth, recovered ? &*recovered : nullptr);
    const json out = metrics_to_json(m);
    if (!out_path.empty()) write_json_file(out, out_path);
    std::cout << out.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pageflat: flatten curved document pages from single photos"};
    app.require_subcommand(1);

    // flatten
    auto* cmd_flatten = app.add_subcommand("flatten", "Flatten a distorted page photo");
    std::string in_path, out_path = "flattened.png", report_path, debug_dir;
    PipelineConfig cfg;
    GridOpt fgrid;
    double kink_angle_deg = 30.0;
    std::pair<double, double> clamp{0.1, 10.0};
    std::string mode = "book";
    cmd_flatten->add_option("input", in_path, "Input photo (PNG or JPEG)")->required();
    cmd_flatten->add_option("-o,--output", out_path, "Output image path (PNG default, JPEG by suffix)");
    cmd_flatten->add_option("--degree", cfg.degree, "Boundary fit polynomial degree (2..8)")
        ->check(CLI::Range(2, 8));
    add_grid_option(cmd_flatten, fgrid);
    int threshold = -1;
    cmd_flatten->add_option("--threshold", threshold, "Manual binarization threshold 0..255 (default: Otsu)")
        ->check(CLI::Range(0, 255));
    cmd_flatten->add_option("--mode", mode, "book: split at the spine; single: one surface")
        ->check(CLI::IsMember({"book", "single"}));
    cmd_flatten->add_option("--kink-angle", kink_angle_deg, "Spine kink threshold in degrees");
    cmd_flatten->add_option("--kink-window", cfg.kink_window, "Kink chord span in contour points");
    cmd_flatten->add_option("--gamma-clamp", clamp, "Scale factor clamp: lo hi");
    cmd_flatten->add_option("--epsilon", cfg.epsilon, "Curvature-difference flat guard (1/px)");
    cmd_flatten->add_flag("--curvature-as-printed", cfg.curvature_as_printed,
                          "Use the literal curvature denominator (comparison only)");
    cmd_flatten->add_option("--jobs", cfg.jobs, "Worker threads (0 = all cores)");
    cmd_flatten->add_option("--report", report_path, "Write the run report JSON here");
    cmd_flatten->add_option("--debug-overlay", debug_dir, "Write overlay PNGs and landmark/lattice JSON here");
    cmd_flatten->add_flag("--dump-tiles", cfg.dump_tiles, "Also write per-block tiles (needs --debug-overlay)");

    // synth
    auto* cmd_synth = app.add_subcommand("synth", "Render a synthetic scene with ground truth");
    std::string scene_path, synth_dir = "truth", preset;
    GridOpt sgrid;
    unsigned synth_jobs = 0;
    cmd_synth->add_option("scene", scene_path, "Scene spec JSON (omit when using --preset)");
    cmd_synth->add_option("-o,--output", synth_dir, "Output directory");
    cmd_synth->add_option("--preset", preset, "identity | cylinder | book | tilted");
    add_grid_option(cmd_synth, sgrid);
    cmd_synth->add_option("--jobs", synth_jobs, "Worker threads (0 = all cores)");

    // score
    auto* cmd_score = app.add_subcommand("score", "Score a result against a truth bundle");
    std::string score_result, score_truth, score_out = "metrics.json", score_lattice;
    int score_surface = 0;
    cmd_score->add_option("result", score_result, "Flattened image")->required();
    cmd_score->add_option("truth", score_truth, "Truth bundle directory from `pageflat synth`")->required();
    cmd_score->add_option("-o,--output", score_out, "Metrics JSON path");
    cmd_score->add_option("--lattice", score_lattice, "Flatten report JSON with the recovered lattice");
    cmd_score->add_option("--surface", score_surface, "Surface index in the report (book: 0 left, 1 right)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (cmd_flatten->parsed()) {
            if (threshold >= 0) cfg.threshold = threshold;
            cfg.grid_m = fgrid.m;
            cfg.grid_n = fgrid.n;
            cfg.kink_angle = kink_angle_deg * 3.14159265358979323846 / 180.0;
            cfg.gamma_clamp_lo = clamp.first;
            cfg.gamma_clamp_hi = clamp.second;
            cfg.book_mode = mode == "book";
            cfg.debug_overlays = !debug_dir.empty();
            return run_flatten_cmd(in_path, out_path, cfg, report_path, debug_dir);
        }
        if (cmd_synth->parsed()) {
            if (scene_path.empty() && preset.empty())
                throw std::runtime_error("synth needs a scene JSON or --preset");
            const WarpScene scene =
                preset.empty() ? scene_from_json(read_json_file(scene_path)) : scene_from_preset(preset);
            return run_synth_cmd(scene, sgrid, synth_dir, synth_jobs);
        }
        if (cmd_score->parsed())
            return run_score_cmd(score_result, score_truth, score_out, score_lattice, score_surface);
    } catch (const PipelineError& e) {
        std::cerr << "error in stage " << e.stage() << ": " << e.what() << '\n';
        return kExitStage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return 0;
}
