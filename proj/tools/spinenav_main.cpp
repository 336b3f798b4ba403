#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "spinenav/optimizer.hpp"
#include "spinenav/simulator.hpp"
#include "spinenav/stl_io.hpp"
#include "spinenav/voxel.hpp"

namespace {

using namespace spinenav;

std::string read_text_file(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

struct TrackInputs {
    CameraIntrinsics camera;
    std::vector<MarkerSpec> markers;
};

TrackInputs parse_marker_file(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("marker file is not valid JSON: ") + e.what());
    }
    TrackInputs inputs;
    try {
        const auto& cam = j.at("camera");
        inputs.camera.fx = cam.at("fx").get<double>();
        inputs.camera.fy = cam.at("fy").get<double>();
        inputs.camera.cx = cam.at("cx").get<double>();
        inputs.camera.cy = cam.at("cy").get<double>();
        inputs.camera.width = cam.at("width").get<int>();
        inputs.camera.height = cam.at("height").get<int>();
        for (const auto& marker : j.at("markers")) {
            inputs.markers.push_back(
                {marker.at("id").get<int>(), marker.at("side_length_mm").get<double>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("marker file field error: ") + e.what());
    }
    inputs.camera.validate();
    if (inputs.markers.empty()) {
        throw ConfigError("marker file lists no markers");
    }
    return inputs;
}

TrackerConfig parse_tracker_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("tracker config is not valid JSON: ") + e.what());
    }
    TrackerConfig config;
    try {
        config.t_miss = j.value("t_miss", 5);
        config.beta = j.value("beta", 0.5);
        config.auto_disable = j.value("auto_disable", true);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("tracker config field error: ") + e.what());
    }
    config.validate();
    return config;
}

void run_smooth(const std::string& input, int k, int iters, double alpha,
                const std::string& output, bool ascii) {
    const TriangleMesh mesh = read_stl_file(input);
    const SmoothingParams params{k, iters, alpha};
    params.validate(mesh.vertex_count());
    const TriangleMesh smoothed = laplacian_smooth(mesh, params);
    write_stl_file(smoothed, output, ascii ? StlFormat::Ascii : StlFormat::Binary);
    std::printf("vertices=%zu k=%d iters=%d alpha=%g\n", smoothed.vertex_count(), k, iters,
                alpha);
}

void run_dice(const std::string& path_a, const std::string& path_b, double resolution) {
    const TriangleMesh mesh_a = read_stl_file(path_a);
    const TriangleMesh mesh_b = read_stl_file(path_b);
    if (!(resolution > 0.0)) {
        throw ConfigError("resolution must be positive");
    }
    const Aabb bounds = union_bounds(mesh_bounds(mesh_a), mesh_bounds(mesh_b));
    const VoxelGrid grid_a = voxelize_surface(mesh_a, bounds, resolution);
    const VoxelGrid grid_b = voxelize_surface(mesh_b, bounds, resolution);
    std::printf("%.4f\n", dice_shell(grid_a, grid_b));
}

void run_optimize(const std::string& gt_path, const std::string& mri_path,
                  const std::string& config_path, const std::string& out_dir,
                  unsigned threads) {
    const TriangleMesh gt_mesh = read_stl_file(gt_path);
    const TriangleMesh mri_mesh = read_stl_file(mri_path);
    const GridSpec spec = GridSpec::from_json_text(read_text_file(config_path));
    const std::vector<GridResult> results = optimize(gt_mesh, mri_mesh, spec, threads);
    std::fprintf(stderr, "evaluated %zu parameter triplets\n", results.size());
    export_best(results, out_dir);
    int rank = 0;
    for (const GridResult& result : results) {
        if (!result.smoothed) {
            break;
        }
        ++rank;
        std::printf("rank %d dice %.4f k %d iters %d alpha %.1f\n", rank, result.dice,
                    result.k, result.iterations, result.alpha);
    }
}

void run_track(const std::string& observations_path, const std::string& markers_path,
               const std::string& config_path, const std::string& out_path) {
    const TrackInputs inputs = parse_marker_file(read_text_file(markers_path));
    TrackerConfig config;
    if (!config_path.empty()) {
        config = parse_tracker_config(read_text_file(config_path));
    }

    std::vector<MarkerObservation> observations;
    {
        const std::string text = read_text_file(observations_path);
        std::istringstream stream(text);
        std::string line;
        std::size_t line_number = 0;
        while (std::getline(stream, line)) {
            ++line_number;
            if (line.find_first_not_of(" \t\r") == std::string::npos) {
                continue;
            }
            observations.push_back(parse_observation_line(line, line_number));
        }
    }

    const std::vector<std::string> lines =
        replay_observation_stream(observations, config, inputs.markers, inputs.camera);
    std::string out;
    for (const std::string& line : lines) {
        out += line;
        out += '\n';
    }
    write_file_atomic(std::filesystem::path(out_path), out);
    std::fprintf(stderr, "replayed %zu observations into %zu records\n",
                 observations.size(), lines.size());
}

void run_simulate(const std::string& scenario_path, const std::string& report_path,
                  std::int64_t seed_override) {
    Scenario scenario = Scenario::from_json_text(read_text_file(scenario_path));
    if (seed_override >= 0) {
        scenario.seed = static_cast<std::uint64_t>(seed_override);
    }
    const AccuracyReport report = simulate_scenario(scenario);
    write_file_atomic(std::filesystem::path(report_path), report.to_json_text());
    std::printf("high-accuracy rate %.1f%%  average deviation %.2f mm\n",
                report.high_accuracy_rate_pct, report.average_deviation_mm);
}

int run_guarded(const std::function<void()>& fn) {
    try {
        fn();
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"MRI-to-AR spinal navigation toolkit: mesh smoothing, shell-Dice "
                 "scoring, smoothing grid search, marker tracking replay, and "
                 "needle-insertion trial simulation"};
    app.require_subcommand(1);
    std::function<void()> action;

    // smooth
    auto* smooth = app.add_subcommand("smooth", "Laplacian-smooth an STL mesh");
    {
        auto opts = std::make_shared<std::tuple<std::string, int, int, double, std::string, bool>>();
        smooth->add_option("--input", std::get<0>(*opts), "input STL path")->required();
        smooth->add_option("--k", std::get<1>(*opts), "neighbor count")->required();
        smooth->add_option("--iters", std::get<2>(*opts), "iteration count")->required();
        smooth->add_option("--alpha", std::get<3>(*opts), "smoothing weight in [0,1]")->required();
        smooth->add_option("--output", std::get<4>(*opts), "output STL path")->required();
        smooth->add_flag("--ascii", std::get<5>(*opts), "write ASCII STL instead of binary");
        smooth->callback([opts, &action] {
            action = [opts] {
                std::apply([](auto&&... a) { run_smooth(a...); }, *opts);
            };
        });
    }

    // dice
    auto* dice = app.add_subcommand("dice", "Surface-shell Dice between two STL meshes");
    {
        auto opts = std::make_shared<std::tuple<std::string, std::string, double>>();
        std::get<2>(*opts) = 1.0;
        dice->add_option("--a", std::get<0>(*opts), "first STL path")->required();
        dice->add_option("--b", std::get<1>(*opts), "second STL path")->required();
        dice->add_option("--resolution", std::get<2>(*opts), "voxel size in mm (default 1.0)");
        dice->callback([opts, &action] {
            action = [opts] {
                std::apply([](auto&&... a) { run_dice(a...); }, *opts);
            };
        });
    }

    // optimize
    auto* optimize_cmd =
        app.add_subcommand("optimize", "Grid-search smoothing parameters by shell Dice");
    {
        auto opts =
            std::make_shared<std::tuple<std::string, std::string, std::string, std::string, unsigned>>();
        std::get<4>(*opts) = 0;
        optimize_cmd->add_option("--gt", std::get<0>(*opts), "ground-truth STL path")->required();
        optimize_cmd->add_option("--mri", std::get<1>(*opts), "mesh to smooth (STL)")->required();
        optimize_cmd->add_option("--config", std::get<2>(*opts), "grid config JSON")->required();
        optimize_cmd->add_option("--out-dir", std::get<3>(*opts), "output directory")->required();
        optimize_cmd->add_option("--threads", std::get<4>(*opts),
                                 "worker threads (default: hardware)");
        optimize_cmd->callback([opts, &action] {
            action = [opts] {
                std::apply([](auto&&... a) { run_optimize(a...); }, *opts);
            };
        });
    }

    // track
    auto* track = app.add_subcommand("track", "Replay a marker observation stream");
    {
        auto opts =
            std::make_shared<std::tuple<std::string, std::string, std::string, std::string>>();
        track->add_option("--observations", std::get<0>(*opts), "observation JSONL path")
            ->required();
        track->add_option("--markers", std::get<1>(*opts), "camera + marker spec JSON")
            ->required();
        track->add_option("--config", std::get<2>(*opts),
                          "tracker config JSON (default: t_miss=5, beta=0.5, auto_disable)");
        track->add_option("--out", std::get<3>(*opts), "output pose stream JSONL path")
            ->required();
        track->callback([opts, &action] {
            action = [opts] {
                std::apply([](auto&&... a) { run_track(a...); }, *opts);
            };
        });
    }

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Run needle-insertion trials");
    {
        auto opts = std::make_shared<std::tuple<std::string, std::string, std::int64_t>>();
        std::get<2>(*opts) = -1;
        simulate->add_option("--scenario", std::get<0>(*opts), "scenario JSON path")->required();
        simulate->add_option("--report", std::get<1>(*opts), "output report JSON path")
            ->required();
        simulate->add_option("--seed", std::get<2>(*opts), "override the scenario seed");
        simulate->callback([opts, &action] {
            action = [opts] {
                std::apply([](auto&&... a) { run_simulate(a...); }, *opts);
            };
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    return run_guarded(action);
}
