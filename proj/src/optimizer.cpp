#include "spinenav/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <mutex>
#include <string>
#include <thread>

#include <json.hpp>

#include "spinenav/errors.hpp"
#include "spinenav/stl_io.hpp"
#include "spinenav/voxel.hpp"

namespace spinenav {

namespace {

template <typename T>
void sort_unique(std::vector<T>& values) {
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
}

bool result_before(const GridResult& a, const GridResult& b) {
    if (a.dice != b.dice) {
        return a.dice > b.dice;
    }
    if (a.k != b.k) {
        return a.k < b.k;
    }
    if (a.iterations != b.iterations) {
        return a.iterations < b.iterations;
    }
    return a.alpha < b.alpha;
}

// Runs one (k, alpha) column of the grid: iterates once up to max(I),
// scoring at every checkpoint in I. The trajectory is the exact prefix a
// fresh laplacian_smooth run would take, so checkpointed scores equal
// independently recomputed ones bit for bit.
void evaluate_column(const TriangleMesh& mri_mesh, const NeighborGraph& graph,
                     double alpha, const std::vector<int>& iteration_values,
                     const Aabb& bounds, double resolution_mm,
                     const VoxelGrid& gt_grid, int k,
                     GridResult* out_results) {
    TriangleMesh work;
    work.vertices = mri_mesh.vertices;
    work.faces = mri_mesh.faces;
    std::vector<Vec3> scratch;
    int done = 0;
    for (std::size_t ii = 0; ii < iteration_values.size(); ++ii) {
        const int target = iteration_values[ii];
        laplacian_iterate(work.vertices, scratch, graph, alpha, target - done);
        done = target;
        const VoxelGrid sm_grid = voxelize_surface(work, bounds, resolution_mm);
        out_results[ii] = GridResult{dice_shell(gt_grid, sm_grid), k, target, alpha, nullptr};
    }
}

} // namespace

void GridSpec::validate() {
    sort_unique(k_values);
    sort_unique(iteration_values);
    sort_unique(alpha_values);
    if (k_values.empty() || iteration_values.empty() || alpha_values.empty()) {
        throw ConfigError("grid spec requires non-empty k, iterations, and alpha sets");
    }
    for (const int k : k_values) {
        if (k < 1) {
            throw ConfigError("grid k values must be >= 1");
        }
    }
    for (const int it : iteration_values) {
        if (it < 0) {
            throw ConfigError("grid iteration values must be >= 0");
        }
    }
    for (const double a : alpha_values) {
        if (!(a >= 0.0 && a <= 1.0)) {
            throw ConfigError("grid alpha values must lie in [0, 1]");
        }
    }
    if (!(resolution_mm > 0.0)) {
        throw ConfigError("grid resolution_mm must be positive");
    }
    if (top_n < 1) {
        throw ConfigError("grid top_n must be >= 1");
    }
}

GridSpec GridSpec::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("grid config is not valid JSON: ") + e.what());
    }
    GridSpec spec;
    try {
        spec.k_values = j.at("k").get<std::vector<int>>();
        spec.iteration_values = j.at("iterations").get<std::vector<int>>();
        spec.alpha_values = j.at("alpha").get<std::vector<double>>();
        spec.resolution_mm = j.value("resolution_mm", 1.0);
        spec.top_n = j.value("top_n", 5);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("grid config field error: ") + e.what());
    }
    spec.validate();
    return spec;
}

GridSpec GridSpec::evaluation_grid() {
    GridSpec spec;
    spec.k_values = {8, 16, 32, 64, 128};
    spec.iteration_values = {1, 5, 10, 20, 50};
    spec.alpha_values = {0.1, 0.3, 0.5, 0.7, 1.0};
    spec.resolution_mm = 1.0;
    spec.top_n = 5;
    return spec;
}

std::vector<GridResult> optimize(const TriangleMesh& gt_mesh, const TriangleMesh& mri_mesh,
                                 const GridSpec& spec_in, unsigned threads) {
    GridSpec spec = spec_in;
    spec.validate();
    validate_mesh(gt_mesh);
    validate_mesh(mri_mesh);
    const int k_max = spec.k_values.back();
    SmoothingParams probe{k_max, 0, 0.0};
    probe.validate(mri_mesh.vertex_count());

    // Shared bounds from the two input meshes; smoothed meshes stay inside
    // the convex hull of the mri mesh, so these bounds keep containing them.
    const Aabb bounds = union_bounds(mesh_bounds(gt_mesh), mesh_bounds(mri_mesh));
    const VoxelGrid gt_grid = voxelize_surface(gt_mesh, bounds, spec.resolution_mm);

    // Neighbor rows are sorted by (distance, index), so the k-NN lists for
    // every smaller k are exact prefixes of the k_max graph.
    const NeighborGraph full_graph = build_knn_graph(mri_mesh, k_max);
    std::vector<NeighborGraph> graphs(spec.k_values.size());
    const std::size_t n_vertices = mri_mesh.vertex_count();
    for (std::size_t ki = 0; ki < spec.k_values.size(); ++ki) {
        const int k = spec.k_values[ki];
        graphs[ki].k = k;
        graphs[ki].neighbors.resize(n_vertices * static_cast<std::size_t>(k));
        for (std::size_t v = 0; v < n_vertices; ++v) {
            const auto row = full_graph.of(v);
            std::copy_n(row.begin(), k, graphs[ki].neighbors.begin() +
                                            static_cast<std::size_t>(v) * k);
        }
    }

    const std::size_t n_iters = spec.iteration_values.size();
    const std::size_t n_alphas = spec.alpha_values.size();
    const std::size_t n_columns = spec.k_values.size() * n_alphas;
    std::vector<GridResult> results(n_columns * n_iters);

    unsigned worker_count = threads != 0 ? threads : std::thread::hardware_concurrency();
    worker_count = std::max(1u, std::min<unsigned>(worker_count, n_columns));

    std::atomic<std::size_t> next_column{0};
    std::atomic<bool> failed{false};
    std::string failure_message;
    std::mutex failure_mutex;

    const auto worker = [&]() {
        for (;;) {
            const std::size_t column = next_column.fetch_add(1);
            if (column >= n_columns || failed.load()) {
                return;
            }
            const std::size_t ki = column / n_alphas;
            const std::size_t ai = column % n_alphas;
            const int k = spec.k_values[ki];
            const double alpha = spec.alpha_values[ai];
            try {
                // Result layout is k-major, then iterations, then alpha --
                // matching the tie-break order of the final sort.
                GridResult* out = results.data() + (ki * n_iters) * n_alphas + ai;
                std::vector<GridResult> column_results(n_iters);
                evaluate_column(mri_mesh, graphs[ki], alpha, spec.iteration_values, bounds,
                                spec.resolution_mm, gt_grid, k, column_results.data());
                for (std::size_t ii = 0; ii < n_iters; ++ii) {
                    out[ii * n_alphas] = column_results[ii];
                }
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failed.exchange(true)) {
                    failure_message = "grid evaluation failed at (k=" + std::to_string(k) +
                                      ", alpha=" + std::to_string(alpha) + "): " + e.what();
                }
                return;
            }
        }
    };

    if (worker_count == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(worker_count);
        for (unsigned t = 0; t < worker_count; ++t) {
            pool.emplace_back(worker);
        }
        for (std::thread& t : pool) {
            t.join();
        }
    }
    if (failed.load()) {
        throw Error(failure_message);
    }

    std::sort(results.begin(), results.end(), result_before);

    // Materialize meshes for the exported ranks by re-running the smoothing;
    // determinism makes the recomputed mesh identical to the scored one.
    const std::size_t keep = std::min<std::size_t>(spec.top_n, results.size());
    for (std::size_t r = 0; r < keep; ++r) {
        const auto ki = static_cast<std::size_t>(
            std::lower_bound(spec.k_values.begin(), spec.k_values.end(), results[r].k) -
            spec.k_values.begin());
        const SmoothingParams params{results[r].k, results[r].iterations, results[r].alpha};
        results[r].smoothed = std::make_shared<TriangleMesh>(
            laplacian_smooth(mri_mesh, params, graphs[ki]));
    }
    return results;
}

std::string result_filename(int rank, int k, int iterations, double alpha, double dice) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "rank%d_k%d_iters%d_alpha%.1f_dice%.4f.stl", rank, k,
                  iterations, alpha, dice);
    return buf;
}

std::vector<std::filesystem::path> export_best(const std::vector<GridResult>& results,
                                               const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (!std::filesystem::is_directory(out_dir)) {
        throw IoError("cannot create output directory: " + out_dir.string());
    }

    std::vector<std::filesystem::path> written;
    nlohmann::json summary = nlohmann::json::array();
    int rank = 0;
    for (const GridResult& result : results) {
        if (!result.smoothed) {
            continue;
        }
        ++rank;
        const std::string name =
            result_filename(rank, result.k, result.iterations, result.alpha, result.dice);
        const std::filesystem::path path = out_dir / name;
        write_stl_file(*result.smoothed, path, StlFormat::Binary);
        written.push_back(path);
        summary.push_back({{"rank", rank},
                           {"k", result.k},
                           {"iterations", result.iterations},
                           {"alpha", result.alpha},
                           {"dice", result.dice},
                           {"filename", name}});
    }
    const std::filesystem::path summary_path = out_dir / "summary.json";
    write_file_atomic(summary_path, summary.dump(2) + "\n");
    written.push_back(summary_path);
    return written;
}

} // namespace spinenav
