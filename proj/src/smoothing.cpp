#include "spinenav/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spinenav/errors.hpp"

namespace spinenav {

namespace {

struct Candidate {
    double d2;
    std::uint32_t index;

    bool operator<(const Candidate& o) const {
        return d2 < o.d2 || (d2 == o.d2 && index < o.index);
    }
};

// Uniform grid over the vertex bounding box with CSR-style buckets.
class PointGrid {
public:
    PointGrid(const std::vector<Vec3>& points, const Aabb& bounds) : points_(points) {
        const Vec3 ext = bounds.extent();
        const double max_ext = std::max({ext.x, ext.y, ext.z});
        cell_ = max_ext > 0.0 ? max_ext / 32.0 : 1.0;
        origin_ = bounds.min;
        for (int a = 0; a < 3; ++a) {
            dims_[a] = std::max<std::int64_t>(
                1, static_cast<std::int64_t>(std::floor(ext[a] / cell_)) + 1);
        }
        const std::size_t cells =
            static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]);
        std::vector<std::uint32_t> counts(cells + 1, 0);
        cell_of_.resize(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            cell_of_[i] = cell_index(coords_of(points[i]));
            ++counts[cell_of_[i] + 1];
        }
        for (std::size_t c = 1; c <= cells; ++c) {
            counts[c] += counts[c - 1];
        }
        starts_ = counts;
        bucket_.resize(points.size());
        std::vector<std::uint32_t> cursor(starts_.begin(), starts_.end() - 1);
        for (std::size_t i = 0; i < points.size(); ++i) {
            bucket_[cursor[cell_of_[i]]++] = static_cast<std::uint32_t>(i);
        }
    }

    std::array<std::int64_t, 3> coords_of(const Vec3& p) const {
        std::array<std::int64_t, 3> c{};
        const Vec3 rel = p - origin_;
        for (int a = 0; a < 3; ++a) {
            c[a] = std::clamp<std::int64_t>(
                static_cast<std::int64_t>(std::floor(rel[a] / cell_)), 0, dims_[a] - 1);
        }
        return c;
    }

    /// Exact k nearest neighbors of points_[query] excluding itself, sorted
    /// by (squared distance, index).
    void nearest(std::uint32_t query, int k, std::vector<Candidate>& heap) const {
        heap.clear();
        const Vec3 q = points_[query];
        const std::array<std::int64_t, 3> qc = coords_of(q);
        const std::int64_t shell_max =
            std::max({std::max(qc[0], dims_[0] - 1 - qc[0]),
                      std::max(qc[1], dims_[1] - 1 - qc[1]),
                      std::max(qc[2], dims_[2] - 1 - qc[2])});
        for (std::int64_t r = 0; r <= shell_max; ++r) {
            scan_shell(qc, r, query, q, k, heap);
            // Every point beyond Chebyshev shell r lies strictly farther
            // than r * cell_ along some axis, so once the k-th best is
            // within that bound no unscanned point can displace it.
            if (static_cast<int>(heap.size()) == k) {
                const double bound = static_cast<double>(r) * cell_;
                if (heap.front().d2 <= bound * bound) {
                    break;
                }
            }
        }
        std::sort_heap(heap.begin(), heap.end());
    }

private:
    std::size_t cell_index(const std::array<std::int64_t, 3>& c) const {
        return static_cast<std::size_t>((c[2] * dims_[1] + c[1]) * dims_[0] + c[0]);
    }

    void scan_shell(const std::array<std::int64_t, 3>& qc, std::int64_t r,
                    std::uint32_t query, const Vec3& q, int k,
                    std::vector<Candidate>& heap) const {
        const std::int64_t x0 = std::max<std::int64_t>(0, qc[0] - r);
        const std::int64_t x1 = std::min(dims_[0] - 1, qc[0] + r);
        const std::int64_t y0 = std::max<std::int64_t>(0, qc[1] - r);
        const std::int64_t y1 = std::min(dims_[1] - 1, qc[1] + r);
        const std::int64_t z0 = std::max<std::int64_t>(0, qc[2] - r);
        const std::int64_t z1 = std::min(dims_[2] - 1, qc[2] + r);
        for (std::int64_t z = z0; z <= z1; ++z) {
            for (std::int64_t y = y0; y <= y1; ++y) {
                for (std::int64_t x = x0; x <= x1; ++x) {
                    const std::int64_t cheb = std::max(
                        {std::abs(x - qc[0]), std::abs(y - qc[1]), std::abs(z - qc[2])});
                    if (cheb != r) {
                        continue;
                    }
                    const std::size_t cell = cell_index({x, y, z});
                    for (std::uint32_t b = starts_[cell]; b < starts_[cell + 1]; ++b) {
                        const std::uint32_t p = bucket_[b];
                        if (p == query) {
                            continue;
                        }
                        const Candidate cand{(points_[p] - q).squared_norm(), p};
                        if (static_cast<int>(heap.size()) < k) {
                            heap.push_back(cand);
                            std::push_heap(heap.begin(), heap.end());
                        } else if (cand < heap.front()) {
                            std::pop_heap(heap.begin(), heap.end());
                            heap.back() = cand;
                            std::push_heap(heap.begin(), heap.end());
                        }
                    }
                }
            }
        }
    }

    const std::vector<Vec3>& points_;
    Vec3 origin_;
    double cell_ = 1.0;
    std::array<std::int64_t, 3> dims_{1, 1, 1};
    std::vector<std::uint32_t> starts_;
    std::vector<std::uint32_t> bucket_;
    std::vector<std::uint32_t> cell_of_;
};

} // namespace

void SmoothingParams::validate(std::size_t vertex_count) const {
    if (k < 1) {
        throw ConfigError("smoothing k must be >= 1, got " + std::to_string(k));
    }
    if (static_cast<std::size_t>(k) >= vertex_count) {
        throw ConfigError("smoothing k (" + std::to_string(k) +
                          ") must be smaller than the vertex count (" +
                          std::to_string(vertex_count) + ")");
    }
    if (iterations < 0) {
        throw ConfigError("smoothing iterations must be >= 0, got " +
                          std::to_string(iterations));
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ConfigError("smoothing alpha must lie in [0, 1], got " +
                          std::to_string(alpha));
    }
}

NeighborGraph build_knn_graph(const TriangleMesh& mesh, int k) {
    validate_mesh(mesh);
    const std::size_t n = mesh.vertex_count();
    if (k < 1) {
        throw ConfigError("k must be >= 1, got " + std::to_string(k));
    }
    if (static_cast<std::size_t>(k) >= n) {
        throw ConfigError("k (" + std::to_string(k) +
                          ") must be smaller than the vertex count (" +
                          std::to_string(n) + ")");
    }

    const PointGrid grid(mesh.vertices, mesh_bounds(mesh));
    NeighborGraph graph;
    graph.k = k;
    graph.neighbors.resize(n * static_cast<std::size_t>(k));
    std::vector<Candidate> heap;
    heap.reserve(static_cast<std::size_t>(k) + 1);
    for (std::size_t i = 0; i < n; ++i) {
        grid.nearest(static_cast<std::uint32_t>(i), k, heap);
        for (int j = 0; j < k; ++j) {
            graph.neighbors[i * static_cast<std::size_t>(k) + j] = heap[j].index;
        }
    }
    return graph;
}

void laplacian_iterate(std::vector<Vec3>& positions, std::vector<Vec3>& scratch,
                       const NeighborGraph& graph, double alpha, int iterations) {
    const std::size_t n = positions.size();
    scratch.resize(n);
    const double inv_k = 1.0 / static_cast<double>(graph.k);
    for (int t = 0; t < iterations; ++t) {
        scratch.swap(positions);
        for (std::size_t i = 0; i < n; ++i) {
            Vec3 sum;
            for (const std::uint32_t j : graph.of(i)) {
                sum += scratch[j];
            }
            const Vec3 mean = sum * inv_k;
            positions[i] = scratch[i] + (mean - scratch[i]) * alpha;
        }
    }
}

TriangleMesh laplacian_smooth(const TriangleMesh& mesh, const SmoothingParams& params) {
    params.validate(mesh.vertex_count());
    const NeighborGraph graph = build_knn_graph(mesh, params.k);
    return laplacian_smooth(mesh, params, graph);
}

TriangleMesh laplacian_smooth(const TriangleMesh& mesh, const SmoothingParams& params,
                              const NeighborGraph& graph) {
    params.validate(mesh.vertex_count());
    if (graph.k != params.k || graph.vertex_count() != mesh.vertex_count()) {
        throw ConfigError("neighbor graph does not match mesh and smoothing params");
    }
    TriangleMesh out;
    out.vertices = mesh.vertices;
    out.faces = mesh.faces;
    std::vector<Vec3> scratch;
    laplacian_iterate(out.vertices, scratch, graph, params.alpha, params.iterations);
    return out;
}

} // namespace spinenav
