#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spinenav/mesh.hpp"

namespace spinenav {

struct SmoothingParams {
    int k = 8;          // neighbor count, >= 1 and < vertex count
    int iterations = 1; // >= 0
    double alpha = 0.5; // in [0, 1]

    /// Throws ConfigError when a field is out of range for a mesh with
    /// `vertex_count` vertices.
    void validate(std::size_t vertex_count) const;
};

/// Fixed k-nearest-neighbor lists, one row of k vertex indices per vertex.
/// Rows are sorted by (squared distance, index) ascending and never contain
/// the vertex itself.
struct NeighborGraph {
    int k = 0;
    std::vector<std::uint32_t> neighbors; // vertex_count() rows of k entries

    std::size_t vertex_count() const {
        return k > 0 ? neighbors.size() / static_cast<std::size_t>(k) : 0;
    }
    std::span<const std::uint32_t> of(std::size_t vertex) const {
        return {neighbors.data() + vertex * static_cast<std::size_t>(k),
                static_cast<std::size_t>(k)};
    }
};

/// Exact k nearest neighbors by Euclidean distance over vertex positions,
/// ties broken by lower vertex index. Uses a uniform spatial grid with an
/// expanding-shell search; the result is identical to an exhaustive scan.
/// Throws ConfigError when k < 1 or k >= vertex count.
NeighborGraph build_knn_graph(const TriangleMesh& mesh, int k);

/// One explicit Laplacian step toward the k-neighbor mean, repeated
/// `iterations` times:
///
///   v_i <- v_i + alpha * (mean of neighbors(i) - v_i)
///
/// Updates within an iteration are synchronous (all reads see the previous
/// iteration), the neighbor graph is built once from the input mesh and held
/// fixed, and faces pass through untouched.
TriangleMesh laplacian_smooth(const TriangleMesh& mesh, const SmoothingParams& params);

/// Same filter over a caller-supplied graph (must match the mesh and
/// params.k); lets a parameter sweep reuse one graph without changing the
/// arithmetic.
TriangleMesh laplacian_smooth(const TriangleMesh& mesh, const SmoothingParams& params,
                              const NeighborGraph& graph);

/// In-place iteration core shared by both entry points: advances `positions`
/// by `iterations` synchronous steps using `scratch` as the previous-state
/// buffer. Exposed for the grid-search optimizer's checkpointed sweeps.
void laplacian_iterate(std::vector<Vec3>& positions, std::vector<Vec3>& scratch,
                       const NeighborGraph& graph, double alpha, int iterations);

} // namespace spinenav
