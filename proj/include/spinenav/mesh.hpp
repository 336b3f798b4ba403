#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "spinenav/geometry.hpp"

namespace spinenav {

/// Indexed triangle surface in millimeters. Vertices are immutable after
/// construction; operations return new meshes.
struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> faces;

    std::size_t vertex_count() const { return vertices.size(); }
    std::size_t face_count() const { return faces.size(); }
};

/// Throws ConfigError when a face index is out of range, a face repeats one
/// index three times, or a vertex coordinate is non-finite.
void validate_mesh(const TriangleMesh& mesh);

/// Tight axis-aligned bounds. Throws ConfigError for an empty mesh.
Aabb mesh_bounds(const TriangleMesh& mesh);

} // namespace spinenav
