#include "spinenav/mesh.hpp"

#include <algorithm>
#include <string>

#include "spinenav/errors.hpp"

namespace spinenav {

void validate_mesh(const TriangleMesh& mesh) {
    const std::size_t n = mesh.vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!mesh.vertices[i].is_finite()) {
            throw ConfigError("mesh vertex " + std::to_string(i) + " is non-finite");
        }
    }
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& face = mesh.faces[f];
        for (int c = 0; c < 3; ++c) {
            if (face[c] >= n) {
                throw ConfigError("mesh face " + std::to_string(f) +
                                  " references vertex " + std::to_string(face[c]) +
                                  " beyond vertex count " + std::to_string(n));
            }
        }
        if (face[0] == face[1] && face[1] == face[2]) {
            throw ConfigError("mesh face " + std::to_string(f) +
                              " is degenerate (three identical indices)");
        }
    }
}

Aabb mesh_bounds(const TriangleMesh& mesh) {
    if (mesh.vertices.empty()) {
        throw ConfigError("cannot compute bounds of an empty mesh");
    }
    Aabb b{mesh.vertices.front(), mesh.vertices.front()};
    for (const Vec3& v : mesh.vertices) {
        b.min.x = std::min(b.min.x, v.x);
        b.min.y = std::min(b.min.y, v.y);
        b.min.z = std::min(b.min.z, v.z);
        b.max.x = std::max(b.max.x, v.x);
        b.max.y = std::max(b.max.y, v.y);
        b.max.z = std::max(b.max.z, v.z);
    }
    return b;
}

} // namespace spinenav
