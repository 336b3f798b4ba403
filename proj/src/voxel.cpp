#include "spinenav/voxel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spinenav/errors.hpp"

namespace spinenav {

namespace {

void axis_min_max(double a, double b, double c, double& lo, double& hi) {
    lo = hi = a;
    lo = std::min({lo, b, c});
    hi = std::max({hi, b, c});
}

// One cross-product axis of the triangle-box SAT: projects the triangle edge
// pair and the box extent and compares intervals (inclusive).
bool edge_axis_separates(const Vec3& v0, const Vec3& v1, const Vec3& v2,
                         const Vec3& box_half, const Vec3& axis) {
    const double p0 = axis.dot(v0);
    const double p1 = axis.dot(v1);
    const double p2 = axis.dot(v2);
    const double lo = std::min({p0, p1, p2});
    const double hi = std::max({p0, p1, p2});
    const double rad = box_half.x * std::abs(axis.x) + box_half.y * std::abs(axis.y) +
                       box_half.z * std::abs(axis.z);
    return lo > rad || hi < -rad;
}

} // namespace

bool triangle_box_overlap(const Vec3& box_center, const Vec3& box_half,
                          const Vec3& a, const Vec3& b, const Vec3& c) {
    // Translate so the box is centered at the origin.
    const Vec3 v0 = a - box_center;
    const Vec3 v1 = b - box_center;
    const Vec3 v2 = c - box_center;

    // Box face normals: interval overlap per coordinate axis.
    double lo, hi;
    axis_min_max(v0.x, v1.x, v2.x, lo, hi);
    if (lo > box_half.x || hi < -box_half.x) return false;
    axis_min_max(v0.y, v1.y, v2.y, lo, hi);
    if (lo > box_half.y || hi < -box_half.y) return false;
    axis_min_max(v0.z, v1.z, v2.z, lo, hi);
    if (lo > box_half.z || hi < -box_half.z) return false;

    const Vec3 e0 = v1 - v0;
    const Vec3 e1 = v2 - v1;
    const Vec3 e2 = v0 - v2;

    // Nine edge cross-product axes.
    static constexpr Vec3 units[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (const Vec3& e : {e0, e1, e2}) {
        for (const Vec3& u : units) {
            const Vec3 axis = e.cross(u);
            if (axis.squared_norm() > 0.0 &&
                edge_axis_separates(v0, v1, v2, box_half, axis)) {
                return false;
            }
        }
    }

    // Triangle plane normal.
    const Vec3 n = e0.cross(e1);
    if (n.squared_norm() > 0.0 && edge_axis_separates(v0, v1, v2, box_half, n)) {
        return false;
    }
    return true;
}

VoxelGrid::VoxelGrid(const Vec3& origin, double resolution_mm,
                     const std::array<std::int64_t, 3>& dims)
    : origin_(origin), resolution_(resolution_mm), dims_(dims) {
    if (!(resolution_mm > 0.0)) {
        throw ConfigError("voxel resolution must be positive");
    }
    for (const std::int64_t d : dims) {
        if (d <= 0) {
            throw ConfigError("voxel grid dims must be positive");
        }
    }
    occupancy_.assign(static_cast<std::size_t>(dims[0] * dims[1] * dims[2]), false);
}

std::size_t VoxelGrid::occupied_count() const {
    return static_cast<std::size_t>(std::count(occupancy_.begin(), occupancy_.end(), true));
}

bool VoxelGrid::same_lattice(const VoxelGrid& o) const {
    return origin_.x == o.origin_.x && origin_.y == o.origin_.y &&
           origin_.z == o.origin_.z && resolution_ == o.resolution_ && dims_ == o.dims_;
}

VoxelGrid voxelize_surface(const TriangleMesh& mesh, const Aabb& bounds,
                           double resolution_mm) {
    validate_mesh(mesh);
    if (!(resolution_mm > 0.0)) {
        throw ConfigError("voxel resolution must be positive, got " +
                          std::to_string(resolution_mm));
    }
    // Containment with an ulp-scale slack: convex-combination updates
    // (smoothing) can land a hair outside tight bounds in floating point.
    const Vec3 full_extent = bounds.extent();
    const double slack =
        1e-9 * (1.0 + std::max({full_extent.x, full_extent.y, full_extent.z}));
    const Aabb padded{bounds.min - Vec3{slack, slack, slack},
                      bounds.max + Vec3{slack, slack, slack}};
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        if (!padded.contains(mesh.vertices[i])) {
            throw ConfigError("mesh extends outside the voxelization bounds at vertex " +
                              std::to_string(i));
        }
    }

    const Vec3 ext = bounds.extent();
    std::array<std::int64_t, 3> dims{};
    for (int a = 0; a < 3; ++a) {
        dims[a] = std::max<std::int64_t>(
            1, static_cast<std::int64_t>(std::ceil(ext[a] / resolution_mm)));
    }
    VoxelGrid grid(bounds.min, resolution_mm, dims);

    const Vec3 half{resolution_mm * 0.5, resolution_mm * 0.5, resolution_mm * 0.5};
    for (const auto& face : mesh.faces) {
        const Vec3& a = mesh.vertices[face[0]];
        const Vec3& b = mesh.vertices[face[1]];
        const Vec3& c = mesh.vertices[face[2]];

        // Candidate range widened by one cell per side: a triangle lying
        // exactly on a cell boundary touches the neighbor cell too, and
        // touching counts as occupied.
        std::array<std::int64_t, 3> c0{}, c1{};
        for (int axis = 0; axis < 3; ++axis) {
            const double lo = std::min({a[axis], b[axis], c[axis]}) - bounds.min[axis];
            const double hi = std::max({a[axis], b[axis], c[axis]}) - bounds.min[axis];
            c0[axis] = std::clamp<std::int64_t>(
                static_cast<std::int64_t>(std::floor(lo / resolution_mm)) - 1, 0,
                dims[axis] - 1);
            c1[axis] = std::clamp<std::int64_t>(
                static_cast<std::int64_t>(std::floor(hi / resolution_mm)) + 1, 0,
                dims[axis] - 1);
        }
        for (std::int64_t k = c0[2]; k <= c1[2]; ++k) {
            for (std::int64_t j = c0[1]; j <= c1[1]; ++j) {
                for (std::int64_t i = c0[0]; i <= c1[0]; ++i) {
                    if (grid.occupied(i, j, k)) {
                        continue;
                    }
                    const Vec3 center{bounds.min.x + (static_cast<double>(i) + 0.5) * resolution_mm,
                                      bounds.min.y + (static_cast<double>(j) + 0.5) * resolution_mm,
                                      bounds.min.z + (static_cast<double>(k) + 0.5) * resolution_mm};
                    if (triangle_box_overlap(center, half, a, b, c)) {
                        grid.set(i, j, k);
                    }
                }
            }
        }
    }
    return grid;
}

double dice_shell(const VoxelGrid& a, const VoxelGrid& b) {
    if (!a.same_lattice(b)) {
        throw ConfigError("dice_shell requires grids sharing origin, dims, and resolution");
    }
    std::size_t count_a = 0, count_b = 0, both = 0;
    const auto& oa = a.occupancy();
    const auto& ob = b.occupancy();
    for (std::size_t i = 0; i < oa.size(); ++i) {
        const bool va = oa[i];
        const bool vb = ob[i];
        count_a += va;
        count_b += vb;
        both += va && vb;
    }
    if (count_a + count_b == 0) {
        return 1.0;
    }
    return 2.0 * static_cast<double>(both) /
           static_cast<double>(count_a + count_b);
}

} // namespace spinenav
