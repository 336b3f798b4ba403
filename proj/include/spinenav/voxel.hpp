#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "spinenav/mesh.hpp"

namespace spinenav {

/// Dense occupancy grid over an axis-aligned box. Cell (i, j, k) spans
/// [origin + (i,j,k)*R, origin + (i+1,j+1,k+1)*R].
class VoxelGrid {
public:
    VoxelGrid(const Vec3& origin, double resolution_mm,
              const std::array<std::int64_t, 3>& dims);

    const Vec3& origin() const { return origin_; }
    double resolution() const { return resolution_; }
    const std::array<std::int64_t, 3>& dims() const { return dims_; }
    std::size_t cell_count() const { return occupancy_.size(); }

    std::size_t index(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return static_cast<std::size_t>((k * dims_[1] + j) * dims_[0] + i);
    }
    bool occupied(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return occupancy_[index(i, j, k)];
    }
    void set(std::int64_t i, std::int64_t j, std::int64_t k) {
        occupancy_[index(i, j, k)] = true;
    }
    std::size_t occupied_count() const;

    /// True when the two grids cover the same lattice (origin, resolution,
    /// dims all identical).
    bool same_lattice(const VoxelGrid& o) const;

    const std::vector<bool>& occupancy() const { return occupancy_; }

private:
    Vec3 origin_;
    double resolution_;
    std::array<std::int64_t, 3> dims_;
    std::vector<bool> occupancy_;
};

/// Marks every cell whose box intersects at least one mesh triangle
/// (separating-axis triangle/box test, touching counts as intersecting).
/// Grid dims are ceil(extent / R) per axis from the given shared bounds, so
/// two meshes voxelized with the same bounds align cell for cell.
///
/// Throws ConfigError when R <= 0 or any mesh vertex lies outside `bounds`.
VoxelGrid voxelize_surface(const TriangleMesh& mesh, const Aabb& bounds,
                           double resolution_mm);

/// Surface-shell Dice index 2|A in B| / (|A| + |B|); 1.0 when both grids are
/// empty. Throws ConfigError when the grids do not share a lattice.
double dice_shell(const VoxelGrid& a, const VoxelGrid& b);

/// Exact triangle/axis-aligned-box overlap (separating axis test over the
/// 13 candidate axes; touching counts). Box given by center and half extent.
bool triangle_box_overlap(const Vec3& box_center, const Vec3& box_half,
                          const Vec3& a, const Vec3& b, const Vec3& c);

} // namespace spinenav
