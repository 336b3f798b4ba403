// Test-only reference implementations, kept independent of the library code
// paths they are used to check.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <vector>

#include "spinenav/camera.hpp"
#include "spinenav/mesh.hpp"
#include "spinenav/rng.hpp"

namespace spinenav::test {

// --- Binary STL emitter (independent of write_stl) ---

inline void emit_f32(std::vector<std::uint8_t>& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xff));
    }
}

/// Hand-rolled binary STL of an axis-aligned cube: 12 triangles, two per
/// face, corners at origin..origin+side.
inline std::vector<std::uint8_t> reference_cube_stl(float side, float ox = 0.0f,
                                                    float oy = 0.0f, float oz = 0.0f) {
    const float s = side;
    // 8 cube corners.
    const float c[8][3] = {{0, 0, 0}, {s, 0, 0}, {s, s, 0}, {0, s, 0},
                           {0, 0, s}, {s, 0, s}, {s, s, s}, {0, s, s}};
    // Triangles with outward winding, two per face.
    const int tri[12][3] = {{0, 2, 1}, {0, 3, 2},  // z = 0
                            {4, 5, 6}, {4, 6, 7},  // z = s
                            {0, 1, 5}, {0, 5, 4},  // y = 0
                            {3, 6, 2}, {3, 7, 6},  // y = s
                            {0, 4, 7}, {0, 7, 3},  // x = 0
                            {1, 2, 6}, {1, 6, 5}}; // x = s
    std::vector<std::uint8_t> out(80, 0);
    out[0] = 'r';
    out[1] = 'e';
    out[2] = 'f';
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>((12u >> (8 * i)) & 0xff));
    }
    for (const auto& t : tri) {
        emit_f32(out, 0.0f);
        emit_f32(out, 0.0f);
        emit_f32(out, 0.0f); // normal ignored by the parser
        for (int corner = 0; corner < 3; ++corner) {
            emit_f32(out, c[t[corner]][0] + ox);
            emit_f32(out, c[t[corner]][1] + oy);
            emit_f32(out, c[t[corner]][2] + oz);
        }
        out.push_back(0);
        out.push_back(0);
    }
    return out;
}

/// Unique-position count by exhaustive pairwise comparison.
inline std::size_t count_unique_positions(const std::vector<Vec3>& points) {
    std::size_t unique = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        bool seen = false;
        for (std::size_t j = 0; j < i; ++j) {
            if (points[i].x == points[j].x && points[i].y == points[j].y &&
                points[i].z == points[j].z) {
                seen = true;
                break;
            }
        }
        unique += !seen;
    }
    return unique;
}

// --- Exhaustive k-NN (full all-pairs sort) ---

inline std::vector<std::uint32_t> brute_force_knn(const std::vector<Vec3>& points,
                                                  std::size_t query, int k) {
    std::vector<std::pair<double, std::uint32_t>> dist;
    for (std::size_t j = 0; j < points.size(); ++j) {
        if (j == query) {
            continue;
        }
        dist.emplace_back((points[j] - points[query]).squared_norm(),
                          static_cast<std::uint32_t>(j));
    }
    std::sort(dist.begin(), dist.end());
    std::vector<std::uint32_t> out;
    for (int j = 0; j < k; ++j) {
        out.push_back(dist[static_cast<std::size_t>(j)].second);
    }
    return out;
}

// --- Generic projection SAT (independent of triangle_box_overlap) ---

inline void project_points(const Vec3* pts, int n, const Vec3& axis, double& lo,
                           double& hi) {
    lo = hi = pts[0].dot(axis);
    for (int i = 1; i < n; ++i) {
        const double p = pts[i].dot(axis);
        lo = std::min(lo, p);
        hi = std::max(hi, p);
    }
}

inline bool oracle_triangle_box_overlap(const Vec3& box_min, const Vec3& box_max,
                                        const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 corners[8] = {
        {box_min.x, box_min.y, box_min.z}, {box_max.x, box_min.y, box_min.z},
        {box_min.x, box_max.y, box_min.z}, {box_max.x, box_max.y, box_min.z},
        {box_min.x, box_min.y, box_max.z}, {box_max.x, box_min.y, box_max.z},
        {box_min.x, box_max.y, box_max.z}, {box_max.x, box_max.y, box_max.z}};
    const Vec3 tri[3] = {a, b, c};
    std::vector<Vec3> axes = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    const Vec3 edges[3] = {b - a, c - b, a - c};
    axes.push_back(edges[0].cross(edges[1]));
    for (const Vec3& e : edges) {
        for (const Vec3& u : {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}}) {
            axes.push_back(e.cross(u));
        }
    }
    for (const Vec3& axis : axes) {
        if (axis.squared_norm() == 0.0) {
            continue;
        }
        double tlo, thi, blo, bhi;
        project_points(tri, 3, axis, tlo, thi);
        project_points(corners, 8, axis, blo, bhi);
        if (tlo > bhi || thi < blo) {
            return false;
        }
    }
    return true;
}

// --- Pinhole forward projector (independent of CameraIntrinsics::project) ---

inline Vec2 oracle_project(double fx, double fy, double cx, double cy, const Vec3& p) {
    return {fx * p.x / p.z + cx, fy * p.y / p.z + cy};
}

// --- Distributions ---

inline double rayleigh_cdf(double r, double sigma) {
    return 1.0 - std::exp(-(r * r) / (2.0 * sigma * sigma));
}

// --- Random fixtures ---

inline UnitQuaternion random_unit_quaternion(CounterRng& rng) {
    return {rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian(),
            rng.next_gaussian()};
}

inline Vec3 random_vec3(CounterRng& rng, double scale) {
    return {(rng.next_unit() * 2.0 - 1.0) * scale, (rng.next_unit() * 2.0 - 1.0) * scale,
            (rng.next_unit() * 2.0 - 1.0) * scale};
}

inline RigidTransform random_rigid(CounterRng& rng, double translation_scale) {
    return {random_unit_quaternion(rng), random_vec3(rng, translation_scale)};
}

// --- Icosphere fixture ---

/// Subdivided icosahedron scaled to `radius`; subdivisions = 5 gives 10242
/// vertices / 20480 faces.
inline TriangleMesh make_icosphere(double radius, int subdivisions) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {{-1, phi, 0}, {1, phi, 0},   {-1, -phi, 0}, {1, -phi, 0},
                               {0, -1, phi}, {0, 1, phi},   {0, -1, -phi}, {0, 1, -phi},
                               {phi, 0, -1}, {phi, 0, 1},   {-phi, 0, -1}, {-phi, 0, 1}};
    std::vector<std::array<std::uint32_t, 3>> faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

    for (int level = 0; level < subdivisions; ++level) {
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoint;
        const auto mid = [&](std::uint32_t a, std::uint32_t b) {
            const auto key = std::minmax(a, b);
            const auto it = midpoint.find(key);
            if (it != midpoint.end()) {
                return it->second;
            }
            const std::uint32_t index = static_cast<std::uint32_t>(verts.size());
            verts.push_back((verts[a] + verts[b]) * 0.5);
            midpoint.emplace(key, index);
            return index;
        };
        std::vector<std::array<std::uint32_t, 3>> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            const std::uint32_t ab = mid(f[0], f[1]);
            const std::uint32_t bc = mid(f[1], f[2]);
            const std::uint32_t ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }
    for (Vec3& v : verts) {
        v = v * (radius / v.norm());
    }
    return {std::move(verts), std::move(faces)};
}

/// "Stair-step" corruption: every coordinate snapped to the nearest
/// `step`-mm lattice plane.
inline TriangleMesh quantize_vertices(const TriangleMesh& mesh, double step) {
    TriangleMesh out = mesh;
    for (Vec3& v : out.vertices) {
        v = {std::round(v.x / step) * step, std::round(v.y / step) * step,
             std::round(v.z / step) * step};
    }
    return out;
}

} // namespace spinenav::test
