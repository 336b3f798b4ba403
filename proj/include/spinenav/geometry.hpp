#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace spinenav {

// All lengths are in millimeters, all angles in radians.

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double norm() const { return std::sqrt(x * x + y * y); }
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double squared_norm() const { return dot(*this); }
    double norm() const { return std::sqrt(squared_norm()); }
    Vec3 normalized() const;
    bool is_finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// 3x3 matrix, row-major.
struct Mat3 {
    // m[row][col]
    std::array<std::array<double, 3>, 3> m{};

    static Mat3 identity();
    static Mat3 from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2);

    Vec3 col(int j) const { return {m[0][j], m[1][j], m[2][j]}; }
    Vec3 row(int i) const { return {m[i][0], m[i][1], m[i][2]}; }
    Vec3 operator*(const Vec3& v) const {
        return {row(0).dot(v), row(1).dot(v), row(2).dot(v)};
    }
    Mat3 operator*(const Mat3& o) const;
    Mat3 transposed() const;
    double det() const;
};

/// Unit quaternion (w, x, y, z), canonicalized to the w >= 0 hemisphere.
struct UnitQuaternion {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    UnitQuaternion() = default;

    /// Normalizes the given components; throws ConfigError on a near-zero norm.
    UnitQuaternion(double w, double x, double y, double z);

    static UnitQuaternion identity() { return {}; }
    static UnitQuaternion from_axis_angle(const Vec3& axis, double angle_rad);
    /// Rotation vector (axis * angle); safe at zero.
    static UnitQuaternion from_rotation_vector(const Vec3& rv);
    static UnitQuaternion from_matrix(const Mat3& r);

    UnitQuaternion conjugate() const { return make_raw(w, -x, -y, -z); }
    /// Composition; renormalizes the product to keep the unit invariant.
    UnitQuaternion operator*(const UnitQuaternion& o) const;
    Vec3 rotate(const Vec3& v) const;
    Mat3 to_matrix() const;
    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
    /// Absolute rotation angle between this and `o`, in [0, pi].
    double angle_to(const UnitQuaternion& o) const;

    /// Bypasses normalization; caller guarantees unit norm and hemisphere.
    static UnitQuaternion make_raw(double w, double x, double y, double z) {
        UnitQuaternion q;
        q.w = w;
        q.x = x;
        q.y = y;
        q.z = z;
        return q;
    }

private:
    void normalize_and_canonicalize();
};

/// Spherical interpolation from `a` toward `b` by fraction t in [0, 1].
/// Applies hemisphere correction (negates b when dot(a, b) < 0), so the
/// result does not depend on the sign representation of either input.
UnitQuaternion slerp(const UnitQuaternion& a, const UnitQuaternion& b, double t);

/// Rigid transform: p -> R p + t.
struct RigidTransform {
    UnitQuaternion rotation;
    Vec3 translation;

    static RigidTransform identity() { return {}; }

    Vec3 apply(const Vec3& p) const { return rotation.rotate(p) + translation; }
    RigidTransform compose(const RigidTransform& inner) const;
    RigidTransform inverse() const;
};

/// Similarity transform: p -> s R p + t, s > 0.
struct SimilarityTransform {
    UnitQuaternion rotation;
    Vec3 translation;
    double scale = 1.0;

    static SimilarityTransform identity() { return {}; }
    static SimilarityTransform from_rigid(const RigidTransform& t) {
        return {t.rotation, t.translation, 1.0};
    }

    /// Throws ConfigError unless scale > 0 and all components are finite.
    void validate() const;

    Vec3 apply(const Vec3& p) const {
        return rotation.rotate(p) * scale + translation;
    }
    SimilarityTransform compose(const SimilarityTransform& inner) const;
    SimilarityTransform inverse() const;
};

/// Axis-aligned bounding box, min <= max componentwise.
struct Aabb {
    Vec3 min;
    Vec3 max;

    bool contains(const Vec3& p) const {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
               p.z >= min.z && p.z <= max.z;
    }
    Vec3 extent() const { return max - min; }
};

Aabb union_bounds(const Aabb& a, const Aabb& b);

} // namespace spinenav
