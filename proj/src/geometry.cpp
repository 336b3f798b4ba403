#include "spinenav/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "spinenav/errors.hpp"

namespace spinenav {

Vec3 Vec3::normalized() const {
    const double n = norm();
    if (n <= 0.0 || !std::isfinite(n)) {
        throw ConfigError("cannot normalize zero or non-finite vector");
    }
    return *this / n;
}

Mat3 Mat3::identity() {
    Mat3 r;
    r.m = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    return r;
}

Mat3 Mat3::from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
    Mat3 r;
    r.m = {{{c0.x, c1.x, c2.x}, {c0.y, c1.y, c2.y}, {c0.z, c1.z, c2.z}}};
    return r;
}

Mat3 Mat3::operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            r.m[i][j] = m[i][0] * o.m[0][j] + m[i][1] * o.m[1][j] + m[i][2] * o.m[2][j];
        }
    }
    return r;
}

Mat3 Mat3::transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            r.m[i][j] = m[j][i];
        }
    }
    return r;
}

double Mat3::det() const {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

UnitQuaternion::UnitQuaternion(double w, double x, double y, double z)
    : w(w), x(x), y(y), z(z) {
    normalize_and_canonicalize();
}

void UnitQuaternion::normalize_and_canonicalize() {
    const double n = norm();
    if (!(n > 1e-12) || !std::isfinite(n)) {
        throw ConfigError("quaternion norm too small or non-finite");
    }
    w /= n;
    x /= n;
    y /= n;
    z /= n;
    // Canonical hemisphere: w >= 0, resolving w == 0 by the first nonzero
    // vector component.
    bool flip = w < 0.0;
    if (w == 0.0) {
        if (x != 0.0) {
            flip = x < 0.0;
        } else if (y != 0.0) {
            flip = y < 0.0;
        } else {
            flip = z < 0.0;
        }
    }
    if (flip) {
        w = -w;
        x = -x;
        y = -y;
        z = -z;
    }
}

UnitQuaternion UnitQuaternion::from_axis_angle(const Vec3& axis, double angle_rad) {
    const Vec3 u = axis.normalized();
    const double half = 0.5 * angle_rad;
    const double s = std::sin(half);
    return {std::cos(half), u.x * s, u.y * s, u.z * s};
}

UnitQuaternion UnitQuaternion::from_rotation_vector(const Vec3& rv) {
    const double angle = rv.norm();
    if (angle < 1e-12) {
        // First-order expansion keeps the zero case exact.
        return {1.0, 0.5 * rv.x, 0.5 * rv.y, 0.5 * rv.z};
    }
    return from_axis_angle(rv, angle);
}

UnitQuaternion UnitQuaternion::from_matrix(const Mat3& r) {
    // Shepperd's method: pick the dominant diagonal branch for stability.
    const auto& m = r.m;
    const double trace = m[0][0] + m[1][1] + m[2][2];
    double qw, qx, qy, qz;
    if (trace > 0.0) {
        const double s = std::sqrt(trace + 1.0) * 2.0;
        qw = 0.25 * s;
        qx = (m[2][1] - m[1][2]) / s;
        qy = (m[0][2] - m[2][0]) / s;
        qz = (m[1][0] - m[0][1]) / s;
    } else if (m[0][0] > m[1][1] && m[0][0] > m[2][2]) {
        const double s = std::sqrt(1.0 + m[0][0] - m[1][1] - m[2][2]) * 2.0;
        qw = (m[2][1] - m[1][2]) / s;
        qx = 0.25 * s;
        qy = (m[0][1] + m[1][0]) / s;
        qz = (m[0][2] + m[2][0]) / s;
    } else if (m[1][1] > m[2][2]) {
        const double s = std::sqrt(1.0 + m[1][1] - m[0][0] - m[2][2]) * 2.0;
        qw = (m[0][2] - m[2][0]) / s;
        qx = (m[0][1] + m[1][0]) / s;
        qy = 0.25 * s;
        qz = (m[1][2] + m[2][1]) / s;
    } else {
        const double s = std::sqrt(1.0 + m[2][2] - m[0][0] - m[1][1]) * 2.0;
        qw = (m[1][0] - m[0][1]) / s;
        qx = (m[0][2] + m[2][0]) / s;
        qy = (m[1][2] + m[2][1]) / s;
        qz = 0.25 * s;
    }
    return {qw, qx, qy, qz};
}

UnitQuaternion UnitQuaternion::operator*(const UnitQuaternion& o) const {
    return {w * o.w - x * o.x - y * o.y - z * o.z,
            w * o.x + x * o.w + y * o.z - z * o.y,
            w * o.y - x * o.z + y * o.w + z * o.x,
            w * o.z + x * o.y - y * o.x + z * o.w};
}

Vec3 UnitQuaternion::rotate(const Vec3& v) const {
    // v' = v + 2 q_v x (q_v x v + w v)
    const Vec3 qv{x, y, z};
    const Vec3 t = qv.cross(v) * 2.0;
    return v + t * w + qv.cross(t);
}

Mat3 UnitQuaternion::to_matrix() const {
    Mat3 r;
    const double xx = x * x, yy = y * y, zz = z * z;
    const double xy = x * y, xz = x * z, yz = y * z;
    const double wx = w * x, wy = w * y, wz = w * z;
    r.m = {{{1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy)},
            {2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx)},
            {2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)}}};
    return r;
}

double UnitQuaternion::angle_to(const UnitQuaternion& o) const {
    const UnitQuaternion d = conjugate() * o;
    const double vec = std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
    return 2.0 * std::atan2(vec, std::abs(d.w));
}

UnitQuaternion slerp(const UnitQuaternion& a, const UnitQuaternion& b, double t) {
    double dot = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
    double sign = 1.0;
    if (dot < 0.0) {
        dot = -dot;
        sign = -1.0;
    }
    double wa, wb;
    if (dot > 1.0 - 1e-12) {
        // Nearly parallel: linear blend avoids 0/0 in the sine ratio.
        wa = 1.0 - t;
        wb = t;
    } else {
        const double theta = std::acos(std::min(dot, 1.0));
        const double s = std::sin(theta);
        wa = std::sin((1.0 - t) * theta) / s;
        wb = std::sin(t * theta) / s;
    }
    wb *= sign;
    return {a.w * wa + b.w * wb, a.x * wa + b.x * wb, a.y * wa + b.y * wb,
            a.z * wa + b.z * wb};
}

RigidTransform RigidTransform::compose(const RigidTransform& inner) const {
    return {rotation * inner.rotation, rotation.rotate(inner.translation) + translation};
}

RigidTransform RigidTransform::inverse() const {
    const UnitQuaternion r = rotation.conjugate();
    return {r, -r.rotate(translation)};
}

void SimilarityTransform::validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw ConfigError("similarity scale must be positive and finite");
    }
    if (!translation.is_finite()) {
        throw ConfigError("similarity translation must be finite");
    }
}

SimilarityTransform SimilarityTransform::compose(const SimilarityTransform& inner) const {
    return {rotation * inner.rotation,
            rotation.rotate(inner.translation) * scale + translation,
            scale * inner.scale};
}

SimilarityTransform SimilarityTransform::inverse() const {
    const UnitQuaternion r = rotation.conjugate();
    const double inv_scale = 1.0 / scale;
    return {r, -(r.rotate(translation) * inv_scale), inv_scale};
}

Aabb union_bounds(const Aabb& a, const Aabb& b) {
    return {{std::min(a.min.x, b.min.x), std::min(a.min.y, b.min.y),
             std::min(a.min.z, b.min.z)},
            {std::max(a.max.x, b.max.x), std::max(a.max.y, b.max.y),
             std::max(a.max.z, b.max.z)}};
}

} // namespace spinenav
