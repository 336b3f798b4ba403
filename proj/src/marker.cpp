#include "spinenav/marker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace spinenav {

namespace {

constexpr int kMaxGaussNewtonIterations = 20;
constexpr double kStepStopNorm = 1e-10;
constexpr double kMinDepthMm = 1e-6;

// Gaussian elimination with partial pivoting; false when singular.
template <int N>
bool solve_linear(std::array<std::array<double, N>, N>& a, std::array<double, N>& b,
                  std::array<double, N>& x) {
    for (int col = 0; col < N; ++col) {
        int pivot = col;
        for (int row = col + 1; row < N; ++row) {
            if (std::abs(a[row][col]) > std::abs(a[pivot][col])) {
                pivot = row;
            }
        }
        if (std::abs(a[pivot][col]) < 1e-14) {
            return false;
        }
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (int row = col + 1; row < N; ++row) {
            const double f = a[row][col] / a[col][col];
            for (int c = col; c < N; ++c) {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    for (int row = N - 1; row >= 0; --row) {
        double sum = b[row];
        for (int c = row + 1; c < N; ++c) {
            sum -= a[row][c] * x[c];
        }
        x[row] = sum / a[row][row];
    }
    return true;
}

void require_strictly_convex(const std::array<Vec2, 4>& corners) {
    double scale_sq = 0.0;
    for (int i = 0; i < 4; ++i) {
        const Vec2 e = corners[(i + 1) % 4] - corners[i];
        scale_sq = std::max(scale_sq, e.x * e.x + e.y * e.y);
        if (!std::isfinite(corners[i].x) || !std::isfinite(corners[i].y)) {
            throw EstimationError("marker corner coordinates are non-finite");
        }
    }
    double sign = 0.0;
    for (int i = 0; i < 4; ++i) {
        const Vec2 e0 = corners[(i + 1) % 4] - corners[i];
        const Vec2 e1 = corners[(i + 2) % 4] - corners[(i + 1) % 4];
        const double cross = e0.x * e1.y - e0.y * e1.x;
        if (std::abs(cross) <= 1e-10 * scale_sq) {
            throw EstimationError("marker corners are degenerate (collinear)");
        }
        if (sign == 0.0) {
            sign = cross;
        } else if (sign * cross < 0.0) {
            throw EstimationError("marker corners do not form a convex quadrilateral");
        }
    }
}

// Homography mapping the unit square corners (-1,+1),(+1,+1),(+1,-1),(-1,-1)
// to Hartley-normalized camera-plane points, h33 fixed to 1; composed back to
// the map from marker-plane millimeters to normalized camera coordinates.
Mat3 homography_from_square(const std::array<Vec2, 4>& normalized_px, double half_side) {
    Vec2 centroid{0.0, 0.0};
    for (const Vec2& p : normalized_px) {
        centroid = centroid + p * 0.25;
    }
    double mean_dist = 0.0;
    for (const Vec2& p : normalized_px) {
        mean_dist += (p - centroid).norm() * 0.25;
    }
    if (!(mean_dist > 1e-12)) {
        throw EstimationError("marker corners are degenerate (coincident)");
    }
    const double s = std::sqrt(2.0) / mean_dist;

    static constexpr double kUnitSquare[4][2] = {{-1, 1}, {1, 1}, {1, -1}, {-1, -1}};
    std::array<std::array<double, 8>, 8> a{};
    std::array<double, 8> b{};
    for (int i = 0; i < 4; ++i) {
        const double X = kUnitSquare[i][0];
        const double Y = kUnitSquare[i][1];
        const double xn = s * (normalized_px[i].x - centroid.x);
        const double yn = s * (normalized_px[i].y - centroid.y);
        a[2 * i] = {X, Y, 1, 0, 0, 0, -xn * X, -xn * Y};
        b[2 * i] = xn;
        a[2 * i + 1] = {0, 0, 0, X, Y, 1, -yn * X, -yn * Y};
        b[2 * i + 1] = yn;
    }
    std::array<double, 8> h{};
    if (!solve_linear<8>(a, b, h)) {
        throw EstimationError("homography system is singular (degenerate corners)");
    }

    Mat3 hn;
    hn.m = {{{h[0], h[1], h[2]}, {h[3], h[4], h[5]}, {h[6], h[7], 1.0}}};
    // Undo the image normalization and fold in the plane scaling 2/L.
    Mat3 t_img_inv;
    t_img_inv.m = {{{1.0 / s, 0, centroid.x}, {0, 1.0 / s, centroid.y}, {0, 0, 1}}};
    Mat3 t_obj;
    t_obj.m = {{{1.0 / half_side, 0, 0}, {0, 1.0 / half_side, 0}, {0, 0, 1}}};
    return t_img_inv * hn * t_obj;
}

struct PoseCandidate {
    UnitQuaternion rotation;
    Vec3 translation;
    double error_sq = 0.0;
    bool valid = false;
};

double reprojection_error_sq(const UnitQuaternion& q, const Vec3& t,
                             const std::array<Vec3, 4>& object_pts,
                             const std::array<Vec2, 4>& observed_px,
                             const CameraIntrinsics& cam) {
    const Mat3 r = q.to_matrix();
    double e = 0.0;
    for (int i = 0; i < 4; ++i) {
        const Vec3 p = r * object_pts[i] + t;
        if (p.z < kMinDepthMm) {
            return std::numeric_limits<double>::infinity();
        }
        const Vec2 proj = cam.project(p);
        const Vec2 d = proj - observed_px[i];
        e += d.x * d.x + d.y * d.y;
    }
    return e;
}

// Gauss-Newton on pixel reprojection error with a left-multiplicative
// rotation update. Marks the candidate invalid (keeping the last residual)
// when the iteration leaves the valid depth range or turns non-finite.
PoseCandidate refine_pose(UnitQuaternion q, Vec3 t, const std::array<Vec3, 4>& object_pts,
                          const std::array<Vec2, 4>& observed_px,
                          const CameraIntrinsics& cam) {
    PoseCandidate out;
    double error = reprojection_error_sq(q, t, object_pts, observed_px, cam);
    if (!std::isfinite(error)) {
        out.error_sq = error;
        return out;
    }

    for (int iter = 0; iter < kMaxGaussNewtonIterations; ++iter) {
        const Mat3 r = q.to_matrix();
        std::array<std::array<double, 6>, 6> jtj{};
        std::array<double, 6> jtr{};
        for (int i = 0; i < 4; ++i) {
            const Vec3 rp = r * object_pts[i];
            const Vec3 p = rp + t;
            if (p.z < kMinDepthMm) {
                out.error_sq = error;
                return out;
            }
            const double inv_z = 1.0 / p.z;
            const Vec2 proj = cam.project(p);
            const double ru = proj.x - observed_px[i].x;
            const double rv = proj.y - observed_px[i].y;
            // d(proj)/dP rows.
            const Vec3 du_dp{cam.fx * inv_z, 0.0, -cam.fx * p.x * inv_z * inv_z};
            const Vec3 dv_dp{0.0, cam.fy * inv_z, -cam.fy * p.y * inv_z * inv_z};
            // dP/d(omega) = -skew(R p); dP/dt = I. As column vectors the
            // rotation blocks are skew(rp)^T du_dp = rp x du_dp.
            std::array<double, 6> ju{}, jv{};
            const Vec3 du_dw = rp.cross(du_dp);
            const Vec3 dv_dw = rp.cross(dv_dp);
            ju = {du_dw.x, du_dw.y, du_dw.z, du_dp.x, du_dp.y, du_dp.z};
            jv = {dv_dw.x, dv_dw.y, dv_dw.z, dv_dp.x, dv_dp.y, dv_dp.z};
            for (int row = 0; row < 6; ++row) {
                for (int col = 0; col < 6; ++col) {
                    jtj[row][col] += ju[row] * ju[col] + jv[row] * jv[col];
                }
                jtr[row] += ju[row] * ru + jv[row] * rv;
            }
        }
        std::array<double, 6> delta{};
        for (double& v : jtr) {
            v = -v;
        }
        if (!solve_linear<6>(jtj, jtr, delta)) {
            break;
        }
        const UnitQuaternion q_next =
            UnitQuaternion::from_rotation_vector({delta[0], delta[1], delta[2]}) * q;
        const Vec3 t_next = t + Vec3{delta[3], delta[4], delta[5]};
        const double error_next =
            reprojection_error_sq(q_next, t_next, object_pts, observed_px, cam);
        if (!std::isfinite(error_next) || error_next > 4.0 * error + 1e-9) {
            // Step made things clearly worse: keep the pre-step estimate.
            break;
        }
        q = q_next;
        t = t_next;
        error = error_next;
        double step_sq = 0.0;
        for (const double d : delta) {
            step_sq += d * d;
        }
        if (step_sq < kStepStopNorm * kStepStopNorm) {
            break;
        }
    }
    out.rotation = q;
    out.translation = t;
    out.error_sq = error;
    out.valid = std::isfinite(error) && t.z > 0.0;
    return out;
}

} // namespace

std::array<Vec3, 4> marker_corners_local(double side_length_mm) {
    const double h = side_length_mm * 0.5;
    return {Vec3{-h, h, 0.0}, Vec3{h, h, 0.0}, Vec3{h, -h, 0.0}, Vec3{-h, -h, 0.0}};
}

RigidTransform estimate_marker_pose(const MarkerObservation& obs, const MarkerSpec& spec,
                                    const CameraIntrinsics& cam) {
    spec.validate();
    cam.validate();
    require_strictly_convex(obs.corners);

    std::array<Vec2, 4> normalized{};
    for (int i = 0; i < 4; ++i) {
        normalized[i] = {(obs.corners[i].x - cam.cx) / cam.fx,
                         (obs.corners[i].y - cam.cy) / cam.fy};
    }
    const double half_side = spec.side_length_mm * 0.5;
    const Mat3 h = homography_from_square(normalized, half_side);

    // Column extraction: H ~ [r1 r2 t] up to scale in normalized coordinates.
    Vec3 h1 = h.col(0);
    Vec3 h2 = h.col(1);
    Vec3 h3 = h.col(2);
    const double n1 = h1.norm();
    const double n2 = h2.norm();
    if (!(n1 > 1e-12) || !(n2 > 1e-12)) {
        throw EstimationError("homography columns vanish (degenerate corners)");
    }
    double lambda = 2.0 / (n1 + n2);
    if (h3.z * lambda < 0.0) {
        lambda = -lambda; // the marker sits in front of the camera: t.z > 0
    }
    Vec3 r1 = h1 * lambda;
    Vec3 r2 = h2 * lambda;
    Vec3 t = h3 * lambda;

    // Gram-Schmidt orthonormalization of the first two columns.
    const Vec3 u1 = r1.normalized();
    const Vec3 u2 = (r2 - u1 * r2.dot(u1)).normalized();
    const Vec3 u3 = u1.cross(u2);
    const Mat3 rot_a = Mat3::from_columns(u1, u2, u3);
    const UnitQuaternion q_a = UnitQuaternion::from_matrix(rot_a);

    const std::array<Vec3, 4> object_pts = marker_corners_local(spec.side_length_mm);
    PoseCandidate best = refine_pose(q_a, t, object_pts, obs.corners, cam);

    // Second planar-ambiguity candidate: the marker normal reflected across
    // the line of sight through the marker center.
    const Vec3 sight = t.normalized();
    const Vec3 normal = u3;
    const Vec3 axis = normal.cross(sight);
    const double axis_norm = axis.norm();
    if (axis_norm > 1e-9) {
        const double theta =
            std::atan2(axis_norm, std::clamp(normal.dot(sight), -1.0, 1.0));
        const UnitQuaternion flip =
            UnitQuaternion::from_axis_angle(axis / axis_norm, 2.0 * theta);
        PoseCandidate alt = refine_pose(flip * q_a, t, object_pts, obs.corners, cam);
        if (alt.valid) {
            if (!best.valid || alt.error_sq < best.error_sq) {
                best = alt;
            } else if (alt.error_sq == best.error_sq) {
                // Tie: prefer the candidate whose front normal points back
                // toward the camera center.
                const Vec3 n_best = best.rotation.rotate({0, 0, 1});
                const Vec3 n_alt = alt.rotation.rotate({0, 0, 1});
                if (n_alt.dot(alt.translation) < n_best.dot(best.translation)) {
                    best = alt;
                }
            }
        }
    }

    if (!best.valid) {
        throw EstimationError("marker pose refinement diverged",
                              std::sqrt(best.error_sq));
    }
    return {best.rotation, best.translation};
}

RigidTransform smooth_pose(const RigidTransform& previous, const RigidTransform& measured,
                           double beta) {
    if (!(beta > 0.0 && beta <= 1.0)) {
        throw ConfigError("smoothing beta must lie in (0, 1], got " + std::to_string(beta));
    }
    return {slerp(previous.rotation, measured.rotation, beta),
            previous.translation * (1.0 - beta) + measured.translation * beta};
}

} // namespace spinenav
