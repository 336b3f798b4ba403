#pragma once

#include <array>

#include "spinenav/camera.hpp"
#include "spinenav/geometry.hpp"

namespace spinenav {

/// Physical square fiducial marker.
struct MarkerSpec {
    int id = 0;
    double side_length_mm = 0.0;

    void validate() const {
        if (!(side_length_mm > 0.0)) {
            throw ConfigError("marker side length must be positive");
        }
    }
};

/// Marker corners in the marker frame, canonical order
/// (-L/2,+L/2), (+L/2,+L/2), (+L/2,-L/2), (-L/2,-L/2), z toward the front
/// face. Observation producers must emit pixel corners in this order.
std::array<Vec3, 4> marker_corners_local(double side_length_mm);

/// Detected corners of one marker in one frame, in canonical corner order.
struct MarkerObservation {
    int frame = 0;
    int id = 0;
    std::array<Vec2, 4> corners{};
};

/// 6-DoF marker->camera pose from the four corner correspondences.
///
/// Method: direct linear transform homography from the planar square,
/// decomposition to (R, t) by normalized column extraction with Gram-Schmidt
/// orthonormalization, Gauss-Newton refinement on pixel reprojection error
/// (max 20 iterations, stop when the step norm drops below 1e-10). Both
/// planar-ambiguity candidates are refined; the one with lower reprojection
/// error wins, ties by the marker normal pointing toward the camera. The
/// returned translation has Z > 0.
///
/// Throws EstimationError on degenerate (collinear/non-convex) corners or a
/// divergent refinement (the error carries the last residual).
RigidTransform estimate_marker_pose(const MarkerObservation& obs, const MarkerSpec& spec,
                                    const CameraIntrinsics& cam);

/// Low-pass pose update: translation lerp and rotation slerp from `previous`
/// toward `measured` by fraction beta in (0, 1] (hemisphere-corrected).
RigidTransform smooth_pose(const RigidTransform& previous, const RigidTransform& measured,
                           double beta);

} // namespace spinenav
