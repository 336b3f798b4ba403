#pragma once

#include <map>
#include <string>
#include <vector>

#include "spinenav/geometry.hpp"
#include "spinenav/tracker.hpp"

namespace spinenav {

/// Marker->model transforms recorded at scan time for exactly two fiducial
/// sites, plus the reference distance between the marker centers in the
/// model frame.
struct FiducialLayout {
    std::map<int, RigidTransform> markers; // marker -> model (MRI frame, mm)
    double d_ref_mm = 0.0;

    /// Throws ConfigError unless there are exactly two markers and d_ref_mm
    /// matches the center distance within 1e-9 mm.
    void validate() const;

    int first_id() const { return markers.begin()->first; }
    int second_id() const { return std::next(markers.begin())->first; }

    /// Parses {"markers": {"<id>": {"q": [w,x,y,z], "t": [x,y,z]}, ...},
    /// "d_ref_mm": d}.
    static FiducialLayout from_json_text(const std::string& text);
    std::string to_json_text() const;
};

enum class OverlayMode { None, Single, Dual };

const char* overlay_mode_name(OverlayMode mode);

/// Model->camera overlay transform and the tracking mode that produced it.
/// mode == None carries the identity transform and means no overlay is
/// available; Single mode always has scale 1.
struct OverlayPose {
    SimilarityTransform transform;
    OverlayMode mode = OverlayMode::None;
};

/// Dual when both layout markers are active, Single when exactly one is,
/// None when neither. Promotion back to Dual is immediate once both markers
/// are active again.
OverlayMode select_mode(const std::vector<int>& active_ids, const FiducialLayout& layout);

/// Overlay through one marker: model -> marker (inverse of the scan-time
/// relation) -> camera. Unit scale.
OverlayPose single_marker_overlay(const RigidTransform& pose, int id,
                                  const FiducialLayout& layout);

/// Overlay through both markers; `pose1` belongs to the lower marker id.
/// Scale is |c1 - c2| / d_ref. Rotation maps the model-frame basis
/// {u, n', u x n'} (u along the inter-marker direction, n' the projected
/// mean marker normal) onto the camera-frame basis built the same way, and
/// the model-frame fiducial midpoint lands on the camera-frame midpoint.
///
/// Throws ConfigError when the observed centers coincide (within 1e-6 mm) or
/// the mean marker normal is parallel to the inter-marker direction (within
/// 1e-6).
OverlayPose dual_marker_overlay(const RigidTransform& pose1, const RigidTransform& pose2,
                                const FiducialLayout& layout);

/// Mode arbitration over the registry: dispatches to the dual or single
/// overlay (the single path uses the active marker) or returns None.
OverlayPose overlay_step(const TrackerState& state, const FiducialLayout& layout);

} // namespace spinenav
