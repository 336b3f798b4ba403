#include "spinenav/overlay.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace spinenav {

void FiducialLayout::validate() const {
    if (markers.size() != 2) {
        throw ConfigError("fiducial layout requires exactly two markers, got " +
                          std::to_string(markers.size()));
    }
    if (!(d_ref_mm > 0.0)) {
        throw ConfigError("fiducial layout d_ref_mm must be positive");
    }
    const Vec3 c1 = markers.begin()->second.translation;
    const Vec3 c2 = std::next(markers.begin())->second.translation;
    const double dist = (c2 - c1).norm();
    if (std::abs(dist - d_ref_mm) > 1e-9) {
        throw ConfigError("fiducial layout d_ref_mm (" + std::to_string(d_ref_mm) +
                          ") does not match the marker center distance (" +
                          std::to_string(dist) + ")");
    }
}

namespace {

RigidTransform transform_from_json(const nlohmann::json& j) {
    const auto q = j.at("q").get<std::array<double, 4>>();
    const auto t = j.at("t").get<std::array<double, 3>>();
    return {UnitQuaternion(q[0], q[1], q[2], q[3]), Vec3{t[0], t[1], t[2]}};
}

nlohmann::json transform_to_json(const RigidTransform& t) {
    return {{"q", {t.rotation.w, t.rotation.x, t.rotation.y, t.rotation.z}},
            {"t", {t.translation.x, t.translation.y, t.translation.z}}};
}

// {u, n', u x n'} from two anchor centers and their marker z-axes. Throws
// on coincident centers or a mean normal parallel to the center line.
Mat3 anchor_basis(const Vec3& c1, const Vec3& c2, const Vec3& z1, const Vec3& z2,
                  const char* frame_name) {
    const Vec3 span = c2 - c1;
    const double dist = span.norm();
    if (dist <= 1e-6) {
        throw ConfigError(std::string("dual-marker centers coincide in the ") + frame_name +
                          " frame");
    }
    const Vec3 u = span / dist;
    const Vec3 z_sum = z1 + z2;
    if (z_sum.norm() <= 1e-6) {
        throw ConfigError(std::string("dual-marker normals cancel in the ") + frame_name +
                          " frame");
    }
    const Vec3 n = z_sum.normalized();
    const Vec3 rejected = n - u * n.dot(u);
    if (rejected.norm() <= 1e-6) {
        throw ConfigError(std::string("dual-marker normal is parallel to the center line in the ") +
                          frame_name + " frame");
    }
    const Vec3 n_prime = rejected.normalized();
    return Mat3::from_columns(u, n_prime, u.cross(n_prime));
}

Vec3 marker_z_axis(const RigidTransform& t) { return t.rotation.rotate({0.0, 0.0, 1.0}); }

} // namespace

FiducialLayout FiducialLayout::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("layout file is not valid JSON: ") + e.what());
    }
    FiducialLayout layout;
    try {
        for (const auto& [key, value] : j.at("markers").items()) {
            layout.markers.emplace(std::stoi(key), transform_from_json(value));
        }
        layout.d_ref_mm = j.at("d_ref_mm").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("layout file field error: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw ConfigError("layout file marker ids must be integer keys");
    }
    layout.validate();
    return layout;
}

std::string FiducialLayout::to_json_text() const {
    nlohmann::json markers_json = nlohmann::json::object();
    for (const auto& [id, transform] : markers) {
        markers_json[std::to_string(id)] = transform_to_json(transform);
    }
    const nlohmann::json j = {{"markers", markers_json}, {"d_ref_mm", d_ref_mm}};
    return j.dump(2) + "\n";
}

const char* overlay_mode_name(OverlayMode mode) {
    switch (mode) {
    case OverlayMode::None:
        return "none";
    case OverlayMode::Single:
        return "single";
    case OverlayMode::Dual:
        return "dual";
    }
    return "none";
}

OverlayMode select_mode(const std::vector<int>& active_ids, const FiducialLayout& layout) {
    layout.validate();
    int active = 0;
    for (const auto& [id, unused] : layout.markers) {
        if (std::find(active_ids.begin(), active_ids.end(), id) != active_ids.end()) {
            ++active;
        }
    }
    switch (active) {
    case 2:
        return OverlayMode::Dual;
    case 1:
        return OverlayMode::Single;
    default:
        return OverlayMode::None;
    }
}

OverlayPose single_marker_overlay(const RigidTransform& pose, int id,
                                  const FiducialLayout& layout) {
    layout.validate();
    const auto it = layout.markers.find(id);
    if (it == layout.markers.end()) {
        throw ConfigError("marker id " + std::to_string(id) + " is not in the layout");
    }
    const RigidTransform model_to_camera = pose.compose(it->second.inverse());
    return {SimilarityTransform::from_rigid(model_to_camera), OverlayMode::Single};
}

OverlayPose dual_marker_overlay(const RigidTransform& pose1, const RigidTransform& pose2,
                                const FiducialLayout& layout) {
    layout.validate();
    const RigidTransform& layout1 = layout.markers.begin()->second;
    const RigidTransform& layout2 = std::next(layout.markers.begin())->second;

    const Vec3 c1 = pose1.translation;
    const Vec3 c2 = pose2.translation;
    const Vec3 m1 = layout1.translation;
    const Vec3 m2 = layout2.translation;

    const double observed_dist = (c2 - c1).norm();
    if (observed_dist <= 1e-6) {
        throw ConfigError("dual-marker overlay: observed marker centers coincide");
    }
    const double scale = observed_dist / layout.d_ref_mm;

    const Mat3 camera_basis =
        anchor_basis(c1, c2, marker_z_axis(pose1), marker_z_axis(pose2), "camera");
    const Mat3 model_basis =
        anchor_basis(m1, m2, marker_z_axis(layout1), marker_z_axis(layout2), "model");
    const UnitQuaternion rotation =
        UnitQuaternion::from_matrix(camera_basis * model_basis.transposed());

    const Vec3 camera_mid = (c1 + c2) * 0.5;
    const Vec3 model_mid = (m1 + m2) * 0.5;
    const Vec3 translation = camera_mid - rotation.rotate(model_mid) * scale;
    return {SimilarityTransform{rotation, translation, scale}, OverlayMode::Dual};
}

OverlayPose overlay_step(const TrackerState& state, const FiducialLayout& layout) {
    const std::vector<int> active = state.active_ids();
    const OverlayMode mode = select_mode(active, layout);
    switch (mode) {
    case OverlayMode::Dual: {
        const TrackedObject& first = state.object(layout.first_id());
        const TrackedObject& second = state.object(layout.second_id());
        return dual_marker_overlay(first.pose.value(), second.pose.value(), layout);
    }
    case OverlayMode::Single: {
        const int id = std::find(active.begin(), active.end(), layout.first_id()) != active.end()
                           ? layout.first_id()
                           : layout.second_id();
        return single_marker_overlay(state.object(id).pose.value(), id, layout);
    }
    default:
        return {SimilarityTransform::identity(), OverlayMode::None};
    }
}

} // namespace spinenav
