#include "spinenav/simulator.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "spinenav/rng.hpp"

namespace spinenav {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

std::vector<int> sorted_marker_ids(const Scenario& scenario) {
    std::vector<int> ids;
    for (const MarkerSpec& spec : scenario.markers) {
        ids.push_back(spec.id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

const MarkerSpec& spec_for(const Scenario& scenario, int id) {
    for (const MarkerSpec& spec : scenario.markers) {
        if (spec.id == id) {
            return spec;
        }
    }
    throw ConfigError("scenario has no marker spec for id " + std::to_string(id));
}

} // namespace

const char* guidance_mode_name(GuidanceMode mode) {
    switch (mode) {
    case GuidanceMode::Baseline:
        return "baseline";
    case GuidanceMode::SingleMarker:
        return "single";
    case GuidanceMode::DualMarker:
        return "dual";
    }
    return "baseline";
}

void DetectorRings::validate() const {
    if (outer_radii_mm[0] != 1.0) {
        throw ConfigError("innermost detector ring radius must be 1 mm");
    }
    for (int i = 1; i < 4; ++i) {
        if (!(outer_radii_mm[i] > outer_radii_mm[i - 1])) {
            throw ConfigError("detector ring radii must be strictly increasing");
        }
    }
    for (int i = 0; i < 4; ++i) {
        const double lower = i == 0 ? 0.0 : outer_radii_mm[i - 1];
        if (!(midpoints_mm[i] >= lower && midpoints_mm[i] < outer_radii_mm[i])) {
            throw ConfigError("detector ring midpoint " + std::to_string(i + 1) +
                              " must lie inside its ring band");
        }
    }
    if (!(miss_deviation_mm >= outer_radii_mm[3])) {
        throw ConfigError("miss deviation must not undercut the outermost radius");
    }
}

double calibrated_blind_sigma_mm() {
    // Rayleigh: P(r < 1 mm) = 1 - exp(-1 / (2 sigma^2)) = 0.20.
    return 1.0 / std::sqrt(-2.0 * std::log(0.8));
}

void Scenario::validate() const {
    layout.validate();
    camera.validate();
    tracker.validate();
    rings.validate();
    if (trials < 1) {
        throw ConfigError("scenario trials must be >= 1");
    }
    if (model_pose_per_frame.empty()) {
        throw ConfigError("scenario needs at least one camera frame");
    }
    if (pixel_noise_px < 0.0 || placement_noise_mm < 0.0 || hand_noise_mm < 0.0 ||
        model_error_mm < 0.0 || blind_sigma_mm < 0.0) {
        throw ConfigError("scenario noise magnitudes must be >= 0");
    }
    if (!target.is_finite()) {
        throw ConfigError("scenario target must be finite");
    }
    for (const MarkerSpec& spec : markers) {
        spec.validate();
    }
    for (const auto& [id, unused] : layout.markers) {
        spec_for(*this, id);
    }
}

std::optional<int> classify_insertion(const Vec2& planar_offset_mm,
                                      const DetectorRings& rings) {
    const double r = planar_offset_mm.norm();
    for (int j = 0; j < 4; ++j) {
        if (r < rings.outer_radii_mm[j]) {
            return j + 1;
        }
    }
    return std::nullopt;
}

std::vector<TrialResult> run_trials(const Scenario& scenario) {
    scenario.validate();
    const std::vector<int> marker_ids = sorted_marker_ids(scenario);
    const std::size_t frame_count = scenario.model_pose_per_frame.size();
    const double blind_sigma =
        scenario.blind_sigma_mm > 0.0 ? scenario.blind_sigma_mm : calibrated_blind_sigma_mm();

    std::vector<TrialResult> results;
    results.reserve(static_cast<std::size_t>(scenario.trials));

    for (int trial = 0; trial < scenario.trials; ++trial) {
        CounterRng rng(scenario.seed, static_cast<std::uint64_t>(trial));

        // The draw order below is fixed and independent of guidance mode and
        // occlusion, so different modes on the same seed see identical noise.
        std::map<int, RigidTransform> placed;
        for (const int id : marker_ids) {
            const Vec3 jitter{rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian()};
            const auto it = scenario.layout.markers.find(id);
            RigidTransform placement =
                it != scenario.layout.markers.end() ? it->second : RigidTransform::identity();
            placement.translation += jitter * scenario.placement_noise_mm;
            placed.emplace(id, placement);
        }

        std::vector<std::vector<MarkerObservation>> observations(frame_count);
        for (std::size_t frame = 0; frame < frame_count; ++frame) {
            const RigidTransform& model_pose = scenario.model_pose_per_frame[frame];
            const auto occluded_it = scenario.occlusion.find(static_cast<int>(frame));
            for (const int id : marker_ids) {
                std::array<Vec2, 4> noise{};
                for (int c = 0; c < 4; ++c) {
                    noise[c] = {rng.next_gaussian(), rng.next_gaussian()};
                }
                if (!scenario.layout.markers.contains(id)) {
                    continue;
                }
                if (occluded_it != scenario.occlusion.end() &&
                    occluded_it->second.contains(id)) {
                    continue;
                }
                if (scenario.guidance == GuidanceMode::Baseline) {
                    continue;
                }
                if (scenario.guidance == GuidanceMode::SingleMarker &&
                    id != scenario.layout.first_id()) {
                    continue;
                }
                const RigidTransform marker_to_camera = model_pose.compose(placed.at(id));
                const std::array<Vec3, 4> corners =
                    marker_corners_local(spec_for(scenario, id).side_length_mm);
                MarkerObservation obs;
                obs.frame = static_cast<int>(frame);
                obs.id = id;
                bool visible = true;
                for (int c = 0; c < 4; ++c) {
                    const Vec3 p = marker_to_camera.apply(corners[c]);
                    if (p.z <= 1e-6) {
                        visible = false;
                        break;
                    }
                    obs.corners[c] =
                        scenario.camera.project(p) + noise[c] * scenario.pixel_noise_px;
                    if (!scenario.camera.in_image(obs.corners[c])) {
                        visible = false;
                        break;
                    }
                }
                if (visible) {
                    observations[frame].push_back(obs);
                }
            }
        }

        const double bias_angle = rng.next_unit() * kTwoPi;
        const Vec2 bias{scenario.model_error_mm * std::cos(bias_angle),
                        scenario.model_error_mm * std::sin(bias_angle)};
        const Vec2 hand{scenario.hand_noise_mm * rng.next_gaussian(),
                        scenario.hand_noise_mm * rng.next_gaussian()};
        const Vec2 blind{blind_sigma * rng.next_gaussian(),
                         blind_sigma * rng.next_gaussian()};

        TrialResult result;
        result.trial = trial;

        if (scenario.guidance == GuidanceMode::Baseline) {
            result.planar_offset_mm = blind;
            result.ring = classify_insertion(result.planar_offset_mm, scenario.rings);
        } else {
            TrackerState state(scenario.markers);
            for (std::size_t frame = 0; frame < frame_count; ++frame) {
                tracker_step(state, scenario.tracker, static_cast<int>(frame),
                             observations[frame], scenario.camera);
            }
            const OverlayPose overlay = overlay_step(state, scenario.layout);
            if (overlay.mode == OverlayMode::None) {
                result.overlay_lost = true;
                result.ring = std::nullopt;
            } else {
                // Needle lands where the overlay shows the target; score the
                // landing in the true model frame's detector plane (xy).
                const Vec3 landing_camera = overlay.transform.apply(scenario.target);
                const Vec3 landing_model =
                    scenario.model_pose_per_frame.back().inverse().apply(landing_camera);
                const Vec3 miss3 = landing_model - scenario.target;
                result.planar_offset_mm = Vec2{miss3.x, miss3.y} + bias + hand;
                result.ring = classify_insertion(result.planar_offset_mm, scenario.rings);
            }
        }
        results.push_back(result);
    }
    return results;
}

AccuracyReport summarize(const std::vector<TrialResult>& results,
                         const DetectorRings& rings) {
    rings.validate();
    if (results.empty()) {
        throw ConfigError("cannot summarize an empty trial list");
    }
    AccuracyReport report;
    report.trials = static_cast<int>(results.size());
    double deviation_sum = 0.0;
    for (const TrialResult& result : results) {
        if (result.ring.has_value()) {
            ++report.ring_counts[static_cast<std::size_t>(*result.ring - 1)];
            deviation_sum += rings.midpoints_mm[static_cast<std::size_t>(*result.ring - 1)];
        } else {
            ++report.misses;
            deviation_sum += rings.miss_deviation_mm;
        }
    }
    report.high_accuracy_rate_pct =
        100.0 * static_cast<double>(report.ring_counts[0]) / report.trials;
    report.average_deviation_mm = deviation_sum / report.trials;
    return report;
}

AccuracyReport simulate_scenario(const Scenario& scenario) {
    AccuracyReport report = summarize(run_trials(scenario), scenario.rings);
    report.mode = scenario.guidance;
    report.seed = scenario.seed;
    return report;
}

ReportDiff compare_report(const AccuracyReport& report,
                          const std::array<int, 4>& reference_ring_counts,
                          int reference_misses, const DetectorRings& rings) {
    rings.validate();
    int reference_total = reference_misses;
    for (const int c : reference_ring_counts) {
        reference_total += c;
    }
    const int report_total =
        report.ring_counts[0] + report.ring_counts[1] + report.ring_counts[2] +
        report.ring_counts[3] + report.misses;
    if (reference_total != report_total) {
        throw ConfigError("compare_report totals differ: report has " +
                          std::to_string(report_total) + " trials, reference has " +
                          std::to_string(reference_total));
    }
    ReportDiff diff;
    double reference_deviation = 0.0;
    for (int j = 0; j < 4; ++j) {
        diff.ring_deltas[static_cast<std::size_t>(j)] =
            report.ring_counts[static_cast<std::size_t>(j)] -
            reference_ring_counts[static_cast<std::size_t>(j)];
        reference_deviation += rings.midpoints_mm[static_cast<std::size_t>(j)] *
                               reference_ring_counts[static_cast<std::size_t>(j)];
    }
    diff.miss_delta = report.misses - reference_misses;
    reference_deviation += rings.miss_deviation_mm * reference_misses;
    reference_deviation /= reference_total;
    const double reference_rate =
        100.0 * static_cast<double>(reference_ring_counts[0]) / reference_total;
    diff.rate_delta_pct = report.high_accuracy_rate_pct - reference_rate;
    diff.deviation_delta_mm = report.average_deviation_mm - reference_deviation;
    return diff;
}

// --- JSON ---

namespace {

RigidTransform rigid_from_json(const nlohmann::json& j) {
    const auto q = j.at("q").get<std::array<double, 4>>();
    const auto t = j.at("t").get<std::array<double, 3>>();
    return {UnitQuaternion(q[0], q[1], q[2], q[3]), Vec3{t[0], t[1], t[2]}};
}

nlohmann::json rigid_to_json(const RigidTransform& t) {
    return {{"q", {t.rotation.w, t.rotation.x, t.rotation.y, t.rotation.z}},
            {"t", {t.translation.x, t.translation.y, t.translation.z}}};
}

GuidanceMode guidance_from_name(const std::string& name) {
    if (name == "baseline") {
        return GuidanceMode::Baseline;
    }
    if (name == "single") {
        return GuidanceMode::SingleMarker;
    }
    if (name == "dual") {
        return GuidanceMode::DualMarker;
    }
    throw ConfigError("unknown guidance mode \"" + name +
                      "\" (expected baseline, single, or dual)");
}

} // namespace

Scenario Scenario::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scenario file is not valid JSON: ") + e.what());
    }
    Scenario s;
    try {
        s.layout = FiducialLayout::from_json_text(j.at("layout").dump());
        const auto target = j.at("target_mm").get<std::array<double, 3>>();
        s.target = {target[0], target[1], target[2]};
        const auto& cam = j.at("camera");
        s.camera.fx = cam.at("fx").get<double>();
        s.camera.fy = cam.at("fy").get<double>();
        s.camera.cx = cam.at("cx").get<double>();
        s.camera.cy = cam.at("cy").get<double>();
        s.camera.width = cam.at("width").get<int>();
        s.camera.height = cam.at("height").get<int>();
        for (const auto& pose : j.at("model_pose_per_frame")) {
            s.model_pose_per_frame.push_back(rigid_from_json(pose));
        }
        for (const auto& marker : j.at("markers")) {
            s.markers.push_back(
                {marker.at("id").get<int>(), marker.at("side_length_mm").get<double>()});
        }
        s.pixel_noise_px = j.value("pixel_noise_px", 0.0);
        s.placement_noise_mm = j.value("placement_noise_mm", 0.0);
        s.hand_noise_mm = j.value("hand_noise_mm", 0.0);
        s.model_error_mm = j.value("model_error_mm", 0.0);
        s.blind_sigma_mm = j.value("blind_sigma_mm", 0.0);
        if (j.contains("occlusion")) {
            for (const auto& [frame, ids] : j.at("occlusion").items()) {
                s.occlusion[std::stoi(frame)] = ids.get<std::set<int>>();
            }
        }
        s.trials = j.at("trials").get<int>();
        s.seed = j.at("seed").get<std::uint64_t>();
        s.guidance = guidance_from_name(j.at("guidance").get<std::string>());
        if (j.contains("tracker")) {
            const auto& tracker = j.at("tracker");
            s.tracker.t_miss = tracker.value("t_miss", 5);
            s.tracker.beta = tracker.value("beta", 0.5);
            s.tracker.auto_disable = tracker.value("auto_disable", true);
        }
        if (j.contains("rings")) {
            const auto& rings = j.at("rings");
            s.rings.outer_radii_mm = rings.at("outer_radii_mm").get<std::array<double, 4>>();
            s.rings.midpoints_mm = rings.at("midpoints_mm").get<std::array<double, 4>>();
            s.rings.miss_deviation_mm = rings.value("miss_deviation_mm", 20.0);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scenario file field error: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw ConfigError("scenario occlusion frames must be integer keys");
    }
    s.validate();
    return s;
}

std::string Scenario::to_json_text() const {
    nlohmann::json markers_json = nlohmann::json::object();
    for (const auto& [id, transform] : layout.markers) {
        markers_json[std::to_string(id)] = rigid_to_json(transform);
    }
    nlohmann::json poses = nlohmann::json::array();
    for (const RigidTransform& pose : model_pose_per_frame) {
        poses.push_back(rigid_to_json(pose));
    }
    nlohmann::json specs = nlohmann::json::array();
    for (const MarkerSpec& spec : markers) {
        specs.push_back({{"id", spec.id}, {"side_length_mm", spec.side_length_mm}});
    }
    nlohmann::json occlusion_json = nlohmann::json::object();
    for (const auto& [frame, ids] : occlusion) {
        occlusion_json[std::to_string(frame)] = ids;
    }
    nlohmann::json j = {
        {"layout", {{"markers", markers_json}, {"d_ref_mm", layout.d_ref_mm}}},
        {"target_mm", {target.x, target.y, target.z}},
        {"camera",
         {{"fx", camera.fx},
          {"fy", camera.fy},
          {"cx", camera.cx},
          {"cy", camera.cy},
          {"width", camera.width},
          {"height", camera.height}}},
        {"model_pose_per_frame", poses},
        {"markers", specs},
        {"pixel_noise_px", pixel_noise_px},
        {"placement_noise_mm", placement_noise_mm},
        {"hand_noise_mm", hand_noise_mm},
        {"model_error_mm", model_error_mm},
        {"blind_sigma_mm", blind_sigma_mm},
        {"occlusion", occlusion_json},
        {"trials", trials},
        {"seed", seed},
        {"guidance", guidance_mode_name(guidance)},
        {"tracker",
         {{"t_miss", tracker.t_miss},
          {"beta", tracker.beta},
          {"auto_disable", tracker.auto_disable}}},
        {"rings",
         {{"outer_radii_mm", rings.outer_radii_mm},
          {"midpoints_mm", rings.midpoints_mm},
          {"miss_deviation_mm", rings.miss_deviation_mm}}}};
    return j.dump(2) + "\n";
}

std::string AccuracyReport::to_json_text() const {
    const nlohmann::json j = {{"ring_counts", ring_counts},
                              {"misses", misses},
                              {"high_accuracy_rate_pct", high_accuracy_rate_pct},
                              {"average_deviation_mm", average_deviation_mm},
                              {"mode", guidance_mode_name(mode)},
                              {"trials", trials},
                              {"seed", seed}};
    return j.dump(2) + "\n";
}

AccuracyReport AccuracyReport::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("report file is not valid JSON: ") + e.what());
    }
    AccuracyReport report;
    try {
        report.ring_counts = j.at("ring_counts").get<std::array<int, 4>>();
        report.misses = j.at("misses").get<int>();
        report.high_accuracy_rate_pct = j.at("high_accuracy_rate_pct").get<double>();
        report.average_deviation_mm = j.at("average_deviation_mm").get<double>();
        report.mode = guidance_from_name(j.at("mode").get<std::string>());
        report.trials = j.at("trials").get<int>();
        report.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("report file field error: ") + e.what());
    }
    return report;
}

} // namespace spinenav
