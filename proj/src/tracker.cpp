#include "spinenav/tracker.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

namespace spinenav {

TrackerState::TrackerState(const std::vector<MarkerSpec>& specs) {
    for (const MarkerSpec& spec : specs) {
        spec.validate();
        if (!specs_.emplace(spec.id, spec).second) {
            throw ConfigError("duplicate marker id in registry: " + std::to_string(spec.id));
        }
        objects_.emplace(spec.id, TrackedObject{spec.id, std::nullopt, false, 0});
    }
}

std::vector<int> TrackerState::active_ids() const {
    std::vector<int> ids;
    for (const auto& [id, object] : objects_) {
        if (object.active) {
            ids.push_back(id);
        }
    }
    return ids;
}

std::vector<TrackerEvent> tracker_step(TrackerState& state, const TrackerConfig& config,
                                       int frame,
                                       std::span<const MarkerObservation> observations,
                                       const CameraIntrinsics& cam) {
    config.validate();
    std::vector<TrackerEvent> events;

    // First observation per registered id wins; later duplicates are ignored.
    std::map<int, const MarkerObservation*> detected;
    for (const MarkerObservation& obs : observations) {
        if (!state.specs().contains(obs.id)) {
            events.push_back({frame, obs.id, TrackerEventKind::UnknownMarker});
            continue;
        }
        detected.try_emplace(obs.id, &obs);
    }

    for (auto& [id, object] : state.objects()) {
        const auto it = detected.find(id);
        bool measured = false;
        RigidTransform measurement;
        if (it != detected.end()) {
            try {
                measurement = estimate_marker_pose(*it->second, state.specs().at(id), cam);
                measured = true;
            } catch (const EstimationError&) {
                events.push_back({frame, id, TrackerEventKind::EstimationFailed});
            }
        }

        if (measured) {
            const bool was_inactive_with_pose = !object.active && object.pose.has_value();
            if (object.pose.has_value() && object.active) {
                object.pose = smooth_pose(*object.pose, measurement, config.beta);
            } else {
                // First detection, or reactivation after a deactivation:
                // adopt the raw measurement to avoid a stale-pose transient.
                object.pose = measurement;
                if (was_inactive_with_pose) {
                    events.push_back({frame, id, TrackerEventKind::Reactivated});
                }
            }
            object.active = true;
            object.miss_count = 0;
        } else {
            ++object.miss_count;
            if (object.active && config.auto_disable && object.miss_count >= config.t_miss) {
                object.active = false;
                events.push_back({frame, id, TrackerEventKind::Deactivated});
            }
        }
    }

    std::sort(events.begin(), events.end(), [](const TrackerEvent& a, const TrackerEvent& b) {
        return a.id < b.id || (a.id == b.id && a.kind < b.kind);
    });
    return events;
}

namespace {

const char* event_name(TrackerEventKind kind) {
    switch (kind) {
    case TrackerEventKind::Deactivated:
        return "deactivated";
    case TrackerEventKind::Reactivated:
        return "reactivated";
    case TrackerEventKind::EstimationFailed:
        return "estimation_failed";
    case TrackerEventKind::UnknownMarker:
        return "unknown_marker";
    }
    return "unknown";
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

MarkerObservation parse_observation_line(const std::string& line, std::size_t line_number) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("observation stream line " + std::to_string(line_number) +
                         " is not valid JSON: " + e.what());
    }
    MarkerObservation obs;
    try {
        obs.frame = j.at("frame").get<int>();
        obs.id = j.at("id").get<int>();
        const auto& corners = j.at("corners");
        if (!corners.is_array() || corners.size() != 4) {
            throw ParseError("observation stream line " + std::to_string(line_number) +
                             ": \"corners\" must be an array of 4 [u, v] pairs");
        }
        for (int i = 0; i < 4; ++i) {
            obs.corners[i] = {corners[i].at(0).get<double>(), corners[i].at(1).get<double>()};
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("observation stream line " + std::to_string(line_number) +
                         " field error: " + e.what());
    }
    return obs;
}

std::string pose_record_line(int frame, const TrackedObject& object) {
    const RigidTransform& pose = object.pose.value();
    std::string out = "{\"frame\":" + std::to_string(frame) +
                      ",\"id\":" + std::to_string(object.id) +
                      ",\"active\":" + (object.active ? "true" : "false") + ",\"q\":[";
    out += format_double(pose.rotation.w) + ',' + format_double(pose.rotation.x) + ',' +
           format_double(pose.rotation.y) + ',' + format_double(pose.rotation.z);
    out += "],\"t\":[";
    out += format_double(pose.translation.x) + ',' + format_double(pose.translation.y) +
           ',' + format_double(pose.translation.z);
    out += "]}";
    return out;
}

std::string event_record_line(const TrackerEvent& event) {
    return "{\"frame\":" + std::to_string(event.frame) +
           ",\"id\":" + std::to_string(event.id) + ",\"event\":\"" +
           event_name(event.kind) + "\"}";
}

std::vector<std::string> replay_observation_stream(
    const std::vector<MarkerObservation>& observations, const TrackerConfig& config,
    const std::vector<MarkerSpec>& specs, const CameraIntrinsics& cam) {
    std::vector<std::string> lines;
    if (observations.empty()) {
        return lines;
    }
    std::map<int, std::vector<MarkerObservation>> by_frame;
    for (const MarkerObservation& obs : observations) {
        by_frame[obs.frame].push_back(obs);
    }
    const int first = by_frame.begin()->first;
    const int last = by_frame.rbegin()->first;

    TrackerState state(specs);
    static const std::vector<MarkerObservation> kNone;
    for (int frame = first; frame <= last; ++frame) {
        const auto it = by_frame.find(frame);
        const auto& frame_obs = it != by_frame.end() ? it->second : kNone;
        const std::vector<TrackerEvent> events =
            tracker_step(state, config, frame, frame_obs, cam);
        for (const auto& [id, object] : state.objects()) {
            if (object.pose.has_value()) {
                lines.push_back(pose_record_line(frame, object));
            }
        }
        for (const TrackerEvent& event : events) {
            lines.push_back(event_record_line(event));
        }
    }
    return lines;
}

} // namespace spinenav
