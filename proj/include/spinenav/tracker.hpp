#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spinenav/marker.hpp"

namespace spinenav {

struct TrackerConfig {
    int t_miss = 5;           // consecutive missed frames before deactivation
    double beta = 0.5;        // pose smoothing coefficient, in (0, 1]
    bool auto_disable = true;

    void validate() const {
        if (t_miss < 1) {
            throw ConfigError("tracker t_miss must be >= 1");
        }
        if (!(beta > 0.0 && beta <= 1.0)) {
            throw ConfigError("tracker beta must lie in (0, 1]");
        }
    }
};

/// Per-marker tracking state. A marker starts inactive with no pose; it
/// becomes active on its first successful detection.
struct TrackedObject {
    int id = 0;
    std::optional<RigidTransform> pose; // marker->camera, low-pass filtered
    bool active = false;
    int miss_count = 0;
};

enum class TrackerEventKind { Deactivated, Reactivated, EstimationFailed, UnknownMarker };

struct TrackerEvent {
    int frame = 0;
    int id = 0;
    TrackerEventKind kind = TrackerEventKind::Deactivated;
};

/// Registry of tracked markers for one camera stream. Frames must be
/// processed in order; distinct streams use distinct registries.
class TrackerState {
public:
    explicit TrackerState(const std::vector<MarkerSpec>& specs);

    const std::map<int, TrackedObject>& objects() const { return objects_; }
    std::map<int, TrackedObject>& objects() { return objects_; }
    const std::map<int, MarkerSpec>& specs() const { return specs_; }
    std::vector<int> active_ids() const;

    TrackedObject& object(int id) { return objects_.at(id); }
    const TrackedObject& object(int id) const { return objects_.at(id); }

private:
    std::map<int, TrackedObject> objects_;
    std::map<int, MarkerSpec> specs_;
};

/// One frame of the tracking loop:
///   - each detected registered marker gets its pose estimated and low-pass
///     smoothed against the prior pose (a first detection, or a redetection
///     after deactivation, adopts the raw measurement); it is marked active
///     with miss_count reset to 0;
///   - each registered marker not detected this frame has miss_count
///     incremented; once miss_count reaches t_miss with auto_disable on, the
///     marker is deactivated (Deactivated event);
///   - a pose-estimation failure counts as a non-detection for that marker
///     (EstimationFailed event); observations with unregistered ids are
///     ignored (UnknownMarker event).
///
/// Returns the frame's events, ordered by marker id.
std::vector<TrackerEvent> tracker_step(TrackerState& state, const TrackerConfig& config,
                                       int frame,
                                       std::span<const MarkerObservation> observations,
                                       const CameraIntrinsics& cam);

// --- Offline replay stream formats (line-delimited JSON) ---

/// Parses `{"frame": f, "id": i, "corners": [[u,v],[u,v],[u,v],[u,v]]}`.
/// Throws ParseError naming `line_number` on malformed records.
MarkerObservation parse_observation_line(const std::string& line, std::size_t line_number);

/// `{"frame": f, "id": i, "active": bool, "q": [w,x,y,z], "t": [x,y,z]}`.
std::string pose_record_line(int frame, const TrackedObject& object);

/// `{"frame": f, "id": i, "event": "deactivated" | ...}`.
std::string event_record_line(const TrackerEvent& event);

/// Replays an observation stream through the tracker. Frames run from the
/// lowest to the highest frame number present (inclusive); a frame with no
/// records counts as a miss for every marker. Emits, per frame, one pose
/// record for every registered marker that has a pose (sorted by id)
/// followed by the frame's event records. Returns the emitted lines.
std::vector<std::string> replay_observation_stream(
    const std::vector<MarkerObservation>& observations, const TrackerConfig& config,
    const std::vector<MarkerSpec>& specs, const CameraIntrinsics& cam);

} // namespace spinenav
