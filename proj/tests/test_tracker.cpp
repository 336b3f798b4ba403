#include <doctest.h>

#include "spinenav/errors.hpp"
#include "spinenav/tracker.hpp"
#include "support/oracles.hpp"

using namespace spinenav;

namespace {

const CameraIntrinsics kCam{800.0, 800.0, 640.0, 360.0, 1280, 720};
const std::vector<MarkerSpec> kSpecs = {{1, 50.0}, {2, 50.0}};

MarkerObservation observe(const RigidTransform& pose, int id, int frame) {
    MarkerObservation obs;
    obs.frame = frame;
    obs.id = id;
    const std::array<Vec3, 4> corners = marker_corners_local(50.0);
    for (int i = 0; i < 4; ++i) {
        const Vec3 p = pose.apply(corners[i]);
        obs.corners[i] = test::oracle_project(kCam.fx, kCam.fy, kCam.cx, kCam.cy, p);
    }
    return obs;
}

const RigidTransform kPoseA{UnitQuaternion::from_axis_angle({1, 0, 0}, 0.2), {40, 20, 600}};
const RigidTransform kPoseB{UnitQuaternion::from_axis_angle({0, 1, 0}, -0.3),
                            {-80, 10, 700}};

bool contains_event(const std::vector<TrackerEvent>& events, int id,
                    TrackerEventKind kind) {
    for (const TrackerEvent& e : events) {
        if (e.id == id && e.kind == kind) {
            return true;
        }
    }
    return false;
}

} // namespace

TEST_CASE("marker deactivates after t_miss consecutive misses") {
    TrackerState state(kSpecs);
    TrackerConfig config{5, 0.5, true};

    auto events = tracker_step(state, config, 0, std::vector<MarkerObservation>{
                                                     observe(kPoseA, 1, 0)},
                               kCam);
    CHECK(events.empty());
    CHECK(state.object(1).active);
    CHECK(state.object(1).miss_count == 0);

    for (int frame = 1; frame <= 5; ++frame) {
        events = tracker_step(state, config, frame, {}, kCam);
        if (frame < 5) {
            CHECK(state.object(1).active);
            CHECK(events.empty());
        }
    }
    CHECK_FALSE(state.object(1).active);
    CHECK(state.object(1).miss_count == 5);
    CHECK(contains_event(events, 1, TrackerEventKind::Deactivated));
    // Pose is retained while deactivated.
    CHECK(state.object(1).pose.has_value());
}

TEST_CASE("auto_disable off keeps the marker active with a frozen pose") {
    TrackerState state(kSpecs);
    TrackerConfig config{5, 0.5, false};
    tracker_step(state, config, 0,
                 std::vector<MarkerObservation>{observe(kPoseA, 1, 0)}, kCam);
    const RigidTransform frozen = state.object(1).pose.value();
    for (int frame = 1; frame <= 100; ++frame) {
        const auto events = tracker_step(state, config, frame, {}, kCam);
        CHECK(events.empty());
    }
    CHECK(state.object(1).active);
    CHECK(state.object(1).miss_count == 100);
    CHECK(state.object(1).pose->translation.x == frozen.translation.x);
    CHECK(state.object(1).pose->rotation.w == frozen.rotation.w);
}

TEST_CASE("first detection adopts the raw measurement") {
    TrackerState state(kSpecs);
    TrackerConfig config{5, 0.25, true};
    tracker_step(state, config, 0,
                 std::vector<MarkerObservation>{observe(kPoseA, 1, 0)}, kCam);
    const RigidTransform& pose = state.object(1).pose.value();
    CHECK((pose.translation - kPoseA.translation).norm() < 1e-6);
    CHECK(pose.rotation.angle_to(kPoseA.rotation) < 1e-6);
}

TEST_CASE("reactivation adopts the raw measurement and emits an event") {
    TrackerState state(kSpecs);
    TrackerConfig config{2, 0.5, true};
    tracker_step(state, config, 0,
                 std::vector<MarkerObservation>{observe(kPoseA, 1, 0)}, kCam);
    tracker_step(state, config, 1, {}, kCam);
    auto events = tracker_step(state, config, 2, {}, kCam);
    CHECK(contains_event(events, 1, TrackerEventKind::Deactivated));
    CHECK_FALSE(state.object(1).active);

    // Redetected at a different pose: no smoothing against the stale pose.
    events = tracker_step(state, config, 3,
                          std::vector<MarkerObservation>{observe(kPoseB, 1, 3)}, kCam);
    CHECK(contains_event(events, 1, TrackerEventKind::Reactivated));
    CHECK(state.object(1).active);
    CHECK(state.object(1).miss_count == 0);
    CHECK((state.object(1).pose->translation - kPoseB.translation).norm() < 1e-6);
}

TEST_CASE("continuous detection low-pass filters the pose") {
    TrackerState state(kSpecs);
    TrackerConfig config{5, 0.5, true};
    tracker_step(state, config, 0,
                 std::vector<MarkerObservation>{observe(kPoseA, 1, 0)}, kCam);
    tracker_step(state, config, 1,
                 std::vector<MarkerObservation>{observe(kPoseB, 1, 1)}, kCam);
    // One smoothing step: halfway between the two measurements.
    const Vec3 expected = (kPoseA.translation + kPoseB.translation) * 0.5;
    CHECK((state.object(1).pose->translation - expected).norm() < 1e-5);
}

TEST_CASE("unknown ids warn and are ignored") {
    TrackerState state(kSpecs);
    TrackerConfig config{5, 0.5, true};
    const auto events = tracker_step(
        state, config, 0, std::vector<MarkerObservation>{observe(kPoseA, 9, 0)}, kCam);
    CHECK(contains_event(events, 9, TrackerEventKind::UnknownMarker));
    CHECK_FALSE(state.objects().contains(9));
    CHECK(state.object(1).miss_count == 1);
}

TEST_CASE("estimation failure counts as a miss") {
    TrackerState state(kSpecs);
    TrackerConfig config{3, 0.5, true};
    MarkerObservation degenerate;
    degenerate.frame = 0;
    degenerate.id = 1;
    degenerate.corners = {Vec2{10, 10}, Vec2{20, 20}, Vec2{30, 30}, Vec2{40, 40}};
    const auto events =
        tracker_step(state, config, 0, std::vector<MarkerObservation>{degenerate}, kCam);
    CHECK(contains_event(events, 1, TrackerEventKind::EstimationFailed));
    CHECK_FALSE(state.object(1).active);
    CHECK(state.object(1).miss_count == 1);
}

TEST_CASE("state machine invariants against a reference model over random streams") {
    CounterRng rng(211, 0);
    const MarkerObservation obs1 = observe(kPoseA, 1, 0);
    const MarkerObservation obs2 = observe(kPoseB, 2, 0);
    for (int round = 0; round < 20; ++round) {
        TrackerConfig config{1 + static_cast<int>(rng.next_u64() % 4), 0.5,
                             (rng.next_u64() & 1) != 0};
        TrackerState state(kSpecs);
        // Reference: plain counters driven by the documented transition rules.
        struct Ref {
            bool active = false;
            bool has_pose = false;
            int miss = 0;
        };
        Ref ref[2];
        for (int frame = 0; frame < 40; ++frame) {
            const std::uint64_t subset = rng.next_u64() % 4;
            std::vector<MarkerObservation> frame_obs;
            if (subset & 1) {
                MarkerObservation o = obs1;
                o.frame = frame;
                frame_obs.push_back(o);
            }
            if (subset & 2) {
                MarkerObservation o = obs2;
                o.frame = frame;
                frame_obs.push_back(o);
            }
            tracker_step(state, config, frame, frame_obs, kCam);
            for (int m = 0; m < 2; ++m) {
                const bool seen = (subset >> m) & 1;
                if (seen) {
                    ref[m].active = true;
                    ref[m].has_pose = true;
                    ref[m].miss = 0;
                } else {
                    ++ref[m].miss;
                    if (ref[m].active && config.auto_disable && ref[m].miss >= config.t_miss) {
                        ref[m].active = false;
                    }
                }
                const TrackedObject& object = state.object(m + 1);
                CHECK(object.active == ref[m].active);
                CHECK(object.miss_count == ref[m].miss);
                CHECK(object.pose.has_value() == ref[m].has_pose);
            }
        }
    }
}

TEST_CASE("observation line parsing: valid record and located failures") {
    const MarkerObservation obs = parse_observation_line(
        R"({"frame": 3, "id": 7, "corners": [[1,2],[3,4],[5,6],[7,8]]})", 12);
    CHECK(obs.frame == 3);
    CHECK(obs.id == 7);
    CHECK(obs.corners[3].x == 7.0);

    try {
        parse_observation_line("not json", 42);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("42") != std::string::npos);
    }
    CHECK_THROWS_AS(
        parse_observation_line(R"({"frame": 1, "id": 2, "corners": [[1,2]]})", 1),
        ParseError);
}

TEST_CASE("replay emits pose records and events across frame gaps") {
    TrackerConfig config{2, 1.0, true};
    std::vector<MarkerObservation> stream;
    stream.push_back(observe(kPoseA, 1, 0));
    stream.push_back(observe(kPoseA, 1, 1));
    // Frames 2..4 absent entirely, then redetection at 5.
    stream.push_back(observe(kPoseB, 1, 5));

    const std::vector<std::string> lines =
        replay_observation_stream(stream, config, kSpecs, kCam);
    REQUIRE_FALSE(lines.empty());

    std::size_t deactivated = 0, reactivated = 0, pose_records = 0;
    for (const std::string& line : lines) {
        if (line.find("\"event\":\"deactivated\"") != std::string::npos) {
            ++deactivated;
        }
        if (line.find("\"event\":\"reactivated\"") != std::string::npos) {
            ++reactivated;
        }
        if (line.find("\"q\":[") != std::string::npos) {
            ++pose_records;
        }
    }
    CHECK(deactivated == 1);
    CHECK(reactivated == 1);
    // Marker 1 has a pose from frame 0 through 5 inclusive.
    CHECK(pose_records == 6);

    CHECK(replay_observation_stream({}, config, kSpecs, kCam).empty());
}
