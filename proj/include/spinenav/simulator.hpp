#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "spinenav/overlay.hpp"

namespace spinenav {

enum class GuidanceMode { Baseline, SingleMarker, DualMarker };

const char* guidance_mode_name(GuidanceMode mode);

/// Concentric detector rings around the needle target. Ring j (1-based)
/// catches planar offsets in [outer_radii[j-2], outer_radii[j-1]); anything
/// at or beyond the last radius is a miss. Deviation scoring uses the ring
/// midpoints, with misses contributing miss_deviation_mm.
struct DetectorRings {
    std::array<double, 4> outer_radii_mm{1.0, 5.0, 10.0, 20.0};
    std::array<double, 4> midpoints_mm{0.5, 3.0, 7.5, 15.0};
    double miss_deviation_mm = 20.0;

    void validate() const;
};

/// Blind-aim planar sigma whose Rayleigh CDF puts 20% of insertions inside
/// the 1 mm ring: 1 / sqrt(-2 ln 0.8).
double calibrated_blind_sigma_mm();

/// One simulated operating-room setup. All lengths in millimeters, angles in
/// radians; rotations as unit quaternions in JSON.
struct Scenario {
    FiducialLayout layout;
    Vec3 target;                                   // model frame (mm)
    CameraIntrinsics camera;
    std::vector<RigidTransform> model_pose_per_frame; // model -> camera
    std::vector<MarkerSpec> markers;
    double pixel_noise_px = 0.0;      // corner observation noise
    double placement_noise_mm = 0.0;  // marker placement error at the fiducial sites
    double hand_noise_mm = 0.0;       // operator error, isotropic in the detector plane
    double model_error_mm = 0.0;      // per-trial overlay bias magnitude
    double blind_sigma_mm = 0.0;      // 0 -> calibrated default
    std::map<int, std::set<int>> occlusion; // frame index -> hidden marker ids
    int trials = 50;
    std::uint64_t seed = 0;
    GuidanceMode guidance = GuidanceMode::DualMarker;
    TrackerConfig tracker;
    DetectorRings rings;

    void validate() const;

    static Scenario from_json_text(const std::string& text);
    std::string to_json_text() const;
};

struct TrialResult {
    int trial = 0;
    Vec2 planar_offset_mm{};          // needle landing minus target, detector plane
    std::optional<int> ring;          // 1..4, nullopt = miss
    bool overlay_lost = false;        // guided trial with no usable overlay
};

struct AccuracyReport {
    std::array<int, 4> ring_counts{};
    int misses = 0;
    double high_accuracy_rate_pct = 0.0;
    double average_deviation_mm = 0.0;
    GuidanceMode mode = GuidanceMode::DualMarker;
    int trials = 0;
    std::uint64_t seed = 0;

    std::string to_json_text() const;
    static AccuracyReport from_json_text(const std::string& text);
};

/// Smallest ring with |offset| strictly below its outer radius; nullopt at
/// or beyond the last radius.
std::optional<int> classify_insertion(const Vec2& planar_offset_mm,
                                      const DetectorRings& rings);

/// Runs scenario.trials independent trials, each seeded from
/// (scenario.seed, trial): perturbs the marker placements, projects noisy
/// corner observations frame by frame (dropping occluded or out-of-image
/// markers), replays them through the tracker, computes the overlay, and
/// scores the aimed insertion against the detector rings. Baseline guidance
/// skips the marker chain and aims with the blind sigma. Bit-identical for a
/// fixed seed; the same seed exposes identical noise draws to every guidance
/// mode.
///
/// The tracker's low-pass filter lags when model_pose_per_frame moves
/// between frames, so the zero-noise offset is exactly zero only for a scene
/// held static (the insertion protocol this reproduces).
std::vector<TrialResult> run_trials(const Scenario& scenario);

/// Ring counts, high-accuracy rate (100 * ring-1 / trials), and the
/// midpoint-model average deviation. Throws ConfigError on empty input.
AccuracyReport summarize(const std::vector<TrialResult>& results,
                         const DetectorRings& rings);

/// run_trials + summarize with mode/trials/seed filled in.
AccuracyReport simulate_scenario(const Scenario& scenario);

struct ReportDiff {
    std::array<int, 4> ring_deltas{};
    int miss_delta = 0;
    double rate_delta_pct = 0.0;
    double deviation_delta_mm = 0.0;
};

/// Per-ring deltas against reference counts (report minus reference); the
/// reference rate and deviation are derived with the same midpoint model.
/// Throws ConfigError when the trial totals differ.
ReportDiff compare_report(const AccuracyReport& report,
                          const std::array<int, 4>& reference_ring_counts,
                          int reference_misses, const DetectorRings& rings);

} // namespace spinenav
