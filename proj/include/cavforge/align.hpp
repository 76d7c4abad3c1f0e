#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cavforge/bayes.hpp"
#include "cavforge/frame.hpp"
#include "cavforge/opt_trace.hpp"
#include "cavforge/vision.hpp"
#include "cavforge/workspace.hpp"

namespace cavforge {

struct KnobRef {
    std::string id;
    KnobAxis axis = KnobAxis::H;
};

/// Both knobs of every listed mirror, H before V.
std::vector<KnobRef> knobs_of(std::span<const std::string> mirror_ids);

struct AlignResult {
    Workspace ws;
    OptTrace trace;
    std::vector<double> knobs;  // applied readings, in KnobRef order
    double best_cost = 0.0;
};

/// Overlaps the secondary beam with the primary on `camera_id` by turning the
/// two knobs of `mirror_id`. The cost is the pixel distance between the
/// centroid of (live - reference) and the reference centroid; a missing
/// secondary costs twice the sensor diagonal.
AlignResult align_resonator(Workspace ws, std::string_view mirror_id, std::string_view camera_id,
                            const CameraFrame& reference, AngularOptConfig cfg = {});

struct SweepResult {
    Workspace ws;  // crystal left at best_theta
    double best_theta = 0.0;
    std::vector<std::pair<double, double>> profile;  // (theta deg, total intensity)
};

/// Steps the crystal over theta_min, theta_min + step, ... <= theta_max and
/// records the camera's total intensity. Throws NoLasing if it is zero
/// everywhere.
SweepResult crystal_sweep(Workspace ws, std::string_view camera_id, double theta_min, double theta_max,
                          double step = 0.2);

enum class ModeObjective { SqrtIOverM2, IOverM2 };

struct ModeMeasurement {
    double intensity = 0.0;
    double m_squared = 1.0;
    double objective = 0.0;  // 0 when no laser is detected
    bool detected = false;
};

/// Laser intensity and beam quality on a camera. The M^2 reference width is
/// the fundamental laser mode's.
ModeMeasurement measure_mode(const Workspace& ws, std::string_view camera_id, ModeObjective kind);

struct ModeResult {
    Workspace ws;
    OptTrace trace;
    std::vector<double> knobs;
    ModeMeasurement best;
};

/// Maximizes the mode objective over the given knobs. Stops early once the
/// objective reaches `target` if one is given.
ModeResult optimize_mode(Workspace ws, std::span<const KnobRef> knobs, std::string_view camera_id,
                         ModeObjective kind, AngularOptConfig cfg, std::optional<double> target = std::nullopt);

}  // namespace cavforge
