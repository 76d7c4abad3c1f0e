#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cavforge/opt_trace.hpp"
#include "cavforge/vision.hpp"
#include "cavforge/workspace.hpp"

namespace cavforge {

struct SpatialOptConfig {
    double probe_dx = 0.3;  // mm; must exceed the arm's placement noise
    int max_iters = 10;
    double dy_min = 1e-6;   // mm; smaller probe responses count as no response
    double max_step_mm = 60.0;  // corrective moves are clamped to this magnitude
    // Termination radius in mm. Unset means the beam waist at the camera.
    std::optional<double> tolerance_mm;
};

/// Corrective move after a probe. y is the error before the probe, dx the probe
/// move and dy the error change it caused. The returned -dx (y + dy) / dy is
/// relative to the probed position. Throws DegenerateResponse when |dy| < dy_min.
double newton_correction(double y, double dx, double dy, double dy_min = 1e-6);

/// A 1-D actuator with a scalar error sensor. measure() returns the signed
/// beam-to-target offset in mm, or nothing if the beam is not detected.
class SpatialPlant {
public:
    virtual ~SpatialPlant() = default;
    virtual double commanded() const = 0;
    virtual void move_to(double position) = 0;
    virtual std::optional<double> measure() = 0;
};

/// Probe-and-correct loop. Throws OptimizationError(BeamLost) if the beam
/// disappears and propagates DegenerateResponse with the trace attached.
OptTrace spatial_search(SpatialPlant& plant, const SpatialOptConfig& cfg, double tolerance_mm);

struct SpatialResult {
    Workspace ws;
    OptTrace trace;
    double commanded_y = 0.0;       // where the arm believes the component is
    double final_error_mm = 0.0;    // signed horizontal beam-to-target offset
};

/// Moves `component_id` transversely until the beam on `camera_id` sits on
/// `target_px` (horizontal axis).
SpatialResult spatial_optimize(Workspace ws, std::string_view component_id, std::string_view camera_id,
                               vision::PixelPoint target_px, const SpatialOptConfig& cfg = {});

struct BeamLine {
    double slope = 0.0;
    double intercept = 0.0;
    double rms_residual = 0.0;

    double at(double x) const { return intercept + slope * x; }
};

struct PathSample {
    double x = 0.0;
    double y = 0.0;
};

/// Ordinary least squares y = intercept + slope x.
BeamLine fit_beam_path(std::span<const PathSample> samples);

struct BeamPathResult {
    Workspace ws;
    BeamLine line;
    std::vector<PathSample> samples;
};

/// Carries the camera to each x, centers the beam by moving the camera, and
/// fits the recorded beam centers.
BeamPathResult measure_beam_path(Workspace ws, std::string_view camera_id, std::span<const double> x_positions,
                                 const SpatialOptConfig& cfg = {});

}  // namespace cavforge
