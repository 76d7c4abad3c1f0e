#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cavforge/align.hpp"
#include "cavforge/bayes.hpp"
#include "cavforge/frame.hpp"
#include "cavforge/layout.hpp"
#include "cavforge/spatial.hpp"
#include "cavforge/vision.hpp"
#include "cavforge/workspace.hpp"

namespace cavforge {

enum class StepId : int {
    None = 0,
    ScatterInit = 1,
    PlaceCamsNDF = 2,
    PlaceOC_SpatialOpt = 3,
    PlaceBB = 4,
    PlaceBS_Reference = 5,
    RemoveBB_AngularOptOC = 6,
    RemoveBS_PlaceLens_SpatialOpt = 7,
    PlaceIC = 8,
    AngularOptIC = 9,
    PlaceBPF = 10,
    PlaceCrystal = 11,
    LasingVerified = 12,
};

std::string_view to_string(StepId step);

struct Event {
    int step = 0;
    std::string action;
    std::vector<std::pair<std::string, double>> measurement;
    std::uint64_t index = 0;  // workspace action count when logged
    std::string detail;
};

struct Baseline {
    double i_over_m2 = 0.0;
    double sqrt_i_over_m2 = 0.0;
    double intensity = 0.0;
    double m_squared = 1.0;
    int mode_order = 0;
    double output_power = 0.0;
    vision::PixelPoint centroid;
};

struct PipelineState {
    StepId current_step = StepId::None;
    Workspace ws;
    std::map<std::string, CameraFrame> reference_frames;
    std::map<std::string, vision::PixelPoint> reference_centroids;
    std::optional<Baseline> baseline;
    std::vector<Event> log;
    BeamLine beam_path;
    std::map<std::string, Pose> parked;  // scattered, not yet placed
    std::string main_camera;
    std::string side_camera;
};

struct PowerCurve {
    double threshold = 0.0;
    double slope = 0.0;
    std::vector<std::pair<double, double>> points;  // (pump power, output power)
};

/// Fits output = slope * (P - threshold) for P above threshold and zero below.
/// Throws NoLasing if every output is zero.
PowerCurve fit_power_curve(std::span<const std::pair<double, double>> points);
PowerCurve measure_power_curve(const Workspace& ws, std::span<const double> pump_powers);

struct PipelineConfig {
    std::vector<double> path_x_mm{150.0, 300.0, 450.0, 600.0, 750.0};
    SpatialOptConfig spatial;
    double bs_tolerance_fraction = 0.1;  // of the side camera's sensor width
    AngularOptConfig resonator;
    double sweep_min_deg = 0.1;
    double sweep_max_deg = 2.9;
    double sweep_step_deg = 0.2;
    AngularOptConfig mode = default_mode_config();
    int power_points = 11;

    static AngularOptConfig default_mode_config();
};

class PipelineError : public Error {
public:
    PipelineError(StepId step, ErrorCode code, const std::string& what, PipelineState state)
        : Error(code, what), step_(step), state_(std::move(state)) {}

    StepId step() const noexcept { return step_; }
    const PipelineState& state() const noexcept { return state_; }

private:
    StepId step_;
    PipelineState state_;
};

using StepCallback = std::function<void(const PipelineState&)>;

/// Builds the resonator from a layout, one verified step at a time. Throws
/// PipelineError carrying the failing step and the partial state.
PipelineState run_construction(const Layout& layout, std::uint64_t seed, const PipelineConfig& cfg = {},
                               const StepCallback& on_step = {});

/// Laser intensity, M^2 and centroid on the main camera.
Baseline measure_baseline(const Workspace& ws, std::string_view camera_id);

enum class Surveillance { Ok, Displacement, SignalLost };
std::string_view to_string(Surveillance s);

struct SurveillanceResult {
    Surveillance kind = Surveillance::Ok;
    std::vector<Displacement> displaced;
};

SurveillanceResult surveillance_tick(const PipelineState& state, double tolerance_mm = 1.0);

struct RecoveryReport {
    std::string scenario;  // "displacement", "drift" or "none"
    bool success = false;
    int placements = 0;           // pick-and-place operations
    int realign_attempts = 0;     // re-grips after the first placement
    int iterations = 0;           // optimizer evaluations
    std::uint64_t actions = 0;    // workspace actions spent
    double ratio = 0.0;           // final I/M^2 over baseline
    double best_ratio = 0.0;
    std::vector<std::string> components;
    int mode_order = -1;
    OptTrace trace;
};

RecoveryReport recover_displacement(PipelineState& state, int max_attempts = 10, double tolerance_mm = 1.0);

struct DriftConfig {
    AngularOptConfig bo = default_bo();
    double threshold = 0.9;

    static AngularOptConfig default_bo();
};

RecoveryReport recover_drift(PipelineState& state, const DriftConfig& cfg = {});

/// Runs surveillance and dispatches to the matching protocol.
RecoveryReport recover(PipelineState& state, int max_attempts = 10, const DriftConfig& drift = {});

}  // namespace cavforge
