#include "cavforge/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "cavforge/beam.hpp"

namespace cavforge {

double newton_correction(double y, double dx, double dy, double dy_min) {
    if (dx == 0.0) throw Error(ErrorCode::InvalidArgument, "probe step must be non-zero");
    if (!(std::abs(dy) >= dy_min)) {
        throw Error(ErrorCode::DegenerateResponse, "beam did not respond to the probe move");
    }
    return -dx * (y + dy) / dy;
}

std::vector<double> OptTrace::best_so_far() const {
    std::vector<double> out;
    out.reserve(iterations.size());
    double best = 0.0;
    for (std::size_t i = 0; i < iterations.size(); ++i) {
        best = i == 0 ? iterations[i].objective : std::min(best, iterations[i].objective);
        out.push_back(best);
    }
    return out;
}

namespace {

void record(OptTrace& trace, double position, double error, const char* action) {
    trace.iterations.push_back({{position}, {error}, std::abs(error), action});
}

double measure_or_throw(SpatialPlant& plant, OptTrace& trace) {
    auto y = plant.measure();
    if (!y) {
        throw OptimizationError(ErrorCode::BeamLost, "beam lost from the detection camera", std::move(trace));
    }
    return *y;
}

class WorkspacePlant final : public SpatialPlant {
public:
    WorkspacePlant(Workspace& ws, std::string component, std::string camera, vision::PixelPoint target)
        : ws_(ws), component_(std::move(component)), camera_(std::move(camera)), target_(target) {
        const Component& c = ws_.get(component_);
        commanded_ = c.pose;
    }

    double commanded() const override { return commanded_.y; }

    void move_to(double position) override {
        // Translation while gripped keeps the current orientation.
        commanded_.y = position;
        commanded_.yaw = ws_.get(component_).pose.yaw;
        ws_ = move_component(std::move(ws_), component_, commanded_);
    }

    std::optional<double> measure() override {
        const Component& cam = ws_.get(camera_);
        auto c = vision::centroid(capture(ws_, camera_));
        if (!c) return std::nullopt;
        return vision::pixels_to_mm(c->px - target_.px, cam.params.camera.pixel_pitch_mm);
    }

private:
    Workspace& ws_;
    std::string component_;
    std::string camera_;
    vision::PixelPoint target_;
    Pose commanded_;
};

}  // namespace

OptTrace spatial_search(SpatialPlant& plant, const SpatialOptConfig& cfg, double tolerance_mm) {
    if (cfg.max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be >= 1");
    if (!(cfg.max_step_mm > 0.0)) throw Error(ErrorCode::InvalidArgument, "max_step_mm must be positive");
    OptTrace trace;
    double y = measure_or_throw(plant, trace);
    record(trace, plant.commanded(), y, "measure");
    if (std::abs(y) < tolerance_mm) {
        trace.converged = true;
        return trace;
    }
    double best_pos = plant.commanded();
    double best_err = y;
    for (int it = 0; it < cfg.max_iters; ++it) {
        const double start = plant.commanded();
        plant.move_to(start + cfg.probe_dx);
        ++trace.wall_actions;
        const double probed = measure_or_throw(plant, trace);
        record(trace, plant.commanded(), probed, "probe");
        double step = 0.0;
        try {
            step = newton_correction(y, cfg.probe_dx, probed - y, cfg.dy_min);
        } catch (const Error& e) {
            throw OptimizationError(e.code(), e.what(), std::move(trace));
        }
        step = std::clamp(step, -cfg.max_step_mm, cfg.max_step_mm);
        plant.move_to(start + cfg.probe_dx + step);
        ++trace.wall_actions;
        ++trace.iters_used;
        auto corrected = plant.measure();
        if (corrected && std::abs(*corrected) < std::abs(best_err)) {
            y = *corrected;
            best_pos = plant.commanded();
            best_err = y;
            record(trace, best_pos, y, "correct");
        } else {
            // A noisy probe misjudged the gain: the step made things worse or
            // pushed the beam off the sensor. Return to the best position.
            if (corrected) {
                record(trace, plant.commanded(), *corrected, "correct");
            } else {
                trace.iterations.push_back({{plant.commanded()}, {}, std::numeric_limits<double>::infinity(), "lost"});
            }
            plant.move_to(best_pos);
            ++trace.wall_actions;
            y = measure_or_throw(plant, trace);
            best_err = y;
            record(trace, best_pos, y, "retreat");
        }
        if (std::abs(y) < tolerance_mm) {
            trace.converged = true;
            break;
        }
    }
    return trace;
}

SpatialResult spatial_optimize(Workspace ws, std::string_view component_id, std::string_view camera_id,
                               vision::PixelPoint target_px, const SpatialOptConfig& cfg) {
    ws.get(component_id);
    const Component& cam = ws.get(camera_id);
    if (cam.kind != Kind::Camera) throw Error(ErrorCode::InvalidArgument, "'" + cam.id + "' is not a camera");
    double tol = cfg.tolerance_mm ? *cfg.tolerance_mm : beam_waist_at(ws, camera_id);
    WorkspacePlant plant(ws, std::string(component_id), std::string(camera_id), target_px);
    OptTrace trace = spatial_search(plant, cfg, tol);
    SpatialResult out{ws, std::move(trace), plant.commanded(), 0.0};
    out.final_error_mm = out.trace.iterations.back().measurement.front();
    return out;
}

BeamLine fit_beam_path(std::span<const PathSample> samples) {
    std::set<double> xs;
    for (const auto& s : samples) xs.insert(s.x);
    if (xs.size() < 2) throw Error(ErrorCode::InvalidArgument, "beam path fit needs at least two distinct x");
    const double n = static_cast<double>(samples.size());
    double mx = 0.0, my = 0.0;
    for (const auto& s : samples) {
        mx += s.x;
        my += s.y;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& s : samples) {
        sxx += (s.x - mx) * (s.x - mx);
        sxy += (s.x - mx) * (s.y - my);
    }
    BeamLine line;
    line.slope = sxy / sxx;
    line.intercept = my - line.slope * mx;
    double ss = 0.0;
    for (const auto& s : samples) {
        double r = s.y - line.at(s.x);
        ss += r * r;
    }
    line.rms_residual = std::sqrt(ss / n);
    return line;
}

BeamPathResult measure_beam_path(Workspace ws, std::string_view camera_id, std::span<const double> x_positions,
                                 const SpatialOptConfig& cfg) {
    const Component& cam = ws.get(camera_id);
    if (cam.kind != Kind::Camera) throw Error(ErrorCode::InvalidArgument, "'" + cam.id + "' is not a camera");
    const CameraSpec spec = cam.params.camera;
    const vision::PixelPoint center{spec.width / 2.0, spec.height / 2.0};
    BeamPathResult out{std::move(ws), {}, {}};
    double guess = out.ws.get(camera_id).pose.y;
    for (double x : x_positions) {
        if (out.samples.size() >= 2) guess = fit_beam_path(out.samples).at(x);
        Pose target = out.ws.get(camera_id).pose;
        target.x = x;
        target.y = guess;
        out.ws = move_component(std::move(out.ws), camera_id, target);
        SpatialResult sr;
        try {
            sr = spatial_optimize(std::move(out.ws), camera_id, camera_id, center, cfg);
        } catch (const OptimizationError& e) {
            throw Error(ErrorCode::BeamLost, "beam not detected at x = " + std::to_string(x) + " mm: " + e.what());
        }
        out.ws = std::move(sr.ws);
        // Beam hits the sensor at (beam - camera); the camera sits at the commanded y.
        out.samples.push_back({x, sr.commanded_y + sr.final_error_mm});
        guess = out.samples.back().y;
    }
    out.line = fit_beam_path(out.samples);
    return out;
}

}  // namespace cavforge
