#include "cavforge/align.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cavforge/beam.hpp"

namespace cavforge {

namespace {

double reading(const Workspace& ws, const KnobRef& k) {
    const Component& c = ws.get(k.id);
    if (!c.knobs) throw Error(ErrorCode::NoKnobs, "'" + c.id + "' has no knobs");
    return k.axis == KnobAxis::H ? c.knobs->knob_h : c.knobs->knob_v;
}

Workspace apply(Workspace ws, std::span<const KnobRef> knobs, const std::vector<double>& values) {
    for (std::size_t i = 0; i < knobs.size(); ++i) {
        ws = set_knob(std::move(ws), knobs[i].id, knobs[i].axis, values[i]);
    }
    return ws;
}

std::vector<Interval> around(const Workspace& ws, std::span<const KnobRef> knobs, double half_width) {
    std::vector<Interval> b;
    for (const auto& k : knobs) {
        double r = reading(ws, k);
        b.push_back({r - half_width, r + half_width});
    }
    return b;
}

const Component& require_camera(const Workspace& ws, std::string_view id) {
    const Component& cam = ws.get(id);
    if (cam.kind != Kind::Camera) throw Error(ErrorCode::InvalidArgument, "'" + cam.id + "' is not a camera");
    return cam;
}

}  // namespace

std::vector<KnobRef> knobs_of(std::span<const std::string> mirror_ids) {
    std::vector<KnobRef> out;
    for (const auto& id : mirror_ids) {
        out.push_back({id, KnobAxis::H});
        out.push_back({id, KnobAxis::V});
    }
    return out;
}

AlignResult align_resonator(Workspace ws, std::string_view mirror_id, std::string_view camera_id,
                            const CameraFrame& reference, AngularOptConfig cfg) {
    const Component& cam = require_camera(ws, camera_id);
    const CameraSpec spec = cam.params.camera;
    if (!ws.get(mirror_id).knobs) throw Error(ErrorCode::NoKnobs, "'" + std::string(mirror_id) + "' has no knobs");
    auto ref_c = vision::centroid(reference);
    if (!ref_c) throw Error(ErrorCode::BeamLost, "reference frame holds no primary beam");
    if (!cfg.success_radius) cfg.success_radius = beam_waist_at(ws, camera_id) / spec.pixel_pitch_mm;
    const double penalty = 2.0 * std::hypot(spec.width, spec.height);

    const std::vector<KnobRef> knobs{{std::string(mirror_id), KnobAxis::H}, {std::string(mirror_id), KnobAxis::V}};
    const auto bounds = around(ws, knobs, cfg.bound_deg);

    Workspace running = ws;
    auto objective = [&](const std::vector<double>& x) {
        running = apply(std::move(running), knobs, x);
        CameraFrame diff = vision::subtract_reference(capture(running, camera_id), reference);
        auto c = vision::centroid(diff);
        if (!c) return Evaluation{penalty, false, {}};
        double d = std::hypot(c->px - ref_c->px, c->py - ref_c->py);
        return Evaluation{d, true, {c->px, c->py, d}};
    };
    const double radius = *cfg.success_radius;
    auto ok = [radius](const Evaluation& e) { return e.signal && e.cost < radius; };

    BayesResult br = bayesian_optimize(objective, bounds, cfg, ok);
    AlignResult out{apply(std::move(running), knobs, br.best_inputs), std::move(br.trace), br.best_inputs,
                    br.best.cost};
    return out;
}

SweepResult crystal_sweep(Workspace ws, std::string_view camera_id, double theta_min, double theta_max, double step) {
    require_camera(ws, camera_id);
    const Component* crystal = ws.first_of(Kind::Crystal);
    if (!crystal) throw Error(ErrorCode::MissingComponent, "no crystal in the workspace");
    if (!(step > 0.0) || !(theta_max >= theta_min)) throw Error(ErrorCode::InvalidArgument, "bad sweep range");
    const std::string id = crystal->id;
    const double ref_sigma = ws.physics.laser_waist_mm / 2.0 / ws.get(camera_id).params.camera.pixel_pitch_mm;

    SweepResult out;
    const int n = static_cast<int>(std::floor((theta_max - theta_min) / step + 1e-9));
    for (int k = 0; k <= n; ++k) {
        const double theta = theta_min + k * step;
        ws = set_crystal_angle(std::move(ws), id, theta);
        vision::BeamStats st = vision::beam_stats(capture(ws, camera_id), ref_sigma);
        out.profile.emplace_back(theta, st.detected ? st.total_intensity : 0.0);
    }
    auto best = std::max_element(out.profile.begin(), out.profile.end(),
                                 [](const auto& a, const auto& b) { return a.second < b.second; });
    if (best->second <= 0.0) throw Error(ErrorCode::NoLasing, "no laser signal at any crystal angle");
    out.best_theta = best->first;
    out.ws = set_crystal_angle(std::move(ws), id, out.best_theta);
    return out;
}

ModeMeasurement measure_mode(const Workspace& ws, std::string_view camera_id, ModeObjective kind) {
    const Component& cam = require_camera(ws, camera_id);
    const double ref_sigma = ws.physics.laser_waist_mm / 2.0 / cam.params.camera.pixel_pitch_mm;
    vision::BeamStats st = vision::beam_stats(capture(ws, camera_id), ref_sigma);
    ModeMeasurement m;
    m.detected = st.detected;
    if (!st.detected) return m;
    m.intensity = st.total_intensity;
    m.m_squared = st.m_squared;
    m.objective = (kind == ModeObjective::SqrtIOverM2 ? std::sqrt(m.intensity) : m.intensity) / m.m_squared;
    return m;
}

ModeResult optimize_mode(Workspace ws, std::span<const KnobRef> knobs, std::string_view camera_id,
                         ModeObjective kind, AngularOptConfig cfg, std::optional<double> target) {
    require_camera(ws, camera_id);
    if (knobs.empty() || knobs.size() > 4) throw Error(ErrorCode::InvalidArgument, "mode optimization takes 1..4 knobs");
    const auto bounds = around(ws, knobs, cfg.bound_deg);

    Workspace running = ws;
    auto objective = [&](const std::vector<double>& x) {
        running = apply(std::move(running), knobs, x);
        ModeMeasurement m = measure_mode(running, camera_id, kind);
        return Evaluation{-m.objective, m.detected, {m.intensity, m.m_squared, m.objective}};
    };
    SuccessTest ok;
    if (target) {
        const double t = *target;
        ok = [t](const Evaluation& e) { return e.signal && -e.cost >= t; };
    }

    BayesResult br = bayesian_optimize(objective, bounds, cfg, ok);
    ModeResult out;
    out.ws = apply(std::move(running), knobs, br.best_inputs);
    out.trace = std::move(br.trace);
    out.knobs = br.best_inputs;
    out.best = measure_mode(out.ws, camera_id, kind);
    return out;
}

}  // namespace cavforge
