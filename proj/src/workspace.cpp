#include "cavforge/workspace.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace cavforge {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid_argument";
        case ErrorCode::DuplicateId: return "duplicate_id";
        case ErrorCode::UnknownId: return "unknown_id";
        case ErrorCode::OutOfBounds: return "out_of_bounds";
        case ErrorCode::NoKnobs: return "no_knobs";
        case ErrorCode::NoSnapshot: return "no_snapshot";
        case ErrorCode::MissingComponent: return "missing_component";
        case ErrorCode::NonFinite: return "non_finite";
        case ErrorCode::DimensionMismatch: return "dimension_mismatch";
        case ErrorCode::DegenerateResponse: return "degenerate_response";
        case ErrorCode::BeamLost: return "beam_lost";
        case ErrorCode::NoSignal: return "no_signal";
        case ErrorCode::NoLasing: return "no_lasing";
        case ErrorCode::Saturation: return "saturation";
        case ErrorCode::NotConverged: return "not_converged";
        case ErrorCode::Io: return "io";
        case ErrorCode::Parse: return "parse";
    }
    return "unknown";
}

double normalize_yaw(double deg) {
    double r = std::fmod(deg, 360.0);
    if (r <= -180.0) r += 360.0;
    if (r > 180.0) r -= 360.0;
    return r;
}

std::string_view to_string(Kind kind) {
    switch (kind) {
        case Kind::PumpSource: return "PumpSource";
        case Kind::MirrorIC: return "Mirror_IC";
        case Kind::MirrorOC: return "Mirror_OC";
        case Kind::Lens: return "Lens";
        case Kind::BeamSplitter: return "BeamSplitter";
        case Kind::NDF: return "NDF";
        case Kind::BPF: return "BPF";
        case Kind::BeamBlock: return "BeamBlock";
        case Kind::Crystal: return "Crystal";
        case Kind::Camera: return "Camera";
    }
    return "?";
}

std::optional<Kind> kind_from_string(std::string_view name) {
    for (Kind k : {Kind::PumpSource, Kind::MirrorIC, Kind::MirrorOC, Kind::Lens,
                   Kind::BeamSplitter, Kind::NDF, Kind::BPF, Kind::BeamBlock,
                   Kind::Crystal, Kind::Camera}) {
        if (to_string(k) == name) return k;
    }
    return std::nullopt;
}

double Component::tilt_h_deg() const {
    return pose.yaw + (knobs ? knobs->tilt_h_deg() : 0.0);
}

double Component::tilt_v_deg() const {
    return params.mount_tilt_v_deg + (knobs ? knobs->tilt_v_deg() : 0.0);
}

Workspace Workspace::create(std::uint64_t seed, double placement_noise_sigma) {
    Workspace ws;
    ws.rng_seed = seed;
    ws.rng.seed(seed);
    ws.placement_noise_sigma = placement_noise_sigma;
    return ws;
}

const Component* Workspace::find(std::string_view id) const {
    auto it = std::find_if(components.begin(), components.end(),
                           [&](const Component& c) { return c.id == id; });
    return it == components.end() ? nullptr : &*it;
}

Component* Workspace::find(std::string_view id) {
    auto it = std::find_if(components.begin(), components.end(),
                           [&](const Component& c) { return c.id == id; });
    return it == components.end() ? nullptr : &*it;
}

const Component& Workspace::get(std::string_view id) const {
    const Component* c = find(id);
    if (!c) throw Error(ErrorCode::UnknownId, "unknown component id '" + std::string(id) + "'");
    return *c;
}

const Component* Workspace::first_of(Kind kind) const {
    for (const auto& c : components) {
        if (c.kind == kind) return &c;
    }
    return nullptr;
}

namespace {

bool finite(const Pose& p) {
    return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z) && std::isfinite(p.yaw);
}

Component& require(Workspace& ws, std::string_view id) {
    Component* c = ws.find(id);
    if (!c) throw Error(ErrorCode::UnknownId, "unknown component id '" + std::string(id) + "'");
    return *c;
}

void sort_beam_order(Workspace& ws) {
    std::stable_sort(ws.components.begin(), ws.components.end(),
                     [](const Component& a, const Component& b) { return a.pose.x < b.pose.x; });
}

double gaussian(Workspace& ws, double sigma) {
    if (sigma <= 0.0) return 0.0;
    std::normal_distribution<double> dist(0.0, sigma);
    return dist(ws.rng);
}

// Achieved pose for a commanded target: stochastic arm error on (x, y), the
// housing's systematic offset on y, and (on first mounting) mirror angle error.
Pose realize(Workspace& ws, const Component& comp, const Pose& target, bool mounting) {
    if (!finite(target)) throw Error(ErrorCode::NonFinite, "target pose is not finite");
    const auto& b = ws.bounds;
    if (target.x < b.x_min || target.x > b.x_max || target.y < b.y_min || target.y > b.y_max) {
        throw Error(ErrorCode::OutOfBounds, "target pose for '" + comp.id + "' is outside the table");
    }
    Pose p = target;
    p.x += gaussian(ws, ws.placement_noise_sigma);
    p.y += gaussian(ws, ws.placement_noise_sigma) + comp.housing_offset;
    if (mounting && comp.is_mirror()) p.yaw += gaussian(ws, ws.tilt_noise_sigma_deg);
    p.yaw = normalize_yaw(p.yaw);
    ++ws.action_count;
    return p;
}

double knob_effective(KnobPair& k, KnobAxis which, double delta) {
    int dir = delta > 0 ? 1 : (delta < 0 ? -1 : 0);
    int& last = which == KnobAxis::H ? k.last_dir_h : k.last_dir_v;
    double eff = delta;
    if (dir != 0 && k.backlash_deg > 0.0 && last != 0 && dir != last) {
        double lost = std::min(std::abs(delta), k.backlash_deg);
        eff = dir * (std::abs(delta) - lost);
    }
    if (dir != 0) last = dir;
    return eff;
}

}  // namespace

void validate_component(const Component& comp) {
    if (comp.id.empty()) throw Error(ErrorCode::InvalidArgument, "component id is empty");
    const auto& p = comp.params;
    auto bad = [&](const std::string& what) {
        throw Error(ErrorCode::InvalidArgument, "component '" + comp.id + "': " + what);
    };
    if (comp.is_mirror() != comp.knobs.has_value()) {
        bad(comp.is_mirror() ? "mirror requires a knob pair" : "only mirrors carry knobs");
    }
    if (comp.knobs) {
        if (!(comp.knobs->tilt_per_turn > 0.0)) bad("tilt_per_turn must be > 0");
        if (!std::isfinite(comp.knobs->knob_h) || !std::isfinite(comp.knobs->knob_v)) bad("knob reading not finite");
        if (comp.knobs->backlash_deg < 0.0) bad("backlash must be >= 0");
    }
    switch (comp.kind) {
        case Kind::PumpSource:
            if (!(p.power >= 0.0)) bad("pump power must be >= 0");
            if (!(p.waist_mm > 0.0)) bad("pump waist must be > 0");
            break;
        case Kind::Lens:
            if (!(p.focal_mm > 0.0)) bad("focal length must be > 0");
            break;
        case Kind::NDF:
            if (!(p.transmittance > 0.0 && p.transmittance <= 1.0)) bad("transmittance must be in (0, 1]");
            break;
        case Kind::BeamSplitter:
            if (!(p.split_ratio > 0.0 && p.split_ratio < 1.0)) bad("split ratio must be in (0, 1)");
            break;
        case Kind::MirrorIC:
        case Kind::MirrorOC:
            if (!(p.pump_transmittance >= 0.0 && p.pump_transmittance <= 1.0)) bad("pump transmittance must be in [0, 1]");
            if (!std::isfinite(p.focal_mm)) bad("focal length not finite");
            break;
        case Kind::Camera:
            if (p.camera.width <= 0 || p.camera.height <= 0) bad("camera dimensions must be > 0");
            if (!(p.camera.pixel_pitch_mm > 0.0)) bad("pixel pitch must be > 0");
            if (!(p.camera.sensitivity > 0.0)) bad("camera sensitivity must be > 0");
            if (!(p.camera.arm_mm >= 0.0)) bad("camera arm length must be >= 0");
            break;
        case Kind::Crystal:
            if (!std::isfinite(p.theta_deg)) bad("crystal angle not finite");
            break;
        case Kind::BPF:
        case Kind::BeamBlock:
            break;
    }
    if (!std::isfinite(comp.housing_offset)) bad("housing offset not finite");
}

Workspace place_component(Workspace ws, Component comp, const Pose& target) {
    validate_component(comp);
    if (ws.contains(comp.id)) {
        throw Error(ErrorCode::DuplicateId, "component '" + comp.id + "' is already placed");
    }
    if (comp.kind == Kind::PumpSource && ws.first_of(Kind::PumpSource)) {
        throw Error(ErrorCode::DuplicateId, "workspace already has a pump source");
    }
    comp.pose = realize(ws, comp, target, true);
    ws.components.push_back(std::move(comp));
    sort_beam_order(ws);
    return ws;
}

Workspace move_component(Workspace ws, std::string_view id, const Pose& target) {
    Component& c = require(ws, id);
    Pose p = realize(ws, c, target, false);
    ws.find(id)->pose = p;
    sort_beam_order(ws);
    return ws;
}

Workspace remove_component(Workspace ws, std::string_view id) {
    require(ws, id);
    std::erase_if(ws.components, [&](const Component& c) { return c.id == id; });
    if (ws.snapshot) ws.snapshot->erase(std::string(id));
    ++ws.action_count;
    return ws;
}

Workspace turn_knob(Workspace ws, std::string_view id, KnobAxis which, double delta_deg) {
    Component& c = require(ws, id);
    if (!c.knobs) throw Error(ErrorCode::NoKnobs, "component '" + c.id + "' has no knobs");
    if (!std::isfinite(delta_deg)) throw Error(ErrorCode::NonFinite, "knob delta is not finite");
    if (delta_deg == 0.0) return ws;
    KnobPair& k = *c.knobs;
    double eff = knob_effective(k, which, delta_deg);
    if (which == KnobAxis::H) {
        k.knob_h += delta_deg;
        k.effective_h += eff;
    } else {
        k.knob_v += delta_deg;
        k.effective_v += eff;
    }
    ++ws.action_count;
    return ws;
}

Workspace set_knob(Workspace ws, std::string_view id, KnobAxis which, double reading_deg) {
    const Component& c = ws.get(id);
    if (!c.knobs) throw Error(ErrorCode::NoKnobs, "component '" + c.id + "' has no knobs");
    double current = which == KnobAxis::H ? c.knobs->knob_h : c.knobs->knob_v;
    return turn_knob(std::move(ws), id, which, reading_deg - current);
}

Workspace inject_displacement(Workspace ws, std::string_view id, const Pose& offset) {
    Component& c = require(ws, id);
    if (!finite(offset)) throw Error(ErrorCode::NonFinite, "displacement is not finite");
    c.pose.x += offset.x;
    c.pose.y += offset.y;
    c.pose.z += offset.z;
    c.pose.yaw = normalize_yaw(c.pose.yaw + offset.yaw);
    sort_beam_order(ws);
    return ws;
}

Workspace randomize_knobs(Workspace ws, std::span<const std::string> ids, double min_deg, double max_deg) {
    if (ids.empty()) throw Error(ErrorCode::InvalidArgument, "randomize_knobs needs at least one component");
    if (!(min_deg >= 0.0 && max_deg >= min_deg)) {
        throw Error(ErrorCode::InvalidArgument, "knob range must satisfy 0 <= min <= max");
    }
    for (const auto& id : ids) {
        if (!require(ws, id).knobs) throw Error(ErrorCode::NoKnobs, "component '" + id + "' has no knobs");
    }
    for (const auto& id : ids) {
        for (KnobAxis axis : {KnobAxis::H, KnobAxis::V}) {
            std::uniform_real_distribution<double> mag(min_deg, max_deg);
            std::bernoulli_distribution sign(0.5);
            double m = min_deg == max_deg ? min_deg : mag(ws.rng);
            double delta = sign(ws.rng) ? m : -m;
            ws = turn_knob(std::move(ws), id, axis, delta);
        }
    }
    return ws;
}

Workspace set_crystal_angle(Workspace ws, std::string_view id, double theta_deg) {
    Component& c = require(ws, id);
    if (c.kind != Kind::Crystal) throw Error(ErrorCode::InvalidArgument, "'" + c.id + "' is not a crystal");
    if (!std::isfinite(theta_deg)) throw Error(ErrorCode::NonFinite, "crystal angle is not finite");
    c.params.theta_deg = theta_deg;
    ++ws.action_count;
    return ws;
}

Workspace take_snapshot(Workspace ws) {
    std::map<std::string, Pose> snap;
    for (const auto& c : ws.components) snap.emplace(c.id, c.pose);
    ws.snapshot = std::move(snap);
    return ws;
}

std::vector<Displacement> detect_displacement(const Workspace& ws, double tolerance_mm) {
    if (!ws.snapshot) throw Error(ErrorCode::NoSnapshot, "no snapshot has been taken");
    std::vector<Displacement> out;
    for (const auto& c : ws.components) {
        auto it = ws.snapshot->find(c.id);
        if (it == ws.snapshot->end()) continue;
        double d = std::hypot(c.pose.x - it->second.x, c.pose.y - it->second.y);
        if (d > tolerance_mm) out.push_back({c.id, d});
    }
    return out;
}

}  // namespace cavforge
