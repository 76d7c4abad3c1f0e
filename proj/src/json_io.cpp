#include "cavforge/json_io.hpp"

#include <sstream>

namespace cavforge::json_io {

namespace {

double num(const json& j, const char* key, double fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number()) throw Error(ErrorCode::Parse, std::string("'") + key + "' must be a number");
    return it->get<double>();
}

int integer(const json& j, const char* key, int fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number_integer()) throw Error(ErrorCode::Parse, std::string("'") + key + "' must be an integer");
    return it->get<int>();
}

const json& object_at(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw Error(ErrorCode::Parse, std::string("missing '") + key + "'");
    if (!it->is_object()) throw Error(ErrorCode::Parse, std::string("'") + key + "' must be an object");
    return *it;
}

std::string text(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) throw Error(ErrorCode::Parse, std::string("'") + key + "' must be a string");
    return it->get<std::string>();
}

}  // namespace

void require_known(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!obj.is_object()) throw Error(ErrorCode::Parse, std::string(where) + " must be an object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw Error(ErrorCode::Parse, "unknown field '" + key + "' in " + std::string(where));
    }
}

ordered_json params_to_json(Kind kind, const ComponentParams& p) {
    ordered_json j = ordered_json::object();
    switch (kind) {
        case Kind::PumpSource:
            j["power"] = p.power;
            j["waist_mm"] = p.waist_mm;
            j["tilt_deg"] = p.tilt_deg;
            j["tilt_v_deg"] = p.tilt_v_deg;
            break;
        case Kind::MirrorIC:
        case Kind::MirrorOC:
            j["pump_transmittance"] = p.pump_transmittance;
            j["focal_mm"] = p.focal_mm;
            j["mount_tilt_v_deg"] = p.mount_tilt_v_deg;
            break;
        case Kind::Lens:
            j["focal_mm"] = p.focal_mm;
            break;
        case Kind::BeamSplitter:
            j["split_ratio"] = p.split_ratio;
            break;
        case Kind::NDF:
            j["transmittance"] = p.transmittance;
            break;
        case Kind::Crystal:
            j["theta_deg"] = p.theta_deg;
            break;
        case Kind::Camera:
            j["width"] = p.camera.width;
            j["height"] = p.camera.height;
            j["pixel_pitch_mm"] = p.camera.pixel_pitch_mm;
            j["sensitivity"] = p.camera.sensitivity;
            j["port"] = p.camera.port == CameraPort::Main ? "main" : "beam_splitter";
            j["arm_mm"] = p.camera.arm_mm;
            break;
        case Kind::BPF:
        case Kind::BeamBlock:
            break;
    }
    return j;
}

ComponentParams params_from_json(Kind kind, const json& j) {
    ComponentParams p;
    const std::string where = "params of " + std::string(to_string(kind));
    switch (kind) {
        case Kind::PumpSource:
            require_known(j, {"power", "waist_mm", "tilt_deg", "tilt_v_deg"}, where);
            p.power = num(j, "power", p.power);
            p.waist_mm = num(j, "waist_mm", p.waist_mm);
            p.tilt_deg = num(j, "tilt_deg", p.tilt_deg);
            p.tilt_v_deg = num(j, "tilt_v_deg", p.tilt_v_deg);
            break;
        case Kind::MirrorIC:
        case Kind::MirrorOC:
            require_known(j, {"pump_transmittance", "focal_mm", "mount_tilt_v_deg"}, where);
            p.pump_transmittance = num(j, "pump_transmittance", p.pump_transmittance);
            p.focal_mm = num(j, "focal_mm", p.focal_mm);
            p.mount_tilt_v_deg = num(j, "mount_tilt_v_deg", p.mount_tilt_v_deg);
            break;
        case Kind::Lens:
            require_known(j, {"focal_mm"}, where);
            p.focal_mm = num(j, "focal_mm", p.focal_mm);
            break;
        case Kind::BeamSplitter:
            require_known(j, {"split_ratio"}, where);
            p.split_ratio = num(j, "split_ratio", p.split_ratio);
            break;
        case Kind::NDF:
            require_known(j, {"transmittance"}, where);
            p.transmittance = num(j, "transmittance", p.transmittance);
            break;
        case Kind::Crystal:
            require_known(j, {"theta_deg"}, where);
            p.theta_deg = num(j, "theta_deg", p.theta_deg);
            break;
        case Kind::Camera: {
            require_known(j, {"width", "height", "pixel_pitch_mm", "sensitivity", "port", "arm_mm"}, where);
            p.camera.width = integer(j, "width", p.camera.width);
            p.camera.height = integer(j, "height", p.camera.height);
            p.camera.pixel_pitch_mm = num(j, "pixel_pitch_mm", p.camera.pixel_pitch_mm);
            p.camera.sensitivity = num(j, "sensitivity", p.camera.sensitivity);
            p.camera.arm_mm = num(j, "arm_mm", p.camera.arm_mm);
            if (j.contains("port")) {
                std::string port = text(j, "port");
                if (port == "main") {
                    p.camera.port = CameraPort::Main;
                } else if (port == "beam_splitter") {
                    p.camera.port = CameraPort::BeamSplitter;
                } else {
                    throw Error(ErrorCode::Parse, "camera port must be 'main' or 'beam_splitter'");
                }
            }
            break;
        }
        case Kind::BPF:
        case Kind::BeamBlock:
            require_known(j, {}, where);
            break;
    }
    return p;
}

ordered_json to_json(const Pose& p) {
    return ordered_json{{"x", p.x}, {"y", p.y}, {"z", p.z}, {"yaw", p.yaw}};
}

Pose pose_from_json(const json& j) {
    require_known(j, {"x", "y", "z", "yaw"}, "pose");
    return {num(j, "x", 0.0), num(j, "y", 0.0), num(j, "z", 0.0), num(j, "yaw", 0.0)};
}

ordered_json to_json(const PhysicsConfig& p) {
    ordered_json j;
    j["pump_wavelength_mm"] = p.pump_wavelength_mm;
    j["laser_waist_mm"] = p.laser_waist_mm;
    j["secondary_fraction"] = p.secondary_fraction;
    j["threshold_power"] = p.threshold_power;
    j["threshold_kappa"] = p.threshold_kappa;
    j["slope_efficiency"] = p.slope_efficiency;
    j["crystal_theta_opt_deg"] = p.crystal_theta_opt_deg;
    j["tilt_unit_deg"] = p.tilt_unit_deg;
    j["lens_unit_mm"] = p.lens_unit_mm;
    j["crystal_unit_deg"] = p.crystal_unit_deg;
    j["mode_band_edges"] = p.mode_band_edges;
    j["misalignment_cutoff"] = p.misalignment_cutoff;
    return j;
}

PhysicsConfig physics_from_json(const json& j) {
    require_known(j,
                  {"pump_wavelength_mm", "laser_waist_mm", "secondary_fraction", "threshold_power", "threshold_kappa",
                   "slope_efficiency", "crystal_theta_opt_deg", "tilt_unit_deg", "lens_unit_mm", "crystal_unit_deg",
                   "mode_band_edges", "misalignment_cutoff"},
                  "physics");
    PhysicsConfig p;
    p.pump_wavelength_mm = num(j, "pump_wavelength_mm", p.pump_wavelength_mm);
    p.laser_waist_mm = num(j, "laser_waist_mm", p.laser_waist_mm);
    p.secondary_fraction = num(j, "secondary_fraction", p.secondary_fraction);
    p.threshold_power = num(j, "threshold_power", p.threshold_power);
    p.threshold_kappa = num(j, "threshold_kappa", p.threshold_kappa);
    p.slope_efficiency = num(j, "slope_efficiency", p.slope_efficiency);
    p.crystal_theta_opt_deg = num(j, "crystal_theta_opt_deg", p.crystal_theta_opt_deg);
    p.tilt_unit_deg = num(j, "tilt_unit_deg", p.tilt_unit_deg);
    p.lens_unit_mm = num(j, "lens_unit_mm", p.lens_unit_mm);
    p.crystal_unit_deg = num(j, "crystal_unit_deg", p.crystal_unit_deg);
    p.misalignment_cutoff = num(j, "misalignment_cutoff", p.misalignment_cutoff);
    if (j.contains("mode_band_edges")) {
        const auto& e = j.at("mode_band_edges");
        if (!e.is_array()) throw Error(ErrorCode::Parse, "'mode_band_edges' must be an array");
        p.mode_band_edges.clear();
        for (const auto& v : e) {
            if (!v.is_number()) throw Error(ErrorCode::Parse, "'mode_band_edges' must hold numbers");
            p.mode_band_edges.push_back(v.get<double>());
        }
    }
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be positive");
    };
    positive(p.pump_wavelength_mm, "pump_wavelength_mm");
    positive(p.laser_waist_mm, "laser_waist_mm");
    positive(p.threshold_power, "threshold_power");
    positive(p.slope_efficiency, "slope_efficiency");
    positive(p.tilt_unit_deg, "tilt_unit_deg");
    positive(p.lens_unit_mm, "lens_unit_mm");
    positive(p.crystal_unit_deg, "crystal_unit_deg");
    positive(p.misalignment_cutoff, "misalignment_cutoff");
    if (!(p.threshold_kappa >= 0.0)) throw Error(ErrorCode::InvalidArgument, "threshold_kappa must be >= 0");
    if (!(p.secondary_fraction > 0.0 && p.secondary_fraction <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "secondary_fraction must be in (0, 1]");
    }
    return p;
}

ordered_json to_json(const Component& c) {
    ordered_json j;
    j["id"] = c.id;
    j["kind"] = std::string(to_string(c.kind));
    j["pose"] = to_json(c.pose);
    j["housing_offset_mm"] = c.housing_offset;
    j["params"] = params_to_json(c.kind, c.params);
    if (c.knobs) {
        const KnobPair& k = *c.knobs;
        j["knobs"] = ordered_json{{"knob_h", k.knob_h},           {"knob_v", k.knob_v},
                                  {"tilt_per_turn", k.tilt_per_turn}, {"backlash_deg", k.backlash_deg},
                                  {"effective_h", k.effective_h}, {"effective_v", k.effective_v},
                                  {"last_dir_h", k.last_dir_h},   {"last_dir_v", k.last_dir_v}};
    }
    return j;
}

Component component_from_json(const json& j) {
    require_known(j, {"id", "kind", "pose", "housing_offset_mm", "params", "knobs"}, "component");
    Component c;
    c.id = text(j, "id");
    auto kind = kind_from_string(text(j, "kind"));
    if (!kind) throw Error(ErrorCode::Parse, "unknown component kind '" + text(j, "kind") + "'");
    c.kind = *kind;
    c.pose = pose_from_json(object_at(j, "pose"));
    c.housing_offset = num(j, "housing_offset_mm", 0.0);
    c.params = params_from_json(c.kind, j.contains("params") ? object_at(j, "params") : json::object());
    if (j.contains("knobs")) {
        const json& k = object_at(j, "knobs");
        require_known(k, {"knob_h", "knob_v", "tilt_per_turn", "backlash_deg", "effective_h", "effective_v",
                          "last_dir_h", "last_dir_v"},
                      "knobs");
        KnobPair kp;
        kp.knob_h = num(k, "knob_h", 0.0);
        kp.knob_v = num(k, "knob_v", 0.0);
        kp.tilt_per_turn = num(k, "tilt_per_turn", kp.tilt_per_turn);
        kp.backlash_deg = num(k, "backlash_deg", 0.0);
        kp.effective_h = num(k, "effective_h", kp.knob_h);
        kp.effective_v = num(k, "effective_v", kp.knob_v);
        kp.last_dir_h = integer(k, "last_dir_h", 0);
        kp.last_dir_v = integer(k, "last_dir_v", 0);
        c.knobs = kp;
    }
    validate_component(c);
    return c;
}

ordered_json to_json(const Workspace& ws) {
    ordered_json j;
    j["rng_seed"] = ws.rng_seed;
    j["placement_noise_sigma_mm"] = ws.placement_noise_sigma;
    j["tilt_noise_sigma_deg"] = ws.tilt_noise_sigma_deg;
    j["bounds"] = ordered_json{{"x_min", ws.bounds.x_min},
                               {"x_max", ws.bounds.x_max},
                               {"y_min", ws.bounds.y_min},
                               {"y_max", ws.bounds.y_max}};
    j["physics"] = to_json(ws.physics);
    j["action_count"] = ws.action_count;
    std::ostringstream rng;
    rng << ws.rng;
    j["rng_state"] = rng.str();
    if (ws.snapshot) {
        ordered_json snap = ordered_json::object();
        for (const auto& [id, pose] : *ws.snapshot) snap[id] = to_json(pose);
        j["snapshot"] = snap;
    } else {
        j["snapshot"] = nullptr;
    }
    j["components"] = ordered_json::array();
    for (const auto& c : ws.components) j["components"].push_back(to_json(c));
    return j;
}

Workspace workspace_from_json(const json& j) {
    require_known(j, {"rng_seed", "placement_noise_sigma_mm", "tilt_noise_sigma_deg", "bounds", "physics",
                      "action_count", "rng_state", "snapshot", "components"},
                  "workspace");
    Workspace ws;
    if (!j.contains("rng_seed") || !j.at("rng_seed").is_number_unsigned()) {
        throw Error(ErrorCode::Parse, "'rng_seed' must be a non-negative integer");
    }
    ws.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    ws.placement_noise_sigma = num(j, "placement_noise_sigma_mm", ws.placement_noise_sigma);
    ws.tilt_noise_sigma_deg = num(j, "tilt_noise_sigma_deg", ws.tilt_noise_sigma_deg);
    if (j.contains("bounds")) {
        const json& b = object_at(j, "bounds");
        require_known(b, {"x_min", "x_max", "y_min", "y_max"}, "bounds");
        ws.bounds = {num(b, "x_min", ws.bounds.x_min), num(b, "x_max", ws.bounds.x_max),
                     num(b, "y_min", ws.bounds.y_min), num(b, "y_max", ws.bounds.y_max)};
    }
    if (j.contains("physics")) ws.physics = physics_from_json(object_at(j, "physics"));
    if (j.contains("action_count")) ws.action_count = j.at("action_count").get<std::uint64_t>();
    if (j.contains("rng_state")) {
        std::istringstream in(text(j, "rng_state"));
        in >> ws.rng;
        if (!in) throw Error(ErrorCode::Parse, "corrupt 'rng_state'");
    } else {
        ws.rng.seed(ws.rng_seed);
    }
    if (j.contains("snapshot") && !j.at("snapshot").is_null()) {
        const json& s = object_at(j, "snapshot");
        std::map<std::string, Pose> snap;
        for (const auto& [id, pose] : s.items()) snap[id] = pose_from_json(pose);
        ws.snapshot = std::move(snap);
    }
    if (j.contains("components")) {
        const auto& arr = j.at("components");
        if (!arr.is_array()) throw Error(ErrorCode::Parse, "'components' must be an array");
        for (const auto& cj : arr) {
            Component c = component_from_json(cj);
            if (ws.contains(c.id)) throw Error(ErrorCode::DuplicateId, "duplicate component id '" + c.id + "'");
            ws.components.push_back(std::move(c));
        }
        std::stable_sort(ws.components.begin(), ws.components.end(),
                         [](const Component& a, const Component& b) { return a.pose.x < b.pose.x; });
    }
    return ws;
}

ordered_json to_json(const OptIteration& it) {
    return ordered_json{
        {"inputs", it.inputs}, {"measurement", it.measurement}, {"objective", it.objective}, {"action", it.action}};
}

ordered_json to_json(const OptTrace& t) {
    ordered_json j;
    j["converged"] = t.converged;
    j["iters_used"] = t.iters_used;
    j["wall_actions"] = t.wall_actions;
    j["iterations"] = ordered_json::array();
    for (const auto& it : t.iterations) j["iterations"].push_back(to_json(it));
    return j;
}

}  // namespace cavforge::json_io
