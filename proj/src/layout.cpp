#include "cavforge/layout.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "cavforge/json_io.hpp"

namespace cavforge {

namespace {

using json_io::json;
using json_io::ordered_json;

constexpr const char* kDefaultLayout = R"({
  "version": 1,
  "seed": 42,
  "placement_noise_sigma_mm": 0.1,
  "tilt_noise_sigma_deg": 0.03,
  "tilt_per_turn_deg": 0.5,
  "physics": {},
  "components": [
    {"id": "pump", "kind": "PumpSource", "nominal_x_mm": 0,
     "params": {"power": 3.0, "waist_mm": 0.3}},
    {"id": "bs", "kind": "BeamSplitter", "nominal_x_mm": 60, "params": {"split_ratio": 0.02}},
    {"id": "cam2", "kind": "Camera", "nominal_x_mm": 60,
     "params": {"port": "beam_splitter", "arm_mm": 150}},
    {"id": "bb", "kind": "BeamBlock", "nominal_x_mm": 90},
    {"id": "lens", "kind": "Lens", "nominal_x_mm": 120, "params": {"focal_mm": 250}},
    {"id": "ic", "kind": "Mirror_IC", "nominal_x_mm": 330, "params": {"pump_transmittance": 1.0}},
    {"id": "crystal", "kind": "Crystal", "nominal_x_mm": 370, "params": {"theta_deg": 0.0}},
    {"id": "oc", "kind": "Mirror_OC", "nominal_x_mm": 430,
     "params": {"pump_transmittance": 0.5, "focal_mm": 540}},
    {"id": "ndf", "kind": "NDF", "nominal_x_mm": 480, "params": {"transmittance": 0.03}},
    {"id": "bpf", "kind": "BPF", "nominal_x_mm": 520},
    {"id": "cam1", "kind": "Camera", "nominal_x_mm": 700, "params": {"port": "main"}}
  ]
}
)";

double number(const json& j, const char* key, double fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number()) throw Error(ErrorCode::Parse, std::string("'") + key + "' must be a number");
    return it->get<double>();
}

json parse_json(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Parse, std::string("malformed JSON: ") + e.what());
    }
}

Layout from_json(const json& j) {
    json_io::require_known(j,
                           {"version", "seed", "placement_noise_sigma_mm", "tilt_noise_sigma_deg",
                            "tilt_per_turn_deg", "backlash_deg", "physics", "components"},
                           "layout");
    Layout l;
    if (j.contains("version")) {
        if (!j.at("version").is_number_integer()) throw Error(ErrorCode::Parse, "'version' must be an integer");
        l.version = j.at("version").get<int>();
        if (l.version != 1) throw Error(ErrorCode::Parse, "unsupported layout version " + std::to_string(l.version));
    }
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) throw Error(ErrorCode::Parse, "'seed' must be a non-negative integer");
        l.seed = j.at("seed").get<std::uint64_t>();
    }
    l.placement_noise_sigma_mm = number(j, "placement_noise_sigma_mm", l.placement_noise_sigma_mm);
    l.tilt_noise_sigma_deg = number(j, "tilt_noise_sigma_deg", l.tilt_noise_sigma_deg);
    l.tilt_per_turn_deg = number(j, "tilt_per_turn_deg", l.tilt_per_turn_deg);
    l.backlash_deg = number(j, "backlash_deg", l.backlash_deg);
    if (!(l.placement_noise_sigma_mm >= 0.0)) throw Error(ErrorCode::InvalidArgument, "placement noise must be >= 0");
    if (!(l.tilt_noise_sigma_deg >= 0.0)) throw Error(ErrorCode::InvalidArgument, "tilt noise must be >= 0");
    if (!(l.tilt_per_turn_deg > 0.0)) throw Error(ErrorCode::InvalidArgument, "tilt_per_turn_deg must be > 0");
    if (!(l.backlash_deg >= 0.0)) throw Error(ErrorCode::InvalidArgument, "backlash_deg must be >= 0");
    if (j.contains("physics")) {
        if (!j.at("physics").is_object()) throw Error(ErrorCode::Parse, "'physics' must be an object");
        l.physics = json_io::physics_from_json(j.at("physics"));
    }

    auto comps = j.find("components");
    if (comps == j.end() || !comps->is_array()) throw Error(ErrorCode::Parse, "'components' must be an array");
    std::set<std::string> seen;
    for (const auto& cj : *comps) {
        json_io::require_known(cj, {"id", "kind", "nominal_x_mm", "nominal_y_mm", "housing_offset_mm", "params"},
                               "layout component");
        Component c;
        if (!cj.contains("id") || !cj.at("id").is_string()) throw Error(ErrorCode::Parse, "component 'id' must be a string");
        c.id = cj.at("id").get<std::string>();
        if (!cj.contains("kind") || !cj.at("kind").is_string()) {
            throw Error(ErrorCode::Parse, "component '" + c.id + "' needs a string 'kind'");
        }
        auto kind = kind_from_string(cj.at("kind").get<std::string>());
        if (!kind) throw Error(ErrorCode::Parse, "unknown kind '" + cj.at("kind").get<std::string>() + "'");
        c.kind = *kind;
        if (!cj.contains("nominal_x_mm")) throw Error(ErrorCode::Parse, "component '" + c.id + "' needs nominal_x_mm");
        c.pose.x = number(cj, "nominal_x_mm", 0.0);
        c.pose.y = number(cj, "nominal_y_mm", 0.0);
        c.housing_offset = number(cj, "housing_offset_mm", 0.0);
        c.params = json_io::params_from_json(c.kind, cj.contains("params") ? cj.at("params") : json::object());
        if (c.is_mirror()) {
            KnobPair k;
            k.tilt_per_turn = l.tilt_per_turn_deg;
            k.backlash_deg = l.backlash_deg;
            c.knobs = k;
        }
        validate_component(c);
        if (!seen.insert(c.id).second) throw Error(ErrorCode::DuplicateId, "duplicate component id '" + c.id + "'");
        l.components.push_back(std::move(c));
    }
    int pumps = 0;
    for (const auto& c : l.components) pumps += c.kind == Kind::PumpSource;
    if (pumps != 1) throw Error(ErrorCode::InvalidArgument, "layout must declare exactly one pump source");
    return l;
}

}  // namespace

const Component* Layout::find(std::string_view id) const {
    for (const auto& c : components) {
        if (c.id == id) return &c;
    }
    return nullptr;
}

const Component* Layout::first_of(Kind kind) const {
    for (const auto& c : components) {
        if (c.kind == kind) return &c;
    }
    return nullptr;
}

Layout parse_layout(std::string_view json_text) {
    json j = parse_json(json_text);
    try {
        return from_json(j);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("invalid layout: ") + e.what());
    }
}

Layout load_layout(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Parse, "cannot read layout file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_layout(ss.str());
}

std::string layout_to_json(const Layout& l) {
    ordered_json j;
    j["version"] = l.version;
    j["seed"] = l.seed;
    j["placement_noise_sigma_mm"] = l.placement_noise_sigma_mm;
    j["tilt_noise_sigma_deg"] = l.tilt_noise_sigma_deg;
    j["tilt_per_turn_deg"] = l.tilt_per_turn_deg;
    j["backlash_deg"] = l.backlash_deg;
    j["physics"] = json_io::to_json(l.physics);
    j["components"] = ordered_json::array();
    for (const auto& c : l.components) {
        ordered_json cj;
        cj["id"] = c.id;
        cj["kind"] = std::string(to_string(c.kind));
        cj["nominal_x_mm"] = c.pose.x;
        cj["nominal_y_mm"] = c.pose.y;
        cj["housing_offset_mm"] = c.housing_offset;
        cj["params"] = json_io::params_to_json(c.kind, c.params);
        j["components"].push_back(cj);
    }
    return j.dump(2) + "\n";
}

Layout default_layout() { return parse_layout(kDefaultLayout); }

std::string default_layout_json() { return kDefaultLayout; }

std::string apply_overrides(std::string_view json_text, const std::vector<std::string>& overrides) {
    json j = parse_json(json_text);
    for (const auto& ov : overrides) {
        auto eq = ov.find('=');
        if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::Parse, "override must be key=value: '" + ov + "'");
        std::string key = ov.substr(0, eq);
        std::string raw = ov.substr(eq + 1);
        json value;
        try {
            value = json::parse(raw);
        } catch (const json::parse_error&) {
            value = raw;
        }
        auto dot = key.find('.');
        if (dot == std::string::npos) {
            j[key] = value;
            continue;
        }
        std::string head = key.substr(0, dot);
        std::string field = key.substr(dot + 1);
        if (head == "physics") {
            if (!j.contains("physics")) j["physics"] = json::object();
            j["physics"][field] = value;
            continue;
        }
        bool found = false;
        if (j.contains("components") && j["components"].is_array()) {
            for (auto& c : j["components"]) {
                if (c.is_object() && c.value("id", "") == head) {
                    if (field == "nominal_x_mm" || field == "nominal_y_mm" || field == "housing_offset_mm") {
                        c[field] = value;
                    } else {
                        if (!c.contains("params")) c["params"] = json::object();
                        c["params"][field] = value;
                    }
                    found = true;
                }
            }
        }
        if (!found) throw Error(ErrorCode::UnknownId, "override targets unknown component '" + head + "'");
    }
    return j.dump();
}

}  // namespace cavforge
