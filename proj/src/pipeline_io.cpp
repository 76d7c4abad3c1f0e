#include "cavforge/pipeline_io.hpp"

namespace cavforge::json_io {

namespace {

ordered_json point(const vision::PixelPoint& p) { return ordered_json{{"px", p.px}, {"py", p.py}}; }

vision::PixelPoint point_from(const json& j) {
    require_known(j, {"px", "py"}, "pixel point");
    return {j.at("px").get<double>(), j.at("py").get<double>()};
}

double number_at(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number()) throw Error(ErrorCode::Parse, std::string("'") + key + "' must be a number");
    return it->get<double>();
}

ordered_json pairs(const std::vector<std::pair<std::string, double>>& values) {
    ordered_json j = ordered_json::object();
    for (const auto& [k, v] : values) j[k] = v;
    return j;
}

}  // namespace

ordered_json to_json(const Event& e) {
    return ordered_json{{"step", e.step},
                        {"action", e.action},
                        {"measurement", pairs(e.measurement)},
                        {"index", e.index},
                        {"detail", e.detail}};
}

ordered_json to_json(const Baseline& b) {
    return ordered_json{{"i_over_m2", b.i_over_m2},   {"sqrt_i_over_m2", b.sqrt_i_over_m2},
                        {"intensity", b.intensity},   {"m_squared", b.m_squared},
                        {"mode_order", b.mode_order}, {"output_power", b.output_power},
                        {"centroid", point(b.centroid)}};
}

Baseline baseline_from_json(const json& j) {
    require_known(j,
                  {"i_over_m2", "sqrt_i_over_m2", "intensity", "m_squared", "mode_order", "output_power", "centroid"},
                  "baseline");
    Baseline b;
    b.i_over_m2 = number_at(j, "i_over_m2");
    b.sqrt_i_over_m2 = number_at(j, "sqrt_i_over_m2");
    b.intensity = number_at(j, "intensity");
    b.m_squared = number_at(j, "m_squared");
    b.mode_order = static_cast<int>(number_at(j, "mode_order"));
    b.output_power = number_at(j, "output_power");
    b.centroid = point_from(j.at("centroid"));
    return b;
}

ordered_json to_json(const PowerCurve& c) {
    ordered_json pts = ordered_json::array();
    for (const auto& [p, out] : c.points) pts.push_back(ordered_json{p, out});
    return ordered_json{{"threshold", c.threshold}, {"slope", c.slope}, {"points", pts}};
}

ordered_json to_json(const RecoveryReport& r) {
    return ordered_json{{"version", kStateVersion},
                        {"scenario", r.scenario},
                        {"success", r.success},
                        {"placements", r.placements},
                        {"realign_attempts", r.realign_attempts},
                        {"iterations", r.iterations},
                        {"actions", r.actions},
                        {"ratio", r.ratio},
                        {"best_ratio", r.best_ratio},
                        {"components", r.components},
                        {"mode_order", r.mode_order},
                        {"trace", to_json(r.trace)}};
}

ordered_json to_json(const TrialResult& r) {
    return ordered_json{{"index", r.index},           {"seed", r.seed},
                        {"success", r.success},       {"iterations", r.iterations},
                        {"values", pairs(r.values)}, {"detail", r.detail}};
}

ordered_json to_json(const PipelineState& s) {
    ordered_json j;
    j["version"] = kStateVersion;
    j["current_step"] = static_cast<int>(s.current_step);
    j["main_camera"] = s.main_camera;
    j["side_camera"] = s.side_camera;
    j["beam_path"] = ordered_json{
        {"slope", s.beam_path.slope}, {"intercept", s.beam_path.intercept}, {"rms_residual", s.beam_path.rms_residual}};
    j["baseline"] = s.baseline ? to_json(*s.baseline) : ordered_json(nullptr);
    ordered_json refs = ordered_json::object();
    for (const auto& [id, p] : s.reference_centroids) refs[id] = point(p);
    j["reference_centroids"] = refs;
    ordered_json parked = ordered_json::object();
    for (const auto& [id, p] : s.parked) parked[id] = to_json(p);
    j["parked"] = parked;
    j["workspace"] = to_json(s.ws);
    return j;
}

PipelineState state_from_json(const json& j) {
    require_known(j,
                  {"version", "current_step", "main_camera", "side_camera", "beam_path", "baseline",
                   "reference_centroids", "parked", "workspace"},
                  "state");
    if (!j.contains("version") || !j.at("version").is_number_integer() || j.at("version").get<int>() != kStateVersion) {
        throw Error(ErrorCode::Parse, "unsupported state version");
    }
    PipelineState s;
    try {
        const int step = j.at("current_step").get<int>();
        if (step < 0 || step > static_cast<int>(StepId::LasingVerified)) {
            throw Error(ErrorCode::Parse, "'current_step' out of range");
        }
        s.current_step = static_cast<StepId>(step);
        s.main_camera = j.at("main_camera").get<std::string>();
        s.side_camera = j.at("side_camera").get<std::string>();
        const json& bp = j.at("beam_path");
        require_known(bp, {"slope", "intercept", "rms_residual"}, "beam_path");
        s.beam_path = {number_at(bp, "slope"), number_at(bp, "intercept"), number_at(bp, "rms_residual")};
        if (!j.at("baseline").is_null()) s.baseline = baseline_from_json(j.at("baseline"));
        for (const auto& [id, p] : j.at("reference_centroids").items()) s.reference_centroids[id] = point_from(p);
        for (const auto& [id, p] : j.at("parked").items()) s.parked[id] = pose_from_json(p);
        s.ws = workspace_from_json(j.at("workspace"));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("malformed state: ") + e.what());
    }
    return s;
}

std::string events_to_jsonl(const std::vector<Event>& log) {
    std::string out;
    for (const auto& e : log) {
        out += to_json(e).dump();
        out += '\n';
    }
    return out;
}

}  // namespace cavforge::json_io
