#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cavforge/beam.hpp"
#include "cavforge/frame.hpp"
#include "cavforge/layout.hpp"
#include "cavforge/pipeline.hpp"
#include "cavforge/pipeline_io.hpp"
#include "cavforge/trials.hpp"

namespace fs = std::filesystem;
using namespace cavforge;
using json_io::ordered_json;

namespace {

enum Exit { kOk = 0, kFailure = 1, kUsage = 2 };

enum class Verbosity { Quiet, Info, Debug };

Verbosity verbosity() {
    const char* v = std::getenv("CAVFORGE_LOG");
    if (!v) return Verbosity::Info;
    std::string s(v);
    if (s == "quiet" || s == "error" || s == "0") return Verbosity::Quiet;
    if (s == "debug" || s == "2") return Verbosity::Debug;
    return Verbosity::Info;
}

void info(const std::string& msg) {
    if (verbosity() != Verbosity::Quiet) std::cerr << msg << '\n';
}

void debug(const std::string& msg) {
    if (verbosity() == Verbosity::Debug) std::cerr << msg << '\n';
}

struct Common {
    std::string layout_path;
    std::uint64_t seed = 0;
    std::string out = ".";
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c, bool seed_required) {
    cmd->add_option("--layout", c.layout_path, "Layout JSON file (default: built-in layout)");
    auto* seed = cmd->add_option("--seed", c.seed, "Random seed");
    if (seed_required) seed->required();
    cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
    cmd->add_option("--set", c.overrides, "key=value layout override (repeatable)");
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + p.string() + "'");
    out << text;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

Layout resolve_layout(const Common& c) {
    std::string text = c.layout_path.empty() ? default_layout_json() : read_text(c.layout_path);
    if (!c.overrides.empty()) text = apply_overrides(text, c.overrides);
    return parse_layout(text);
}

fs::path state_path(const Common& c) { return fs::path(c.out) / "state.json"; }

PipelineState load_state(const Common& c) {
    const fs::path p = state_path(c);
    if (!fs::exists(p)) throw Error(ErrorCode::Io, "no state file at '" + p.string() + "'; run build first");
    json_io::json j;
    try {
        j = json_io::json::parse(read_text(p));
    } catch (const json_io::json::parse_error& e) {
        throw Error(ErrorCode::Parse, std::string("malformed state file: ") + e.what());
    }
    return json_io::state_from_json(j);
}

void save_state(const Common& c, const PipelineState& s) { write_text(state_path(c), dump(json_io::to_json(s))); }

std::vector<std::string> camera_ids(const Workspace& ws) {
    std::vector<std::string> ids;
    for (const auto& comp : ws.components)
        if (comp.kind == Kind::Camera) ids.push_back(comp.id);
    return ids;
}

// Exit code for a library error: bad input is a usage error, anything else a
// domain failure.
int exit_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::Parse:
        case ErrorCode::InvalidArgument:
        case ErrorCode::UnknownId:
        case ErrorCode::Io: return kUsage;
        default: return kFailure;
    }
}

int cmd_build(const Common& c) {
    const Layout layout = resolve_layout(c);
    std::vector<std::pair<std::string, CameraFrame>> frames;
    std::size_t logged = 0;
    auto on_step = [&](const PipelineState& s) {
        for (; logged < s.log.size(); ++logged) {
            const Event& e = s.log[logged];
            debug("step " + std::to_string(e.step) + " " + e.action + (e.detail.empty() ? "" : " " + e.detail));
        }
        const int k = static_cast<int>(s.current_step);
        for (const auto& id : camera_ids(s.ws)) {
            frames.emplace_back(id + "_step" + std::to_string(k) + ".pgm", capture(s.ws, id));
        }
        info("completed step " + std::to_string(k) + " (" + std::string(to_string(s.current_step)) + ")");
    };

    fs::create_directories(c.out);
    auto write_frames = [&] {
        for (const auto& [name, f] : frames) write_pgm(f, fs::path(c.out) / name);
    };
    try {
        PipelineState s = run_construction(layout, c.seed, {}, on_step);
        write_frames();
        write_text(fs::path(c.out) / "trace.jsonl", json_io::events_to_jsonl(s.log));
        save_state(c, s);
        write_text(fs::path(c.out) / "baseline.json", dump(json_io::to_json(*s.baseline)));
        std::cout << "lasing verified: I/M^2 " << s.baseline->i_over_m2 << ", mode order " << s.baseline->mode_order
                  << '\n';
        return kOk;
    } catch (const PipelineError& e) {
        write_frames();
        write_text(fs::path(c.out) / "trace.jsonl", json_io::events_to_jsonl(e.state().log));
        save_state(c, e.state());
        const int failed = static_cast<int>(e.step());
        std::cerr << "build failed at step " << failed << " (" << to_string(e.step()) << "): " << to_string(e.code())
                  << ": " << e.what() << '\n';
        return kFailure;
    }
}

std::string classify(const PipelineState& s) {
    SurveillanceResult r = surveillance_tick(s);
    std::string out(to_string(r.kind));
    if (r.kind == Surveillance::Displacement) {
        out += ":";
        for (const auto& d : r.displaced) out += " " + d.id;
    }
    return out;
}

int cmd_perturb_displace(const Common& c, const std::string& id, double dx, double dy, double dyaw) {
    PipelineState s = load_state(c);
    s.ws = inject_displacement(std::move(s.ws), id, Pose{dx, dy, 0.0, dyaw});
    save_state(c, s);
    std::cout << classify(s) << '\n';
    return kOk;
}

int cmd_perturb_knobs(const Common& c, double lo, double hi, std::vector<std::string> ids, bool reseed) {
    PipelineState s = load_state(c);
    if (ids.empty()) {
        for (const auto& comp : s.ws.components)
            if (comp.knobs) ids.push_back(comp.id);
    }
    if (reseed) s.ws.rng.seed(c.seed);
    s.ws = randomize_knobs(std::move(s.ws), ids, lo, hi);
    save_state(c, s);
    std::cout << classify(s) << '\n';
    return kOk;
}

int cmd_recover(const Common& c, int max_attempts) {
    PipelineState s = load_state(c);
    RecoveryReport r = recover(s, max_attempts);
    save_state(c, s);
    const std::string text = dump(json_io::to_json(r));
    write_text(fs::path(c.out) / "recovery.json", text);
    std::cout << text;
    return r.success ? kOk : kFailure;
}

int cmd_trial_batch(const Common& c, const std::string& name, int n) {
    auto e = experiment_from_string(name);
    if (!e) throw Error(ErrorCode::InvalidArgument, "unknown experiment '" + name + "'");
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "-n must be at least 1");
    TrialOptions opt;
    opt.layout = resolve_layout(c);
    opt.base_seed = c.seed;
    fs::create_directories(c.out);
    BatchSummary b = run_batch(*e, n, opt);
    std::string lines;
    for (const auto& t : b.trials) lines += json_io::to_json(t).dump() + "\n";
    write_text(fs::path(c.out) / "trace.jsonl", lines);
    const std::string csv = b.to_csv();
    write_text(fs::path(c.out) / "summary.csv", csv);
    std::cout << csv;
    info(std::to_string(b.successes()) + "/" + std::to_string(n) + " trials succeeded");
    return kOk;
}

int cmd_power_curve(const Common& c, int points, double max_power) {
    if (points < 2) throw Error(ErrorCode::InvalidArgument, "--points must be at least 2");
    if (!(max_power > 0.0)) throw Error(ErrorCode::InvalidArgument, "--max-power must be positive");
    PipelineState s = load_state(c);
    std::vector<double> powers;
    for (int i = 0; i < points; ++i) powers.push_back(max_power * i / (points - 1));
    PowerCurve curve = measure_power_curve(s.ws, powers);
    std::string csv = "pump_power,output_power\n";
    char buf[96];
    for (const auto& [p, out] : curve.points) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g\n", p, out);
        csv += buf;
    }
    write_text(fs::path(c.out) / "power_curve.csv", csv);
    write_text(fs::path(c.out) / "power_curve.json", dump(json_io::to_json(curve)));
    std::snprintf(buf, sizeof buf, "threshold %.6g, slope %.6g\n", curve.threshold, curve.slope);
    std::cout << buf;
    return kOk;
}

int cmd_render(const Common& c, const std::string& camera, bool csv) {
    PipelineState s = load_state(c);
    std::vector<std::string> ids = camera.empty() ? camera_ids(s.ws) : std::vector<std::string>{camera};
    const std::string step = std::to_string(static_cast<int>(s.current_step));
    for (const auto& id : ids) {
        CameraFrame f = capture(s.ws, id);
        const fs::path base = fs::path(c.out) / (id + "_step" + step);
        write_pgm(f, base.string() + ".pgm");
        if (csv) write_csv(f, base.string() + ".csv");
        std::cout << base.string() << ".pgm\n";
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulated autonomous laser resonator construction"};
    app.require_subcommand(1);
    Common c;

    auto* build = app.add_subcommand("build", "Build the resonator from a layout");
    add_common(build, c, true);

    auto* perturb = app.add_subcommand("perturb", "Disturb a completed build");
    perturb->require_subcommand(1);
    auto* displace = perturb->add_subcommand("displace", "Translate or rotate one component");
    add_common(displace, c, false);
    std::string disp_id;
    double dx = 0.0, dy = 0.0, dyaw = 0.0;
    displace->add_option("--id", disp_id, "Component id")->required();
    displace->add_option("--dx", dx, "Offset along the table x axis, mm");
    displace->add_option("--dy", dy, "Offset along the table y axis, mm");
    displace->add_option("--dyaw", dyaw, "Rotation, degrees");
    auto* knobs = perturb->add_subcommand("knobs", "Turn mirror knobs by random amounts");
    add_common(knobs, c, false);
    double kmin = 30.0, kmax = 60.0;
    std::vector<std::string> knob_ids;
    knobs->add_option("--min", kmin, "Minimum turn, degrees")->capture_default_str();
    knobs->add_option("--max", kmax, "Maximum turn, degrees")->capture_default_str();
    knobs->add_option("--ids", knob_ids, "Mirrors to disturb (default: all with knobs)")->delimiter(',');

    auto* rec = app.add_subcommand("recover", "Detect the disturbance and recover");
    add_common(rec, c, false);
    int max_attempts = 10;
    rec->add_option("--max-attempts", max_attempts, "Re-grip budget for displacement recovery")->capture_default_str();

    auto* batch = app.add_subcommand("trial-batch", "Run seeded independent trials");
    add_common(batch, c, true);
    std::string experiment;
    int n = 10;
    batch->add_option("experiment", experiment, "spatial, spatial-lens, angular, displacement, drift or build")
        ->required();
    batch->add_option("-n,--trials", n, "Number of trials")->capture_default_str();

    auto* power = app.add_subcommand("power-curve", "Sweep pump power on a completed build");
    add_common(power, c, false);
    int points = 11;
    double max_power = 3.0;
    power->add_option("--points", points, "Sweep points")->capture_default_str();
    power->add_option("--max-power", max_power, "Highest pump power")->capture_default_str();

    auto* render = app.add_subcommand("render", "Write camera frames of the saved state");
    add_common(render, c, false);
    std::string camera;
    bool csv = false;
    render->add_option("--camera", camera, "Camera id (default: all)");
    render->add_flag("--csv", csv, "Also write raw intensities as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*build) return cmd_build(c);
        if (*displace) return cmd_perturb_displace(c, disp_id, dx, dy, dyaw);
        if (*knobs) return cmd_perturb_knobs(c, kmin, kmax, knob_ids, knobs->count("--seed") > 0);
        if (*rec) return cmd_recover(c, max_attempts);
        if (*batch) return cmd_trial_batch(c, experiment, n);
        if (*power) return cmd_power_curve(c, points, max_power);
        if (*render) return cmd_render(c, camera, csv);
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
        return exit_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kUsage;
}
