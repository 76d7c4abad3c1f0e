#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "cavforge/beam.hpp"
#include "cavforge/layout.hpp"
#include "cavforge/pipeline.hpp"
#include "cavforge/pipeline_io.hpp"
#include "cavforge/spatial.hpp"
#include "cavforge/trials.hpp"
#include "cavforge/vision.hpp"

namespace py = pybind11;
using namespace cavforge;

namespace {

// JSON crosses the boundary as text; the Python side parses it.
std::string state_json(const PipelineState& s) { return json_io::to_json(s).dump(); }

Layout layout_from(const std::string& text, const std::vector<std::string>& overrides) {
    std::string base = text.empty() ? default_layout_json() : text;
    return parse_layout(overrides.empty() ? base : apply_overrides(base, overrides));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Simulated autonomous laser resonator construction";

    static py::exception<Error> error(m, "CavforgeError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const PipelineError& e) {
            error((std::string(to_string(e.code())) + " at step " + std::to_string(static_cast<int>(e.step())) +
                   ": " + e.what())
                      .c_str());
        } catch (const Error& e) {
            error((std::string(to_string(e.code())) + ": " + e.what()).c_str());
        }
    });

    m.def("default_layout_json", &default_layout_json);
    m.def("newton_correction", &newton_correction, py::arg("y"), py::arg("dx"), py::arg("dy"),
          py::arg("dy_min") = 1e-6);
    m.def(
        "fit_beam_path",
        [](const std::vector<std::pair<double, double>>& xy) {
            std::vector<PathSample> s;
            for (auto [x, y] : xy) s.push_back({x, y});
            BeamLine l = fit_beam_path(s);
            return py::make_tuple(l.slope, l.intercept, l.rms_residual);
        },
        py::arg("samples"), "Least-squares (slope, intercept, rms residual).");
    m.def(
        "log_transform",
        [](const std::vector<double>& values, double gain) {
            CameraFrame f(static_cast<int>(values.size()), 1, 0.01);
            f.intensities = values;
            return vision::log_transform(f, gain).intensities;
        },
        py::arg("values"), py::arg("gain") = 10.0);

    py::class_<PipelineState>(m, "State")
        .def_property_readonly("step", [](const PipelineState& s) { return static_cast<int>(s.current_step); })
        .def_property_readonly("baseline",
                               [](const PipelineState& s) -> py::object {
                                   if (!s.baseline) return py::none();
                                   return py::str(json_io::to_json(*s.baseline).dump());
                               })
        .def("to_json", &state_json)
        .def_static("from_json",
                    [](const std::string& text) {
                        return json_io::state_from_json(json_io::json::parse(text));
                    })
        .def("surveillance", [](const PipelineState& s) { return std::string(to_string(surveillance_tick(s).kind)); })
        .def(
            "displace",
            [](PipelineState& s, const std::string& id, double dx, double dy) {
                s.ws = inject_displacement(std::move(s.ws), id, Pose{dx, dy, 0.0, 0.0});
            },
            py::arg("id"), py::arg("dx") = 0.0, py::arg("dy") = 0.0)
        .def(
            "perturb_knobs",
            [](PipelineState& s, double lo, double hi, std::uint64_t seed) {
                s.ws.rng.seed(seed);
                std::vector<std::string> ids;
                for (const auto& c : s.ws.components)
                    if (c.knobs) ids.push_back(c.id);
                s.ws = randomize_knobs(std::move(s.ws), ids, lo, hi);
            },
            py::arg("min_deg") = 30.0, py::arg("max_deg") = 60.0, py::arg("seed") = 0)
        .def(
            "recover",
            [](PipelineState& s, int max_attempts) { return json_io::to_json(recover(s, max_attempts)).dump(); },
            py::arg("max_attempts") = 10);

    m.def(
        "build",
        [](std::uint64_t seed, const std::string& layout, const std::vector<std::string>& overrides) {
            return run_construction(layout_from(layout, overrides), seed);
        },
        py::arg("seed"), py::arg("layout") = std::string(), py::arg("overrides") = std::vector<std::string>{},
        py::call_guard<py::gil_scoped_release>());

    m.def(
        "trial_batch",
        [](const std::string& experiment, int n, std::uint64_t seed, const std::string& layout) {
            auto e = experiment_from_string(experiment);
            if (!e) throw Error(ErrorCode::InvalidArgument, "unknown experiment '" + experiment + "'");
            TrialOptions opt;
            opt.layout = layout_from(layout, {});
            opt.base_seed = seed;
            return run_batch(*e, n, opt).to_csv();
        },
        py::arg("experiment"), py::arg("n"), py::arg("seed") = 1, py::arg("layout") = std::string(),
        py::call_guard<py::gil_scoped_release>());
}
