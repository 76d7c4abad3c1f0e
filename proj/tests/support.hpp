#pragma once

#include <string>

#include "cavforge/workspace.hpp"

namespace cavforge::test {

inline Component part(const std::string& id, Kind kind) {
    Component c;
    c.id = id;
    c.kind = kind;
    if (c.is_mirror()) c.knobs = KnobPair{};
    if (kind == Kind::Lens) c.params.focal_mm = 100.0;
    return c;
}

inline Component camera(const std::string& id, CameraPort port = CameraPort::Main) {
    Component c = part(id, Kind::Camera);
    c.params.camera.port = port;
    return c;
}

/// A workspace holding only a pump at the origin.
inline Workspace bench(double sigma = 0.0, std::uint64_t seed = 1, double power = 3.0) {
    Workspace ws = Workspace::create(seed, sigma);
    Component pump = part("pump", Kind::PumpSource);
    pump.params.power = power;
    ws.components.push_back(pump);
    return ws;
}

inline Workspace put(Workspace ws, Component c, double x, double y = 0.0) {
    return place_component(std::move(ws), std::move(c), Pose{x, y, 0.0, 0.0});
}

}  // namespace cavforge::test
