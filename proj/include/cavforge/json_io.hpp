#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "cavforge/frame.hpp"
#include "cavforge/opt_trace.hpp"
#include "cavforge/workspace.hpp"

namespace cavforge::json_io {

using nlohmann::json;
using nlohmann::ordered_json;

/// Throws Error(Parse) naming the first key of `obj` not in `allowed`.
void require_known(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view where);

ordered_json params_to_json(Kind kind, const ComponentParams& p);
ComponentParams params_from_json(Kind kind, const json& j);

ordered_json to_json(const Pose& p);
Pose pose_from_json(const json& j);

ordered_json to_json(const PhysicsConfig& p);
PhysicsConfig physics_from_json(const json& j);

ordered_json to_json(const Component& c);
Component component_from_json(const json& j);

/// Full workspace including the random stream position.
ordered_json to_json(const Workspace& ws);
Workspace workspace_from_json(const json& j);

ordered_json to_json(const OptIteration& it);
ordered_json to_json(const OptTrace& t);

}  // namespace cavforge::json_io
