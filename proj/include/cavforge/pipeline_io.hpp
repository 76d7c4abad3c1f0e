#pragma once

#include <string>

#include "cavforge/json_io.hpp"
#include "cavforge/pipeline.hpp"
#include "cavforge/trials.hpp"

namespace cavforge::json_io {

inline constexpr int kStateVersion = 1;

ordered_json to_json(const Event& e);
ordered_json to_json(const Baseline& b);
Baseline baseline_from_json(const json& j);
ordered_json to_json(const PowerCurve& c);
ordered_json to_json(const RecoveryReport& r);
ordered_json to_json(const TrialResult& r);

/// Versioned state file. Reference frames and the event log are not part of
/// it; the log is exported separately as JSON lines.
ordered_json to_json(const PipelineState& s);
PipelineState state_from_json(const json& j);

/// One JSON object per line.
std::string events_to_jsonl(const std::vector<Event>& log);

}  // namespace cavforge::json_io
