#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cavforge/layout.hpp"
#include "cavforge/pipeline.hpp"

namespace cavforge {

enum class Experiment { SpatialOC, SpatialLens, Angular, Displacement, Drift, Build };

std::string_view to_string(Experiment e);
/// Accepts "spatial" (OC), "spatial-oc", "spatial-lens", "angular",
/// "displacement", "drift" and "build".
std::optional<Experiment> experiment_from_string(std::string_view name);

struct TrialResult {
    int index = 0;
    std::uint64_t seed = 0;
    bool success = false;
    int iterations = 0;  // optimizer evaluations, or realignment attempts for displacement
    std::vector<std::pair<std::string, double>> values;
    std::string detail;
};

struct BatchSummary {
    Experiment experiment = Experiment::Build;
    std::vector<TrialResult> trials;

    int successes() const;
    /// Per-trial rows plus a trailing aggregate row (success rate, mean and
    /// standard deviation of every numeric column).
    std::string to_csv() const;
};

struct TrialOptions {
    Layout layout = default_layout();
    std::uint64_t base_seed = 1;  // trial i uses base_seed + i
    std::optional<std::uint64_t> build_seed;  // reference build for recovery experiments; default layout.seed
    PipelineConfig pipeline;
    DriftConfig drift;
    int max_attempts = 10;
    int angular_max_iters = 20;
};

/// Initial beam-to-target offset ranges used by the spatial experiments, mm.
constexpr double kOcOffsetMin = -5.0, kOcOffsetMax = 5.0;
constexpr double kLensOffsetMin = -1.25, kLensOffsetMax = 0.75;

TrialResult run_trial(Experiment e, int index, const TrialOptions& opt, const PipelineState* reference = nullptr);

/// Runs n independent trials in index order. Recovery experiments share one
/// reference build.
BatchSummary run_batch(Experiment e, int n, const TrialOptions& opt);

}  // namespace cavforge
