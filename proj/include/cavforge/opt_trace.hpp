#pragma once

#include <string>
#include <vector>

#include "cavforge/error.hpp"

namespace cavforge {

struct OptIteration {
    std::vector<double> inputs;       // actuator settings for this evaluation
    std::vector<double> measurement;  // raw observables (e.g. centroid, I, M^2)
    double objective = 0.0;
    std::string action;
};

/// Per-iteration audit trail of an optimization loop.
struct OptTrace {
    std::vector<OptIteration> iterations;
    bool converged = false;
    int iters_used = 0;
    long wall_actions = 0;  // knob turns and moves issued

    /// Running minimum of the objective, one entry per iteration.
    std::vector<double> best_so_far() const;
};

/// An optimizer failure that still carries everything it tried.
class OptimizationError : public Error {
public:
    OptimizationError(ErrorCode code, const std::string& what, OptTrace trace)
        : Error(code, what), trace_(std::move(trace)) {}

    const OptTrace& trace() const noexcept { return trace_; }

private:
    OptTrace trace_;
};

}  // namespace cavforge
