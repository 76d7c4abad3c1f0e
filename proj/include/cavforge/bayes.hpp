#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cavforge/opt_trace.hpp"

namespace cavforge {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double width() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
};

/// What to do when evaluations report no usable signal.
enum class NoSignalPolicy {
    Fail,     // widen once if every initial sample is dark, then throw NoSignal
    Explore,  // dark samples are ordinary data points
};

struct AngularOptConfig {
    double bound_deg = 90.0;  // per-knob half-width around the current reading
    int max_iters = 30;       // total objective evaluations, initial design included
    int init_samples = 5;
    double length_scale = 15.0;
    std::optional<double> success_radius;  // px; unset means the rendered waist
    double explore_weight = 0.1;           // EI margin, in standardized cost units
    std::uint64_t seed = 0;
    bool include_center = true;            // first initial sample at the current reading
    NoSignalPolicy no_signal = NoSignalPolicy::Fail;
    double widen_factor = 1.5;
};

void validate(const AngularOptConfig& cfg);

struct Evaluation {
    double cost = 0.0;
    bool signal = true;
    std::vector<double> measurement;
};

using Objective = std::function<Evaluation(const std::vector<double>&)>;
using SuccessTest = std::function<bool(const Evaluation&)>;

/// Zero-mean GP with a squared-exponential kernel of unit amplitude. Targets
/// are standardized internally.
class GaussianProcess {
public:
    GaussianProcess(double length_scale, double noise_variance);

    void fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y);

    struct Prediction {
        double mean = 0.0;  // in the caller's units
        double sd = 0.0;
    };
    Prediction predict(std::span<const double> x) const;

    double kernel(std::span<const double> a, std::span<const double> b) const;

private:
    double length_scale_;
    double noise_;
    std::vector<std::vector<double>> x_;
    double y_mean_ = 0.0;
    double y_scale_ = 1.0;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd alpha_;
};

/// Expected improvement for minimization. best and xi are in the same units
/// as the prediction.
double expected_improvement(const GaussianProcess::Prediction& p, double best, double xi);

struct BayesResult {
    std::vector<double> best_inputs;
    Evaluation best;
    OptTrace trace;
};

/// Minimizes `objective` over the box `bounds` (1 to 4 dimensions).
///
/// Initial design: the box center (optional) plus a seeded Latin hypercube.
/// Then one expected-improvement pick per iteration. Stops as soon as
/// `success` accepts an evaluation after the initial design, or when
/// cfg.max_iters evaluations have been spent.
BayesResult bayesian_optimize(const Objective& objective, std::span<const Interval> bounds,
                              const AngularOptConfig& cfg, const SuccessTest& success = {});

}  // namespace cavforge
