#include "cavforge/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

namespace cavforge {

namespace {

constexpr int kGridPerAxis = 64;
constexpr int kRandomCandidates = 4096;
constexpr int kLocalCandidates = 1024;
constexpr int kRefineStarts = 3;

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

std::vector<double> clamp_to(std::vector<double> x, std::span<const Interval> bounds) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], bounds[i].lo, bounds[i].hi);
    return x;
}

std::vector<std::vector<double>> latin_hypercube(std::span<const Interval> bounds, int n, std::mt19937_64& rng) {
    std::vector<std::vector<double>> pts(static_cast<std::size_t>(n), std::vector<double>(bounds.size()));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t d = 0; d < bounds.size(); ++d) {
        std::vector<int> strata(static_cast<std::size_t>(n));
        std::iota(strata.begin(), strata.end(), 0);
        std::shuffle(strata.begin(), strata.end(), rng);
        for (int i = 0; i < n; ++i) {
            double t = (strata[static_cast<std::size_t>(i)] + u(rng)) / n;
            pts[static_cast<std::size_t>(i)][d] = bounds[d].lo + t * bounds[d].width();
        }
    }
    return pts;
}

struct Candidate {
    std::vector<double> x;
    double ei = 0.0;
};

}  // namespace

void validate(const AngularOptConfig& cfg) {
    if (!(cfg.bound_deg > 0.0)) throw Error(ErrorCode::InvalidArgument, "bounds must be non-empty");
    if (cfg.init_samples < 2) throw Error(ErrorCode::InvalidArgument, "init_samples must be >= 2");
    if (cfg.max_iters <= cfg.init_samples) throw Error(ErrorCode::InvalidArgument, "max_iters must exceed init_samples");
    if (!(cfg.length_scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "length_scale must be positive");
    if (!(cfg.explore_weight >= 0.0)) throw Error(ErrorCode::InvalidArgument, "explore_weight must be >= 0");
    if (!(cfg.widen_factor >= 1.0)) throw Error(ErrorCode::InvalidArgument, "widen_factor must be >= 1");
}

GaussianProcess::GaussianProcess(double length_scale, double noise_variance)
    : length_scale_(length_scale), noise_(noise_variance) {
    if (!(length_scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "length scale must be positive");
}

double GaussianProcess::kernel(std::span<const double> a, std::span<const double> b) const {
    double r2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = (a[i] - b[i]) / length_scale_;
        r2 += d * d;
    }
    return std::exp(-0.5 * r2);
}

void GaussianProcess::fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
    if (x.empty() || x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "GP needs matching, non-empty data");
    x_ = x;
    const auto n = static_cast<Eigen::Index>(x.size());
    y_mean_ = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double v : y) var += (v - y_mean_) * (v - y_mean_);
    var /= static_cast<double>(n);
    y_scale_ = var > 1e-24 ? std::sqrt(var) : 1.0;

    Eigen::MatrixXd k(n, n);
    Eigen::VectorXd ys(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        ys(i) = (y[static_cast<std::size_t>(i)] - y_mean_) / y_scale_;
        for (Eigen::Index j = 0; j <= i; ++j) {
            double v = kernel(x_[static_cast<std::size_t>(i)], x_[static_cast<std::size_t>(j)]);
            k(i, j) = v;
            k(j, i) = v;
        }
        k(i, i) += noise_;
    }
    llt_.compute(k);
    if (llt_.info() != Eigen::Success) throw Error(ErrorCode::NonFinite, "GP covariance is not positive definite");
    alpha_ = llt_.solve(ys);
}

GaussianProcess::Prediction GaussianProcess::predict(std::span<const double> x) const {
    const auto n = static_cast<Eigen::Index>(x_.size());
    Eigen::VectorXd ks(n);
    for (Eigen::Index i = 0; i < n; ++i) ks(i) = kernel(x, x_[static_cast<std::size_t>(i)]);
    double mean = ks.dot(alpha_);
    Eigen::VectorXd v = llt_.matrixL().solve(ks);
    double var = std::max(1.0 - v.squaredNorm(), 0.0);
    return {y_mean_ + y_scale_ * mean, y_scale_ * std::sqrt(var)};
}

double expected_improvement(const GaussianProcess::Prediction& p, double best, double xi) {
    const double gain = best - p.mean - xi;
    if (p.sd <= 1e-12) return std::max(gain, 0.0);
    const double z = gain / p.sd;
    return gain * normal_cdf(z) + p.sd * normal_pdf(z);
}

BayesResult bayesian_optimize(const Objective& objective, std::span<const Interval> bounds,
                              const AngularOptConfig& cfg, const SuccessTest& success) {
    validate(cfg);
    if (bounds.empty() || bounds.size() > 4) throw Error(ErrorCode::InvalidArgument, "dimension must be 1..4");
    for (const auto& b : bounds) {
        if (!(b.hi > b.lo)) throw Error(ErrorCode::InvalidArgument, "every interval must be non-empty");
    }
    const std::size_t dim = bounds.size();
    std::mt19937_64 rng(cfg.seed);

    BayesResult res;
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    bool any_signal = false;

    auto evaluate = [&](const std::vector<double>& x, const char* action) {
        Evaluation e = objective(x);
        if (!std::isfinite(e.cost)) throw Error(ErrorCode::NonFinite, "objective returned a non-finite cost");
        xs.push_back(x);
        ys.push_back(e.cost);
        any_signal = any_signal || e.signal;
        res.trace.iterations.push_back({x, e.measurement, e.cost, action});
        res.trace.wall_actions += static_cast<long>(dim);
        ++res.trace.iters_used;
        if (res.best_inputs.empty() || e.cost < res.best.cost) {
            res.best_inputs = x;
            res.best = e;
        }
        return e;
    };

    auto initial_design = [&](std::span<const Interval> box, int n, bool with_center, const char* action) {
        std::vector<std::vector<double>> pts;
        if (with_center) {
            std::vector<double> c(dim);
            for (std::size_t d = 0; d < dim; ++d) c[d] = box[d].mid();
            pts.push_back(std::move(c));
        }
        auto lhs = latin_hypercube(box, n - static_cast<int>(pts.size()), rng);
        pts.insert(pts.end(), lhs.begin(), lhs.end());
        for (const auto& p : pts) evaluate(p, action);
    };

    initial_design(bounds, cfg.init_samples, cfg.include_center, "init");

    std::vector<Interval> box(bounds.begin(), bounds.end());
    if (!any_signal && cfg.no_signal == NoSignalPolicy::Fail) {
        for (auto& b : box) {
            const double half = 0.5 * b.width() * cfg.widen_factor;
            const double m = b.mid();
            b = {m - half, m + half};
        }
        initial_design(box, cfg.init_samples, false, "widen");
        if (!any_signal) {
            throw OptimizationError(ErrorCode::NoSignal, "no signal anywhere in the search region", res.trace);
        }
    }

    auto accepted = [&](const Evaluation& e) { return success && success(e); };
    if (accepted(res.best)) {
        res.trace.converged = true;
        return res;
    }

    GaussianProcess gp(cfg.length_scale, 1e-4);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> local(0.0, 0.5 * cfg.length_scale);

    while (res.trace.iters_used < cfg.max_iters) {
        gp.fit(xs, ys);
        const double best = *std::min_element(ys.begin(), ys.end());
        double scale = 0.0;
        {
            double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
            for (double v : ys) scale += (v - mean) * (v - mean);
            scale = std::sqrt(scale / static_cast<double>(ys.size()));
        }
        const double xi = cfg.explore_weight * (scale > 0.0 ? scale : 1.0);
        auto score = [&](const std::vector<double>& x) { return expected_improvement(gp.predict(x), best, xi); };

        std::vector<Candidate> cands;
        if (dim <= 2) {
            int total = 1;
            for (std::size_t d = 0; d < dim; ++d) total *= kGridPerAxis;
            cands.reserve(static_cast<std::size_t>(total));
            for (int idx = 0; idx < total; ++idx) {
                std::vector<double> x(dim);
                int rest = idx;
                for (std::size_t d = 0; d < dim; ++d) {
                    int k = rest % kGridPerAxis;
                    rest /= kGridPerAxis;
                    x[d] = box[d].lo + (k + 0.5) / kGridPerAxis * box[d].width();
                }
                cands.push_back({std::move(x), 0.0});
            }
        } else {
            cands.reserve(kRandomCandidates + kLocalCandidates);
            for (int i = 0; i < kRandomCandidates; ++i) {
                std::vector<double> x(dim);
                for (std::size_t d = 0; d < dim; ++d) x[d] = box[d].lo + unit(rng) * box[d].width();
                cands.push_back({std::move(x), 0.0});
            }
            for (int i = 0; i < kLocalCandidates; ++i) {
                std::vector<double> x = res.best_inputs;
                for (std::size_t d = 0; d < dim; ++d) x[d] += local(rng);
                cands.push_back({clamp_to(std::move(x), box), 0.0});
            }
        }
        for (auto& c : cands) c.ei = score(c.x);
        const std::size_t starts = std::min<std::size_t>(kRefineStarts, cands.size());
        std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(starts), cands.end(),
                          [](const Candidate& a, const Candidate& b) { return a.ei > b.ei; });

        // Compass search from the best few candidates.
        Candidate pick = cands.front();
        for (std::size_t s = 0; s < starts; ++s) {
            Candidate cur = cands[s];
            std::vector<double> step(dim);
            for (std::size_t d = 0; d < dim; ++d) step[d] = box[d].width() / kGridPerAxis;
            for (int round = 0; round < 12; ++round) {
                bool moved = false;
                for (std::size_t d = 0; d < dim; ++d) {
                    for (double sgn : {1.0, -1.0}) {
                        std::vector<double> x = cur.x;
                        x[d] += sgn * step[d];
                        x = clamp_to(std::move(x), box);
                        double v = score(x);
                        if (v > cur.ei) {
                            cur = {std::move(x), v};
                            moved = true;
                        }
                    }
                }
                if (!moved) {
                    for (double& st : step) st *= 0.5;
                }
            }
            if (cur.ei > pick.ei) pick = cur;
        }

        Evaluation e = evaluate(pick.x, "ei");
        if (accepted(e)) {
            res.trace.converged = true;
            break;
        }
    }
    return res;
}

}  // namespace cavforge
