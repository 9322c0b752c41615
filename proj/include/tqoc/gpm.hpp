#pragma once

// One-step (GPM-1) and two-step heavy-ball (GPM-2) gradient projection:
//   c_{k+1} = Pr_Q(c_k - alpha_k grad I(c_k) + beta (c_k - c_{k-1}))
// with beta forced to 0 on the first iteration.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tqoc/controls.hpp"
#include "tqoc/dynamics.hpp"
#include "tqoc/errors.hpp"
#include "tqoc/objectives.hpp"
#include "tqoc/pmp.hpp"

namespace tqoc {

enum class GpmMethod { Gpm1, Gpm2 };

/// alpha_k = alpha (fixed) or alpha_hat / (k^sigma + 1) (decaying).
struct StepRule {
    enum class Kind { Fixed, Decaying } kind = Kind::Fixed;
    double alpha = 1.0;  // alpha, or alpha_hat for Decaying
    double sigma = 1.0;

    static StepRule fixed(double a) { return {Kind::Fixed, a, 1.0}; }
    static StepRule decaying(double alpha_hat, double sigma) { return {Kind::Decaying, alpha_hat, sigma}; }

    double at(std::size_t k) const
    {
        if (kind == Kind::Fixed) return alpha;
        return alpha / (std::pow(static_cast<double>(k), sigma) + 1.0);
    }
};

struct GpmConfig {
    GpmMethod method = GpmMethod::Gpm2;
    StepRule alpha_rule = StepRule::fixed(1.0);
    double beta = 0.9;
    double eps_stop1 = 1e-8;
    double eps_stop2 = 1e-4;
    double eps_stop3 = 1e-4;
    std::size_t max_iters = 1000;
    double divergence_guard = 1e6;

    void validate() const
    {
        if (!(alpha_rule.alpha > 0.0)) throw InvalidArgument("GpmConfig: alpha must be > 0");
        if (alpha_rule.kind == StepRule::Kind::Decaying && !(alpha_rule.sigma > 0.0))
            throw InvalidArgument("GpmConfig: sigma must be > 0");
        if (method == GpmMethod::Gpm2 && !(beta > 0.0 && beta < 1.0))
            throw InvalidArgument("GpmConfig: beta must lie in (0, 1)");
        if (max_iters == 0) throw InvalidArgument("GpmConfig: max_iters must be positive");
    }
};

enum class StopReason { SmallChange, SmallObjective, SmallDeviation, MaxIterations };

inline const char* to_string(StopReason r)
{
    switch (r) {
    case StopReason::SmallChange: return "small_change";
    case StopReason::SmallObjective: return "small_objective";
    case StopReason::SmallDeviation: return "small_deviation";
    case StopReason::MaxIterations: return "max_iterations";
    }
    return "?";
}

struct GpmIterate {
    std::size_t k = 0;
    double I = 0.0;
    double J = 0.0;  // overlap F at the iterate
    int cauchy_count = 0;
    double alpha = 0.0;
    bool non_monotone = false;  // I went up relative to the previous iterate
};

struct GpmReport {
    std::vector<GpmIterate> iterates;
    ControlGrid final_control;
    Trajectory final_trajectory;
    StopReason stop_reason = StopReason::MaxIterations;
    int cauchy_count = 0;
    std::vector<double> n1_l2_norms;

    double final_I() const { return iterates.back().I; }
    double final_overlap() const { return iterates.back().J; }
};

inline ControlGrid gpm_step(const ControlGrid& c, const ControlGrid& c_prev, const ControlGradient& g, double alpha,
                            double beta, const ConstraintSet& q)
{
    ControlGrid next = c;
    for (std::size_t k = 0; k < c.size(); ++k) {
        next.u[k] = c.u[k] - alpha * g.u[k] + beta * (c.u[k] - c_prev.u[k]);
        next.n1[k] = c.n1[k] - alpha * g.n1[k] + beta * (c.n1[k] - c_prev.n1[k]);
        next.n2[k] = c.n2[k] - alpha * g.n2[k] + beta * (c.n2[k] - c_prev.n2[k]);
    }
    return project(std::move(next), q);
}

/// Runs GPM from c0 until |I_{k+1} - I_k| < eps_stop1 or, for the smoothed
/// deviation, I < eps_stop2 or |F - M| < eps_stop3, or max_iters.
/// Every accepted iterate costs one gradient evaluation (two Cauchy solves).
inline GpmReport run_gpm(const SystemMatrices& m, const ObjectiveSpec& spec, const RealVector16& x0,
                         const ControlGrid& c0, const ConstraintSet& q, const GpmConfig& cfg,
                         const IntegratorOptions& opts = {})
{
    cfg.validate();
    spec.validate();
    q.validate();
    c0.validate();
    if (!c0.satisfies(q)) throw InvalidArgument("run_gpm: initial control violates the constraint set");

    const bool smoothed = spec.kind == ObjectiveKind::SmoothedDeviation;
    GpmReport report;

    auto check_finite = [&](double I) {
        if (!std::isfinite(I) || std::abs(I) > cfg.divergence_guard)
            throw Diverged("run_gpm: objective " + std::to_string(I) + " exceeded the divergence guard");
    };

    ControlGrid c_prev = c0;
    ControlGrid c = c0;
    GradientResult eval = gradient(m, c, spec, x0, opts);
    check_finite(eval.I);
    report.cauchy_count = eval.cauchy_solves;
    report.iterates.push_back({0, eval.I, eval.overlap, report.cauchy_count, 0.0, false});
    report.n1_l2_norms.push_back(l2_norm(c.n1, c.T));

    auto small_target = [&](const GradientResult& e) -> std::optional<StopReason> {
        if (!smoothed) return std::nullopt;
        if (e.I < cfg.eps_stop2) return StopReason::SmallObjective;
        if (std::abs(e.overlap - spec.M) < cfg.eps_stop3) return StopReason::SmallDeviation;
        return std::nullopt;
    };

    if (auto r = small_target(eval)) {
        report.stop_reason = *r;
    } else {
        for (std::size_t k = 0; k < cfg.max_iters; ++k) {
            const double alpha = cfg.alpha_rule.at(k);
            const double beta = (cfg.method == GpmMethod::Gpm2 && k > 0) ? cfg.beta : 0.0;
            ControlGrid next = gpm_step(c, c_prev, eval.grad, alpha, beta, q);
            c_prev = std::move(c);
            c = std::move(next);

            GradientResult next_eval = gradient(m, c, spec, x0, opts);
            check_finite(next_eval.I);
            report.cauchy_count += next_eval.cauchy_solves;
            report.iterates.push_back({k + 1, next_eval.I, next_eval.overlap, report.cauchy_count, alpha,
                                       next_eval.I > eval.I});
            report.n1_l2_norms.push_back(l2_norm(c.n1, c.T));

            const double change = std::abs(next_eval.I - eval.I);
            eval = std::move(next_eval);
            if (change < cfg.eps_stop1) {
                report.stop_reason = StopReason::SmallChange;
                break;
            }
            if (auto r = small_target(eval)) {
                report.stop_reason = *r;
                break;
            }
        }
    }

    report.final_control = c;
    report.final_trajectory = eval.x_traj;
    return report;
}

/// Runs a single iteration under two configurations from the same c0 and
/// reports whether c_1 is bitwise identical.
inline bool first_iteration_equivalence_check(const SystemMatrices& m, const ObjectiveSpec& spec,
                                              const RealVector16& x0, const ControlGrid& c0, const ConstraintSet& q,
                                              GpmConfig a, GpmConfig b, const IntegratorOptions& opts = {})
{
    a.max_iters = 1;
    b.max_iters = 1;
    a.eps_stop1 = b.eps_stop1 = -1.0;
    const GpmReport ra = run_gpm(m, spec, x0, c0, q, a, opts);
    const GpmReport rb = run_gpm(m, spec, x0, c0, q, b, opts);
    return ra.final_control == rb.final_control;
}

/// CSV: k,I,J,cauchy_count,alpha,non_monotone
inline void write_iterations_csv(std::ostream& os, const GpmReport& r)
{
    os << "k,I,J,cauchy_count,alpha,non_monotone\n";
    os.precision(17);
    for (const auto& it : r.iterates)
        os << it.k << ',' << it.I << ',' << it.J << ',' << it.cauchy_count << ',' << it.alpha << ','
           << (it.non_monotone ? 1 : 0) << '\n';
}

}  // namespace tqoc
