#pragma once

// Pontryagin machinery: switching functions K^c = <p, B_c x>, the adjoint
// gradient of I(c), and the analytic conditions under which zero controls
// satisfy the maximum principle or form a stationary point.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "tqoc/controls.hpp"
#include "tqoc/dynamics.hpp"
#include "tqoc/errors.hpp"
#include "tqoc/model.hpp"
#include "tqoc/objectives.hpp"

namespace tqoc {

/// Switching functions sampled at the left endpoint of every trajectory interval.
struct SwitchingValues {
    std::vector<double> K_u, K_n1, K_n2;
};

inline SwitchingValues switching(const SystemMatrices& m, const Trajectory& x_traj, const Trajectory& p_traj)
{
    if (x_traj.times.size() != p_traj.times.size() || x_traj.times.empty())
        throw GridMismatch("switching: trajectories have different lengths");
    for (std::size_t i = 0; i < x_traj.times.size(); ++i)
        if (std::abs(x_traj.times[i] - p_traj.times[i]) > 1e-12 * std::max(1.0, x_traj.times.back()))
            throw GridMismatch("switching: trajectories live on different time grids");

    const std::size_t n = x_traj.intervals();
    SwitchingValues k;
    k.K_u.resize(n);
    k.K_n1.resize(n);
    k.K_n2.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const RealVector16& x = x_traj.states[i];
        const RealVector16& p = p_traj.states[i];
        k.K_u[i] = dot(p, m.B_u.apply(x));
        k.K_n1[i] = dot(p, m.B_n1.apply(x));
        k.K_n2[i] = dot(p, m.B_n2.apply(x));
    }
    return k;
}

/// L2 gradient of I on the control grid, one value per interval and control.
struct ControlGradient {
    std::vector<double> u, n1, n2;

    double max_abs() const
    {
        double m = 0.0;
        for (const auto* v : {&u, &n1, &n2})
            for (double g : *v) m = std::max(m, std::abs(g));
        return m;
    }
};

struct GradientResult {
    ControlGradient grad;
    double I = 0.0;
    double overlap = 0.0;
    Trajectory x_traj;
    Trajectory p_traj;
    int cauchy_solves = 0;
};

/// Forward solve, transversality, backward solve.
///
/// grad = -(interval mean of K^u, K^n1, K^n2), the mean taken with a
/// composite three-point Gauss rule, so that dI/dc_k = (T/N) grad_k for the
/// piecewise-constant controls. Costs two Cauchy solves.
inline GradientResult gradient(const SystemMatrices& m, const ControlGrid& c, const ObjectiveSpec& spec,
                               const RealVector16& x0, const IntegratorOptions& opts = {})
{
    const std::size_t panels = quadrature_panels(m, c);
    const QuadratureTrajectory xq = propagate_forward_quadrature(m, c, x0, opts, panels);
    const RealVector16& xT = xq.nodes.states.back();
    const QuadratureTrajectory pq = propagate_adjoint_quadrature(m, c, transversality(xT, spec), opts, panels);

    GradientResult out;
    out.I = evaluate(xT, spec);
    out.overlap = overlap(xT, spec);
    out.cauchy_solves = 2;

    const std::size_t n = c.size();
    out.grad.u.assign(n, 0.0);
    out.grad.n1.assign(n, 0.0);
    out.grad.n2.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double ku = 0.0, kn1 = 0.0, kn2 = 0.0;
        for (std::size_t j = 0; j < panels; ++j)
            for (std::size_t g = 0; g < 3; ++g) {
                const RealVector16& x = xq.interior[k * panels + j][g];
                const RealVector16& p = pq.interior[k * panels + j][g];
                ku += kGaussWeights[g] * dot(p, m.B_u.apply(x));
                kn1 += kGaussWeights[g] * dot(p, m.B_n1.apply(x));
                kn2 += kGaussWeights[g] * dot(p, m.B_n2.apply(x));
            }
        const double P = static_cast<double>(panels);
        out.grad.u[k] = -ku / P;
        out.grad.n1[k] = -kn1 / P;
        out.grad.n2[k] = -kn2 / P;
    }
    out.x_traj = xq.nodes;
    out.p_traj = pq.nodes;
    return out;
}

enum class InitialStateKind { PureGround, CompletelyMixed };

inline std::array<double, 4> initial_populations(InitialStateKind kind)
{
    return kind == InitialStateKind::PureGround ? std::array<double, 4>{1.0, 0.0, 0.0, 0.0}
                                                : std::array<double, 4>{0.25, 0.25, 0.25, 0.25};
}

/// rho0 kind, sign s (+1 maximize, -1 minimize) and diagonal target b.
struct PmpCaseConfig {
    InitialStateKind rho0_kind = InitialStateKind::PureGround;
    int s = 1;
    std::array<double, 4> b{1.0, 0.0, 0.0, 0.0};
    double eq_tol = 1e-12;

    void validate() const
    {
        if (s != 1 && s != -1) throw InvalidArgument("PmpCaseConfig: s must be +1 or -1");
        double sum = 0.0;
        for (double v : b) {
            if (v < -eq_tol) throw InvalidArgument("PmpCaseConfig: b must be nonnegative");
            sum += v;
        }
        if (std::abs(sum - 1.0) > std::max(eq_tol, 1e-12))
            throw InvalidArgument("PmpCaseConfig: b must sum to 1");
    }
};

namespace detail {

struct Cmp {
    double tol;
    bool eq(double a, double b) const { return std::abs(a - b) <= tol; }
    bool le(double a, double b) const { return a <= b + tol; }
    bool ge(double a, double b) const { return a >= b - tol; }
    bool lt(double a, double b) const { return a < b - tol; }
    bool gt(double a, double b) const { return a > b + tol; }
};

}  // namespace detail

/// True iff zero controls satisfy the maximum principle for the case, as
/// given by the sufficient logical conditions on b for each (rho0, s).
inline bool pmp_zero_control_condition(const PmpCaseConfig& cfg)
{
    const detail::Cmp c{cfg.eq_tol};
    const auto [b1, b2, b3, b4] = cfg.b;
    const bool on_simplex = c.eq(b1 + b2 + b3 + b4, 1.0);
    if (!on_simplex) return false;

    if (cfg.rho0_kind == InitialStateKind::PureGround) {
        if (cfg.s == 1) {
            const bool all_zero = c.eq(b1, 0.0) && c.eq(b2, 0.0) && c.eq(b3, 0.0);
            const bool low = c.gt(b1, 0.0) && c.le(b1, 1.0 / 3.0) && c.ge(b2, 0.0) && c.le(b2, b1) && c.ge(b3, 0.0) &&
                             c.le(b3, b1);
            const bool mid =
                c.gt(b1, 1.0 / 3.0) && c.lt(b1, 0.5) && c.ge(b3, 0.0) &&
                ((c.gt(2 * b1 + b2, 1.0) && c.ge(b1, b2) && c.le(b1 + b2 + b3, 1.0)) ||
                 (c.ge(b1, b3) && c.ge(b2, 0.0) && c.le(2 * b1 + b2, 1.0)));
            const bool high = c.ge(b1, 0.5) && c.le(b1, 1.0) &&
                              ((c.ge(b2, 0.0) && c.lt(b1 + b2, 1.0) && c.ge(b3, 0.0) && c.le(b1 + b2 + b3, 1.0)) ||
                               (c.eq(b1 + b2, 1.0) && c.eq(b3, 0.0)));
            return all_zero || low || mid || high;
        }
        const bool zero_b1 = c.eq(b1, 0.0) && ((c.ge(b2, 0.0) && c.lt(b2, 1.0) && c.ge(b3, 0.0) && c.le(b2 + b3, 1.0)) ||
                                               (c.eq(b2, 1.0) && c.eq(b3, 0.0)));
        const bool low = c.gt(b1, 0.0) && c.le(b1, 1.0 / 3.0) &&
                         ((c.le(b1, b2) && c.lt(2 * b1 + b2, 1.0) && c.le(b1, b3) && c.le(b1 + b2 + b3, 1.0)) ||
                          (c.eq(2 * b1 + b2, 1.0) && c.eq(b1 + b2 + b3, 1.0)));
        return zero_b1 || low;
    }

    const bool equal_first_three = c.eq(b1, b2) && c.eq(b1, b3);
    if (cfg.s == 1) return c.ge(b1, 0.25) && c.le(b1, 1.0 / 3.0) && equal_first_three;
    return c.ge(b1, 0.0) && c.le(b1, 0.25) && equal_first_three;
}

/// Zero controls are a stationary point (all switching functions vanish) for
/// rho0 = diag(1,0,0,0) iff 0 <= b1 <= 1/3, b1 = b2 = b3, b4 = 1 - 3 b1.
inline bool stationary_zero_control_condition(const std::array<double, 4>& b, double eq_tol = 1e-12)
{
    const detail::Cmp c{eq_tol};
    return c.ge(b[0], 0.0) && c.le(b[0], 1.0 / 3.0) && c.eq(b[0], b[1]) && c.eq(b[1], b[2]) &&
           c.eq(b[3], 1.0 - 3.0 * b[0]);
}

/// Closed-form K^{n1}, K^{n2} along zero controls, diagonal target b, sign s.
inline std::array<double, 2> zero_control_switching(const SystemParams& p, InitialStateKind kind,
                                                     const std::array<double, 4>& b, double s, double T, double t)
{
    const double eps = p.epsilon;
    const auto [b1, b2, b3, b4] = b;
    if (kind == InitialStateKind::PureGround) {
        return {-2.0 * (b1 - b3) * s * std::exp(2.0 * eps * p.Omega1 * (t - T)) * eps * p.Omega1,
                -2.0 * (b1 - b2) * s * std::exp(2.0 * eps * p.Omega2 * (t - T)) * eps * p.Omega2};
    }
    const double E = eps * std::exp(-2.0 * eps * (p.Omega1 + p.Omega2) * T);
    return {-(std::exp(2.0 * eps * p.Omega1 * t) - 1.0) *
                ((2.0 * std::exp(2.0 * eps * p.Omega2 * T) - 1.0) * (b1 - b3) + b2 - b4) * s * p.Omega1 * E,
            -(std::exp(2.0 * eps * p.Omega2 * t) - 1.0) *
                ((2.0 * std::exp(2.0 * eps * p.Omega1 * T) - 1.0) * (b1 - b2) + b3 - b4) * s * p.Omega2 * E};
}

struct PmpVerification {
    bool condition = false;              // pmp_zero_control_condition
    bool stationary_condition = false;   // only meaningful for PureGround
    double max_abs_K_u = 0.0;
    double max_K_n1 = 0.0;               // largest value (positive means the sign condition fails)
    double max_K_n2 = 0.0;
    double max_abs_K_n = 0.0;
    double max_closed_form_deviation = 0.0;
    bool satisfied = false;              // numeric sign conditions hold at tolerance
};

/// Propagates zero controls and the conjugate system numerically on N
/// intervals of [0, T] and checks the maximization conditions.
inline PmpVerification verify_pmp_numerically(const PmpCaseConfig& cfg, const SystemParams& params, double T,
                                              std::size_t N, double tol = 1e-9, const IntegratorOptions& opts = {})
{
    cfg.validate();
    const SystemMatrices m = build_system_matrices(params);
    const ControlGrid zero(T, N);
    const RealVector16 x0 = diagonal_state(initial_populations(cfg.rho0_kind));
    RealVector16 pT = diagonal_state(cfg.b);
    for (double& v : pT) v *= cfg.s;

    const Trajectory x = propagate_forward(m, zero, x0, N, opts);
    const Trajectory p = propagate_adjoint(m, zero, pT, N, opts);
    const SwitchingValues k = switching(m, x, p);

    PmpVerification r;
    r.condition = pmp_zero_control_condition(cfg);
    r.stationary_condition =
        cfg.rho0_kind == InitialStateKind::PureGround && stationary_zero_control_condition(cfg.b, cfg.eq_tol);
    r.max_K_n1 = -std::numeric_limits<double>::infinity();
    r.max_K_n2 = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k.K_u.size(); ++i) {
        r.max_abs_K_u = std::max(r.max_abs_K_u, std::abs(k.K_u[i]));
        r.max_K_n1 = std::max(r.max_K_n1, k.K_n1[i]);
        r.max_K_n2 = std::max(r.max_K_n2, k.K_n2[i]);
        r.max_abs_K_n = std::max({r.max_abs_K_n, std::abs(k.K_n1[i]), std::abs(k.K_n2[i])});
        const auto closed = zero_control_switching(params, cfg.rho0_kind, cfg.b, cfg.s, T, x.times[i]);
        r.max_closed_form_deviation =
            std::max({r.max_closed_form_deviation, std::abs(closed[0] - k.K_n1[i]), std::abs(closed[1] - k.K_n2[i])});
    }
    r.satisfied = r.max_abs_K_u < tol && r.max_K_n1 < tol && r.max_K_n2 < tol;
    return r;
}

}  // namespace tqoc
