#pragma once

// Forward propagation of x' = G(c(t)) x and backward propagation of the
// conjugate system p' = -G(c(t))^T p for piecewise-constant controls, plus the
// closed-form solutions under zero controls.
//
// The integrator is restarted at every control breakpoint so no step ever
// straddles a jump in the controls. The conjugate system is solved forward in
// tau = T - t as q' = G^T q with the same stepper.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tqoc/controls.hpp"
#include "tqoc/errors.hpp"
#include "tqoc/model.hpp"
#include "tqoc/smallmat.hpp"

namespace tqoc {

enum class IntegratorKind { DormandPrince54, ClassicalRk4 };

struct IntegratorOptions {
    IntegratorKind kind = IntegratorKind::DormandPrince54;
    double rtol = 1e-8;
    double atol = 1e-10;
    int rk4_substeps = 4;          // fixed steps per integration segment in Rk4 mode
    std::size_t max_steps = 1000000;  // per segment
};

/// Integrates the autonomous linear system y' = G y across consecutive
/// segments. The accepted step size carries over between segments.
class SegmentIntegrator {
public:
    explicit SegmentIntegrator(IntegratorOptions opts = {}) : opts_(opts) {}

    RealVector16 advance(const RealMatrix16& g, RealVector16 y, double span)
    {
        if (span <= 0.0) return y;
        if (opts_.kind == IntegratorKind::ClassicalRk4) return advance_rk4(g, y, span);
        return advance_dp54(g, y, span);
    }

    std::size_t accepted_steps() const { return accepted_; }
    std::size_t rejected_steps() const { return rejected_; }

private:
    static RealVector16 axpy(const RealVector16& y, double h, std::initializer_list<std::pair<double, const RealVector16*>> terms)
    {
        RealVector16 out = y;
        for (const auto& [coef, k] : terms) {
            if (coef == 0.0) continue;
            const double s = h * coef;
            for (std::size_t i = 0; i < 16; ++i) out[i] += s * (*k)[i];
        }
        return out;
    }

    RealVector16 advance_rk4(const RealMatrix16& g, RealVector16 y, double span)
    {
        const int n = std::max(1, opts_.rk4_substeps);
        const double h = span / n;
        for (int s = 0; s < n; ++s) {
            const RealVector16 k1 = g.apply(y);
            const RealVector16 k2 = g.apply(axpy(y, h, {{0.5, &k1}}));
            const RealVector16 k3 = g.apply(axpy(y, h, {{0.5, &k2}}));
            const RealVector16 k4 = g.apply(axpy(y, h, {{1.0, &k3}}));
            y = axpy(y, h, {{1.0 / 6.0, &k1}, {1.0 / 3.0, &k2}, {1.0 / 3.0, &k3}, {1.0 / 6.0, &k4}});
            ++accepted_;
        }
        return y;
    }

    RealVector16 advance_dp54(const RealMatrix16& g, RealVector16 y, double span)
    {
        static constexpr double a21 = 1.0 / 5.0;
        static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
        static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
        static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                                a54 = -212.0 / 729.0;
        static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                                a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
        static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                                b6 = 11.0 / 84.0;
        static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                                e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

        double t = 0.0;
        double h = h_next_ > 0.0 ? std::min(h_next_, span) : span;
        RealVector16 k1 = g.apply(y);
        std::size_t steps = 0;
        bool last_rejected = false;

        while (t < span) {
            if (++steps > opts_.max_steps) throw ToleranceFailure("dp54: step budget exhausted");
            const double remaining = span - t;
            bool final_step = false;
            if (h >= remaining * (1.0 - 1e-12)) {
                h = remaining;
                final_step = true;
            }
            if (h < 1e-14 * span) throw ToleranceFailure("dp54: step size underflow");

            const RealVector16 k2 = g.apply(axpy(y, h, {{a21, &k1}}));
            const RealVector16 k3 = g.apply(axpy(y, h, {{a31, &k1}, {a32, &k2}}));
            const RealVector16 k4 = g.apply(axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
            const RealVector16 k5 = g.apply(axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
            const RealVector16 k6 =
                g.apply(axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
            const RealVector16 y_new = axpy(y, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
            const RealVector16 k7 = g.apply(y_new);

            double err = 0.0;
            for (std::size_t i = 0; i < 16; ++i) {
                const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
                const double sc = opts_.atol + opts_.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
                err += (e / sc) * (e / sc);
            }
            err = std::sqrt(err / 16.0);
            if (!std::isfinite(err)) throw ToleranceFailure("dp54: non-finite error estimate");

            double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 10.0;
            fac = std::clamp(fac, 0.2, 10.0);

            if (err <= 1.0) {
                t = final_step ? span : t + h;
                y = y_new;
                k1 = k7;
                ++accepted_;
                if (last_rejected) fac = std::min(fac, 1.0);
                last_rejected = false;
                // A step truncated to hit the segment end says little about the next one.
                if (!final_step || h_next_ <= 0.0) h_next_ = h * fac;
                h = h * fac;
            } else {
                ++rejected_;
                last_rejected = true;
                h = h * fac;
                h_next_ = h;
            }
        }
        return y;
    }

    IntegratorOptions opts_;
    double h_next_ = 0.0;
    std::size_t accepted_ = 0;
    std::size_t rejected_ = 0;
};

/// Samples on a uniform grid t_0 = 0, ..., t_K = T.
struct Trajectory {
    std::vector<double> times;
    std::vector<RealVector16> states;

    std::size_t intervals() const { return times.empty() ? 0 : times.size() - 1; }
    double final_time() const { return times.back(); }
};

/// Three-point Gauss-Legendre rule on [0, 1].
inline constexpr std::array<double, 3> kGaussNodes{0.5 - 0.3872983346207416885, 0.5, 0.5 + 0.3872983346207416885};
inline constexpr std::array<double, 3> kGaussWeights{5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

/// Trajectory on the control breakpoints plus the values at the Gauss nodes
/// of `panels` equal sub-panels of every control interval; interior[k * panels + j]
/// holds panel j of interval k.
struct QuadratureTrajectory {
    Trajectory nodes;
    std::size_t panels = 1;
    std::vector<std::array<RealVector16, 3>> interior;
};

/// Largest h * |G|_inf allowed on one Gauss panel.
inline constexpr double kPanelSpan = 1.0;

namespace detail {

inline std::vector<RealMatrix16> interval_generators(const SystemMatrices& m, const ControlGrid& c, bool transpose)
{
    std::vector<RealMatrix16> gens;
    gens.reserve(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) {
        RealMatrix16 g = m.generator(c.u[k], c.n1[k], c.n2[k]);
        gens.push_back(transpose ? g.transpose() : g);
    }
    return gens;
}

// Walks the intervals in sweep order. `fractions` are ascending stop points
// within an interval in the sweep direction, ending at 1. on_stop(interval,
// stop index, y) fires after each stop.
template <class OnStop>
RealVector16 sweep(const std::vector<RealMatrix16>& gens, bool reverse, RealVector16 y, double h,
                   std::span<const double> fractions, const IntegratorOptions& opts, OnStop&& on_stop)
{
    SegmentIntegrator integrator(opts);
    const std::size_t n = gens.size();
    for (std::size_t step = 0; step < n; ++step) {
        const std::size_t k = reverse ? n - 1 - step : step;
        double prev = 0.0;
        for (std::size_t j = 0; j < fractions.size(); ++j) {
            y = integrator.advance(gens[k], y, (fractions[j] - prev) * h);
            prev = fractions[j];
            on_stop(k, j, y);
        }
    }
    return y;
}

inline std::size_t substeps_per_interval(const ControlGrid& c, std::size_t K)
{
    if (K == 0 || K % c.size() != 0)
        throw GridMismatch("trajectory node count K=" + std::to_string(K) + " is not a multiple of N=" +
                           std::to_string(c.size()));
    return K / c.size();
}

inline std::vector<double> uniform_times(double T, std::size_t K)
{
    std::vector<double> t(K + 1);
    for (std::size_t i = 0; i <= K; ++i) t[i] = T * static_cast<double>(i) / static_cast<double>(K);
    t[K] = T;
    return t;
}

}  // namespace detail

/// Solves x' = (A + B_u u + B_n1 n1 + B_n2 n2) x from x(0) = x0, storing K + 1 nodes.
/// K defaults to N and must be a multiple of it.
inline Trajectory propagate_forward(const SystemMatrices& m, const ControlGrid& c, const RealVector16& x0,
                                    std::size_t K = 0, const IntegratorOptions& opts = {})
{
    c.validate();
    if (K == 0) K = c.size();
    const std::size_t sub = detail::substeps_per_interval(c, K);
    std::vector<double> fractions(sub);
    for (std::size_t j = 0; j < sub; ++j) fractions[j] = static_cast<double>(j + 1) / static_cast<double>(sub);

    Trajectory traj;
    traj.times = detail::uniform_times(c.T, K);
    traj.states.assign(K + 1, RealVector16{});
    traj.states[0] = x0;
    detail::sweep(detail::interval_generators(m, c, false), false, x0, c.step(), fractions, opts,
                  [&](std::size_t k, std::size_t j, const RealVector16& y) { traj.states[k * sub + j + 1] = y; });
    return traj;
}

/// Solves p' = -(A + ...)^T p backward from p(T) = pT; returned on the ascending grid.
inline Trajectory propagate_adjoint(const SystemMatrices& m, const ControlGrid& c, const RealVector16& pT,
                                    std::size_t K = 0, const IntegratorOptions& opts = {})
{
    c.validate();
    if (K == 0) K = c.size();
    const std::size_t sub = detail::substeps_per_interval(c, K);
    std::vector<double> fractions(sub);
    for (std::size_t j = 0; j < sub; ++j) fractions[j] = static_cast<double>(j + 1) / static_cast<double>(sub);

    Trajectory traj;
    traj.times = detail::uniform_times(c.T, K);
    traj.states.assign(K + 1, RealVector16{});
    traj.states[K] = pT;
    detail::sweep(detail::interval_generators(m, c, true), true, pT, c.step(), fractions, opts,
                  [&](std::size_t k, std::size_t j, const RealVector16& y) { traj.states[k * sub + sub - 1 - j] = y; });
    return traj;
}

namespace detail {

// Stop points of a sweep: the Gauss nodes of every panel, then the interval end.
// In reverse sweeps tau-fraction f corresponds to t-fraction 1 - f.
inline std::vector<double> panel_fractions(std::size_t panels, bool reverse)
{
    std::vector<double> f;
    f.reserve(3 * panels + 1);
    const double P = static_cast<double>(panels);
    for (std::size_t j = 0; j < panels; ++j)
        for (std::size_t g = 0; g < 3; ++g) {
            const double t = (static_cast<double>(j) + kGaussNodes[g]) / P;
            f.push_back(reverse ? 1.0 - (static_cast<double>(panels - 1 - j) + kGaussNodes[2 - g]) / P : t);
        }
    f.push_back(1.0);
    return f;
}

}  // namespace detail

/// Panels per interval so that every panel satisfies h_panel * |G_k|_inf <= kPanelSpan.
inline std::size_t quadrature_panels(const SystemMatrices& m, const ControlGrid& c)
{
    double worst = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
        const RealMatrix16 g = m.generator(c.u[k], c.n1[k], c.n2[k]);
        for (std::size_t r = 0; r < 16; ++r) {
            double row = 0.0;
            for (std::size_t col = 0; col < 16; ++col) row += std::abs(g(r, col));
            worst = std::max(worst, row);
        }
    }
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(c.step() * worst / kPanelSpan)));
}

/// Forward solve that also records the state at the Gauss nodes of each panel.
inline QuadratureTrajectory propagate_forward_quadrature(const SystemMatrices& m, const ControlGrid& c,
                                                         const RealVector16& x0, const IntegratorOptions& opts = {},
                                                         std::size_t panels = 1)
{
    c.validate();
    if (panels == 0) throw InvalidArgument("propagate_forward_quadrature: panels must be positive");
    const std::size_t n = c.size();
    const std::vector<double> fractions = detail::panel_fractions(panels, false);
    const std::size_t inner = 3 * panels;
    QuadratureTrajectory out;
    out.panels = panels;
    out.nodes.times = detail::uniform_times(c.T, n);
    out.nodes.states.assign(n + 1, RealVector16{});
    out.nodes.states[0] = x0;
    out.interior.assign(n * panels, {});
    detail::sweep(detail::interval_generators(m, c, false), false, x0, c.step(), fractions, opts,
                  [&](std::size_t k, std::size_t j, const RealVector16& y) {
                      if (j < inner)
                          out.interior[k * panels + j / 3][j % 3] = y;
                      else
                          out.nodes.states[k + 1] = y;
                  });
    return out;
}

/// Backward conjugate solve recording p at the Gauss nodes of each panel.
inline QuadratureTrajectory propagate_adjoint_quadrature(const SystemMatrices& m, const ControlGrid& c,
                                                         const RealVector16& pT, const IntegratorOptions& opts = {},
                                                         std::size_t panels = 1)
{
    c.validate();
    if (panels == 0) throw InvalidArgument("propagate_adjoint_quadrature: panels must be positive");
    const std::size_t n = c.size();
    const std::vector<double> fractions = detail::panel_fractions(panels, true);
    const std::size_t inner = 3 * panels;
    QuadratureTrajectory out;
    out.panels = panels;
    out.nodes.times = detail::uniform_times(c.T, n);
    out.nodes.states.assign(n + 1, RealVector16{});
    out.nodes.states[n] = pT;
    out.interior.assign(n * panels, {});
    detail::sweep(detail::interval_generators(m, c, true), true, pT, c.step(), fractions, opts,
                  [&](std::size_t k, std::size_t j, const RealVector16& y) {
                      if (j < inner)
                          out.interior[k * panels + panels - 1 - j / 3][2 - j % 3] = y;
                      else
                          out.nodes.states[k] = y;
                  });
    return out;
}

/// Diagonal initial state diag(a) realified.
inline RealState diagonal_state(const std::array<double, 4>& a)
{
    RealState x{};
    for (std::size_t i = 0; i < 4; ++i) x[kDiagonalSlots[i]] = a[i];
    return x;
}

/// Closed-form x(t) = e^{At} x0 for x0 = diag(a) under zero controls.
inline RealState zero_control_state(const SystemParams& p, const std::array<double, 4>& a, double t)
{
    const double e1 = std::exp(-2.0 * p.epsilon * p.Omega1 * t);
    const double e2 = std::exp(-2.0 * p.epsilon * p.Omega2 * t);
    const double e12 = std::exp(-2.0 * p.epsilon * (p.Omega1 + p.Omega2) * t);
    const double g1 = std::exp(2.0 * p.epsilon * p.Omega1 * t);
    const double g2 = std::exp(2.0 * p.epsilon * p.Omega2 * t);

    RealState x{};
    x[0] = a[0] + a[1] - a[1] * e2 + e12 * (g1 - 1.0) * (a[2] * g2 + a[3] * (g2 - 1.0));
    x[7] = e2 * (a[1] + a[3] - a[3] * e1);
    x[12] = e1 * (a[2] + a[3] - a[3] * e2);
    x[15] = a[3] * e12;
    return x;
}

/// Closed-form p(t) of the conjugate system under zero controls with
/// p(T) = s * diag(b) realified. Written in D_j = exp(-2 eps Omega_j (T - t)).
inline RealVector16 zero_control_adjoint(const SystemParams& p, const std::array<double, 4>& b, double s, double T,
                                         double t)
{
    const double d1 = std::exp(-2.0 * p.epsilon * p.Omega1 * (T - t));
    const double d2 = std::exp(-2.0 * p.epsilon * p.Omega2 * (T - t));

    RealVector16 q{};
    q[0] = b[0] * s;
    q[7] = (b[1] * d2 + b[0] * (1.0 - d2)) * s;
    q[12] = (b[2] * d1 + b[0] * (1.0 - d1)) * s;
    q[15] = (b[1] * (d2 - d1 * d2) + b[2] * (d1 - d1 * d2) + b[3] * d1 * d2 + b[0] * (1.0 - d1) * (1.0 - d2)) * s;
    return q;
}

/// CSV: t, x1..x16, rho11..rho44.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj)
{
    os << "t";
    for (int j = 1; j <= 16; ++j) os << ",x" << j;
    os << ",rho11,rho22,rho33,rho44\n";
    os.precision(17);
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        os << traj.times[i];
        for (double v : traj.states[i]) os << ',' << v;
        for (std::size_t d : kDiagonalSlots) os << ',' << traj.states[i][d];
        os << '\n';
    }
}

}  // namespace tqoc
