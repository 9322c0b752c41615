#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "tqoc/errors.hpp"

namespace tqoc {

/// Box constraints for c = (u, n1, n2); n_j >= 0 always.
struct ConstraintSet {
    double u_min = -std::numeric_limits<double>::infinity();
    double u_max = std::numeric_limits<double>::infinity();
    double n_max = std::numeric_limits<double>::infinity();

    static ConstraintSet unbounded() { return {}; }

    void validate() const
    {
        if (!(u_min < 0.0) || !(u_max > 0.0))
            throw InvalidArgument("ConstraintSet requires u_min < 0 < u_max");
        if (!(n_max > 0.0)) throw InvalidArgument("ConstraintSet requires n_max > 0");
    }

    double clamp_u(double u) const { return std::clamp(u, u_min, u_max); }
    double clamp_n(double n) const { return std::clamp(n, 0.0, n_max); }
};

/// Piecewise-constant controls on N uniform intervals of [0, T].
/// Sample k holds the value on [t_k, t_{k+1}), t_k = k T / N.
struct ControlGrid {
    double T = 1.0;
    std::vector<double> u, n1, n2;

    ControlGrid() = default;
    ControlGrid(double final_time, std::size_t intervals)
        : T(final_time), u(intervals, 0.0), n1(intervals, 0.0), n2(intervals, 0.0)
    {
        if (!(final_time > 0.0)) throw InvalidArgument("ControlGrid: T must be > 0");
        if (intervals == 0) throw InvalidArgument("ControlGrid: N must be positive");
    }

    std::size_t size() const { return u.size(); }
    double step() const { return T / static_cast<double>(size()); }
    double start(std::size_t k) const { return T * static_cast<double>(k) / static_cast<double>(size()); }

    void validate() const
    {
        if (!(T > 0.0)) throw InvalidArgument("ControlGrid: T must be > 0");
        if (u.empty() || n1.size() != u.size() || n2.size() != u.size())
            throw InvalidArgument("ControlGrid: u, n1, n2 must have the same positive length");
    }

    bool satisfies(const ConstraintSet& q) const
    {
        for (std::size_t k = 0; k < size(); ++k) {
            if (u[k] < q.u_min || u[k] > q.u_max) return false;
            if (n1[k] < 0.0 || n1[k] > q.n_max) return false;
            if (n2[k] < 0.0 || n2[k] > q.n_max) return false;
        }
        return true;
    }

    friend bool operator==(const ControlGrid&, const ControlGrid&) = default;
};

struct ControlSample {
    double u, n1, n2;
};

/// Orthogonal projection onto the box: componentwise clamp.
inline ControlGrid project(ControlGrid c, const ConstraintSet& q)
{
    for (std::size_t k = 0; k < c.size(); ++k) {
        c.u[k] = q.clamp_u(c.u[k]);
        c.n1[k] = q.clamp_n(c.n1[k]);
        c.n2[k] = q.clamp_n(c.n2[k]);
    }
    return c;
}

/// Value at time t; t == T maps to the last interval.
inline ControlSample sample(const ControlGrid& c, double t)
{
    if (!(t >= 0.0 && t <= c.T)) throw OutOfRange("sample: t outside [0, T]");
    const std::size_t n = c.size();
    auto k = static_cast<std::size_t>(std::floor(t * static_cast<double>(n) / c.T));
    k = std::min(k, n - 1);
    return {c.u[k], c.n1[k], c.n2[k]};
}

using ScalarFunction = std::function<double(double)>;

/// Samples each function at interval midpoints t_k + T/(2N).
inline ControlGrid init_from_functions(double T, std::size_t N, const ScalarFunction& fu, const ScalarFunction& fn1,
                                       const ScalarFunction& fn2)
{
    ControlGrid c(T, N);
    for (std::size_t k = 0; k < N; ++k) {
        const double mid = c.start(k) + 0.5 * c.step();
        c.u[k] = fu(mid);
        c.n1[k] = fn1(mid);
        c.n2[k] = fn2(mid);
    }
    return c;
}

inline ControlGrid constant_controls(double T, std::size_t N, double u, double n1, double n2)
{
    return init_from_functions(
        T, N, [u](double) { return u; }, [n1](double) { return n1; }, [n2](double) { return n2; });
}

/// sqrt(sum v_k^2 * T/N)
inline double l2_norm(const std::vector<double>& v, double T)
{
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s * T / static_cast<double>(v.size()));
}

inline bool is_nonincreasing(const std::vector<double>& seq, double slack = 0.0)
{
    for (std::size_t i = 1; i < seq.size(); ++i)
        if (seq[i] > seq[i - 1] + slack) return false;
    return true;
}

/// CSV with columns t_start,u,n1,n2.
inline void write_controls_csv(std::ostream& os, const ControlGrid& c)
{
    os << "t_start,u,n1,n2\n";
    os.precision(17);
    for (std::size_t k = 0; k < c.size(); ++k)
        os << c.start(k) << ',' << c.u[k] << ',' << c.n1[k] << ',' << c.n2[k] << '\n';
}

}  // namespace tqoc
