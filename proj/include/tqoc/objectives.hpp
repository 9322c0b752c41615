#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "tqoc/errors.hpp"
#include "tqoc/model.hpp"
#include "tqoc/smallmat.hpp"

namespace tqoc {

enum class ObjectiveKind { MaximizeOverlap, MinimizeOverlap, SquaredDeviation, SmoothedDeviation };

/// Which functional I(c) the optimizer minimizes.
///   MaximizeOverlap   I = J_bar - F
///   MinimizeOverlap   I = F
///   SquaredDeviation  I = (F - M)^2
///   SmoothedDeviation I = C^1 smoothing of |F - M| with width theta
/// where F = <x(T), beta o x_target> = Tr(rho(T) rho_target).
struct ObjectiveSpec {
    ObjectiveKind kind = ObjectiveKind::MaximizeOverlap;
    RealState x_target{};
    double M = 0.5;
    double theta = 1e-4;
    double J_bar = 1.0;

    void validate() const
    {
        if (!(std::abs(state_trace(x_target) - 1.0) <= 1e-9)) throw BadTrace("ObjectiveSpec: target trace != 1");
        if ((kind == ObjectiveKind::SquaredDeviation || kind == ObjectiveKind::SmoothedDeviation) &&
            !(M > 0.0 && M < 1.0))
            throw InvalidArgument("ObjectiveSpec: M must lie in (0, 1)");
        if (kind == ObjectiveKind::SmoothedDeviation && !(theta > 0.0))
            throw InvalidArgument("ObjectiveSpec: theta must be > 0");
    }
};

inline const char* to_string(ObjectiveKind k)
{
    switch (k) {
    case ObjectiveKind::MaximizeOverlap: return "maximize_overlap";
    case ObjectiveKind::MinimizeOverlap: return "minimize_overlap";
    case ObjectiveKind::SquaredDeviation: return "squared_deviation";
    case ObjectiveKind::SmoothedDeviation: return "smoothed_deviation";
    }
    return "?";
}

/// beta o x_target
inline RealVector16 weighted_target(const RealState& x_target)
{
    RealVector16 w{};
    for (std::size_t i = 0; i < 16; ++i) w[i] = kOverlapWeights[i] * x_target[i];
    return w;
}

inline double overlap(const RealState& x, const RealState& x_target) { return dot(x, weighted_target(x_target)); }

inline double overlap(const RealState& x, const ObjectiveSpec& spec) { return overlap(x, spec.x_target); }

/// Three-branch smoothing of |f - M|.
inline double smoothed_deviation(double f, double M, double theta)
{
    const double d = f - M;
    if (d < -theta) return -d;
    if (d > theta) return d;
    return 0.5 * (d * d / theta + theta);
}

/// d/dF of smoothed_deviation.
inline double smoothed_deviation_slope(double f, double M, double theta)
{
    const double d = f - M;
    if (d < -theta) return -1.0;
    if (d > theta) return 1.0;
    return d / theta;
}

/// Value of I at the terminal state.
inline double evaluate(const RealState& x_T, const ObjectiveSpec& spec)
{
    const double f = overlap(x_T, spec);
    switch (spec.kind) {
    case ObjectiveKind::MaximizeOverlap: return spec.J_bar - f;
    case ObjectiveKind::MinimizeOverlap: return f;
    case ObjectiveKind::SquaredDeviation: return (f - spec.M) * (f - spec.M);
    case ObjectiveKind::SmoothedDeviation: return smoothed_deviation(f, spec.M, spec.theta);
    }
    return f;
}

/// Terminal condition p(T) of the conjugate system: -dI/dx at x(T).
inline RealVector16 transversality(const RealState& x_T, const ObjectiveSpec& spec)
{
    const double f = overlap(x_T, spec);
    double scale = 1.0;
    switch (spec.kind) {
    case ObjectiveKind::MaximizeOverlap: scale = 1.0; break;
    case ObjectiveKind::MinimizeOverlap: scale = -1.0; break;
    case ObjectiveKind::SquaredDeviation: scale = -2.0 * (f - spec.M); break;
    case ObjectiveKind::SmoothedDeviation: scale = -smoothed_deviation_slope(f, spec.M, spec.theta); break;
    }
    RealVector16 p = weighted_target(spec.x_target);
    for (double& v : p) v *= scale;
    return p;
}

struct OverlapBounds {
    double lower = 0.0;
    double upper = 1.0;
};

/// Throws NotDensityMatrix unless rho is Hermitian, unit-trace and PSD (tolerances 1e-10, 1e-9, 1e-8).
inline EigenDecomposition4 checked_density_spectrum(const ComplexMatrix4& rho, const char* who)
{
    if (!(rho.hermiticity_defect() <= kHermitianTol))
        throw NotDensityMatrix(std::string(who) + ": matrix is not Hermitian");
    const double tr = rho.trace().real();
    if (!(std::abs(tr - 1.0) <= 1e-9)) throw NotDensityMatrix(std::string(who) + ": trace " + std::to_string(tr));
    EigenDecomposition4 eig = hermitian_eigen(rho);
    if (eig.values[0] < -1e-8)
        throw NotDensityMatrix(std::string(who) + ": negative eigenvalue " + std::to_string(eig.values[0]));
    return eig;
}

/// Over all density matrices, Tr(rho rho_target) ranges over [lambda_min, lambda_max] of rho_target.
inline OverlapBounds overlap_bounds(const ComplexMatrix4& rho_target)
{
    const EigenDecomposition4 eig = checked_density_spectrum(rho_target, "overlap_bounds");
    return {std::clamp(eig.values[0], 0.0, 1.0), std::clamp(eig.values[3], 0.0, 1.0)};
}

}  // namespace tqoc
