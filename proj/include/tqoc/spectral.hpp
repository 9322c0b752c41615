#pragma once

// Spectral densities of an incoherent photon environment: the thermal Planck
// form and Gaussian-filtered variants of it.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <ostream>
#include <vector>

#include "tqoc/errors.hpp"

namespace tqoc {

struct GaussianComponent {
    double center = 0.0;
    double variance = 1.0;
};

struct SpectralDensity {
    double beta = 1.0;
    std::vector<GaussianComponent> filter;  // empty means no filtering
};

/// n(omega) = omega^3 / (pi^2 (exp(beta omega) - 1)); 0 at omega = 0.
inline double planck(double omega, double beta)
{
    if (!(beta > 0.0)) throw InvalidArgument("planck: beta must be > 0");
    if (!(omega >= 0.0)) throw InvalidArgument("planck: omega must be >= 0");
    if (omega == 0.0) return 0.0;
    const double denom = std::expm1(beta * omega);
    if (std::isinf(denom)) return 0.0;
    return omega * omega * omega / (std::numbers::pi * std::numbers::pi * denom);
}

/// f(omega) = sum_i exp(-(omega - c_i)^2 / (2 sigma_i^2)), or 1 with no components.
inline double filter_gain(double omega, const std::vector<GaussianComponent>& filter)
{
    if (filter.empty()) return 1.0;
    double f = 0.0;
    for (const auto& g : filter) {
        const double d = omega - g.center;
        f += std::exp(-d * d / (2.0 * g.variance));
    }
    return f;
}

inline double filtered(double omega, double beta, const std::vector<GaussianComponent>& filter)
{
    return planck(omega, beta) * filter_gain(omega, filter);
}

struct SpectralRow {
    double omega, planck, filtered;
};

/// Uniform grid of `samples` points on [0, omega_max].
inline std::vector<SpectralRow> emit_curve(const SpectralDensity& d, double omega_max, std::size_t samples)
{
    if (samples < 2) throw InvalidArgument("emit_curve: need at least two samples");
    std::vector<SpectralRow> rows;
    rows.reserve(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        const double w = omega_max * static_cast<double>(i) / static_cast<double>(samples - 1);
        rows.push_back({w, planck(w, d.beta), filtered(w, d.beta, d.filter)});
    }
    return rows;
}

inline double trapezoid(const std::vector<SpectralRow>& rows, double SpectralRow::*field)
{
    double s = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i)
        s += 0.5 * (rows[i].*field + rows[i - 1].*field) * (rows[i].omega - rows[i - 1].omega);
    return s;
}

inline void write_spectral_csv(std::ostream& os, const std::vector<SpectralRow>& rows)
{
    os << "omega,planck,filtered\n";
    os.precision(17);
    for (const auto& r : rows) os << r.omega << ',' << r.planck << ',' << r.filtered << '\n';
}

}  // namespace tqoc
