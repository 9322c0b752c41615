#pragma once

// Scalar functionals of rho(t) for post-optimization analysis. Natural log
// throughout. Eigenvalues below kEigenClamp count as exact zeros.

#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <vector>

#include "tqoc/dynamics.hpp"
#include "tqoc/errors.hpp"
#include "tqoc/model.hpp"
#include "tqoc/objectives.hpp"
#include "tqoc/smallmat.hpp"

namespace tqoc {

inline constexpr double kEigenClamp = 1e-12;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// S = -sum lambda log lambda
inline double entropy(const ComplexMatrix4& rho)
{
    const EigenDecomposition4 eig = checked_density_spectrum(rho, "entropy");
    double s = 0.0;
    for (double l : eig.values)
        if (l > kEigenClamp) s -= l * std::log(l);
    return s;
}

/// Tr rho^2
inline double purity(const ComplexMatrix4& rho)
{
    checked_density_spectrum(rho, "purity");
    return hs_inner(rho, rho);
}

/// ||rho - sigma||_F^2
inline double distance_sq(const ComplexMatrix4& rho, const ComplexMatrix4& sigma)
{
    const double d = (rho - sigma).frobenius_norm();
    return d * d;
}

/// (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2
inline double uj_fidelity(const ComplexMatrix4& rho, const ComplexMatrix4& sigma)
{
    checked_density_spectrum(rho, "uj_fidelity");
    checked_density_spectrum(sigma, "uj_fidelity");
    const auto root = [](double l) { return std::sqrt(l); };
    const ComplexMatrix4 sr = matrix_function(rho, root, kEigenClamp);
    ComplexMatrix4 inner = sr * sigma * sr;
    inner = (inner + inner.adjoint()) * Complex{0.5};
    const EigenDecomposition4 eig = hermitian_eigen(inner);
    double tr = 0.0;
    for (double l : eig.values)
        if (l > 0.0) tr += std::sqrt(l);
    return tr * tr;
}

namespace detail {

// |<r_i|s_j>|^2 for the eigenbases of two matrices.
inline std::array<std::array<double, 4>, 4> basis_overlaps(const EigenDecomposition4& a, const EigenDecomposition4& b)
{
    const ComplexMatrix4 w = a.vectors.adjoint() * b.vectors;
    std::array<std::array<double, 4>, 4> out{};
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) out[i][j] = std::norm(w(i, j));
    return out;
}

}  // namespace detail

/// Tr rho (log rho - log sigma); +infinity when supp(rho) is not inside supp(sigma).
inline double relative_entropy(const ComplexMatrix4& rho, const ComplexMatrix4& sigma)
{
    const EigenDecomposition4 er = checked_density_spectrum(rho, "relative_entropy");
    const EigenDecomposition4 es = checked_density_spectrum(sigma, "relative_entropy");
    const auto w = detail::basis_overlaps(er, es);

    double d = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
        if (er.values[i] > kEigenClamp) d += er.values[i] * std::log(er.values[i]);
    for (std::size_t j = 0; j < 4; ++j) {
        double mass = 0.0;  // <s_j| rho |s_j>
        for (std::size_t i = 0; i < 4; ++i)
            if (er.values[i] > kEigenClamp) mass += er.values[i] * w[i][j];
        if (mass <= kEigenClamp) continue;
        if (es.values[j] <= kEigenClamp) return kInfinity;
        d -= mass * std::log(es.values[j]);
    }
    return d;
}

/// (1/(alpha-1)) log Tr(rho^alpha sigma^{1-alpha}); alpha in (0,1) or (1,inf).
inline double petz_renyi(const ComplexMatrix4& rho, const ComplexMatrix4& sigma, double alpha)
{
    if (!(alpha > 0.0) || alpha == 1.0 || !std::isfinite(alpha))
        throw BadAlpha("petz_renyi: alpha must lie in (0,1) or (1,inf)");
    const EigenDecomposition4 er = checked_density_spectrum(rho, "petz_renyi");
    const EigenDecomposition4 es = checked_density_spectrum(sigma, "petz_renyi");
    const auto w = detail::basis_overlaps(er, es);

    double q = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        if (er.values[i] <= kEigenClamp) continue;
        for (std::size_t j = 0; j < 4; ++j) {
            if (w[i][j] <= kEigenClamp * kEigenClamp) continue;
            if (es.values[j] <= kEigenClamp) {
                if (alpha > 1.0) return kInfinity;
                continue;
            }
            q += std::pow(er.values[i], alpha) * std::pow(es.values[j], 1.0 - alpha) * w[i][j];
        }
    }
    if (q <= 0.0) return kInfinity;
    return std::log(q) / (alpha - 1.0);
}

/// Zero-based x-indices of the off-diagonal real and imaginary parts.
inline constexpr std::array<std::size_t, 12> kOffDiagonalSlots{1, 2, 3, 4, 5, 6, 8, 9, 10, 11, 13, 14};

/// Time-averaged off-diagonal mass: (1/K) sum over the K left endpoints.
inline double aleph(const Trajectory& traj)
{
    const std::size_t k = traj.intervals();
    if (k == 0) return 0.0;
    double s = 0.0;
    for (std::size_t q = 0; q < k; ++q)
        for (std::size_t j : kOffDiagonalSlots) s += traj.states[q][j] * traj.states[q][j];
    return s / static_cast<double>(k);
}

inline double smoothed_overlap_dev(const RealState& x_t, const ObjectiveSpec& spec)
{
    return smoothed_deviation(overlap(x_t, spec), spec.M, spec.theta);
}

struct DiagnosticsRow {
    double t = 0.0;
    double overlap = 0.0;
    double entropy = 0.0;
    double purity = 0.0;
    double uj_fidelity = 0.0;
    double rel_entropy = 0.0;
    std::vector<double> petz_renyi;
    double distance_sq = 0.0;
    double smoothed_overlap_dev = 0.0;
};

inline const std::vector<double>& default_renyi_alphas()
{
    static const std::vector<double> alphas{0.1, 0.8, 5.0};
    return alphas;
}

inline std::vector<DiagnosticsRow> diagnostics(const Trajectory& traj, const ObjectiveSpec& spec,
                                               const std::vector<double>& alphas = default_renyi_alphas())
{
    const ComplexMatrix4 target = derealify(spec.x_target);
    std::vector<DiagnosticsRow> rows;
    rows.reserve(traj.times.size());
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const ComplexMatrix4 rho = derealify(traj.states[i]);
        DiagnosticsRow r;
        r.t = traj.times[i];
        r.overlap = overlap(traj.states[i], spec);
        r.entropy = entropy(rho);
        r.purity = purity(rho);
        r.uj_fidelity = uj_fidelity(rho, target);
        r.rel_entropy = relative_entropy(rho, target);
        for (double a : alphas) r.petz_renyi.push_back(petz_renyi(rho, target, a));
        r.distance_sq = distance_sq(rho, target);
        r.smoothed_overlap_dev = smoothed_overlap_dev(traj.states[i], spec);
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace detail {

inline void write_value(std::ostream& os, double v)
{
    if (std::isinf(v))
        os << (v > 0 ? "inf" : "-inf");
    else
        os << v;
}

}  // namespace detail

inline void write_diagnostics_csv(std::ostream& os, const std::vector<DiagnosticsRow>& rows,
                                  const std::vector<double>& alphas = default_renyi_alphas())
{
    os << "t,overlap,entropy,purity,uj_fidelity,rel_entropy";
    for (double a : alphas) os << ",petz_renyi_" << a;
    os << ",distance_sq,smoothed_overlap_dev\n";
    os.precision(17);
    for (const auto& r : rows) {
        os << r.t << ',' << r.overlap << ',' << r.entropy << ',' << r.purity << ',' << r.uj_fidelity << ',';
        detail::write_value(os, r.rel_entropy);
        for (double v : r.petz_renyi) {
            os << ',';
            detail::write_value(os, v);
        }
        os << ',' << r.distance_sq << ',' << r.smoothed_overlap_dev << '\n';
    }
}

}  // namespace tqoc
