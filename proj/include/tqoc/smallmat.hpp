#pragma once

// Fixed-size dense linear algebra for the two-qubit problem: complex 4x4
// matrices (density matrices, Hamiltonians) and real 16x16 matrices (the
// realified generator). Hermitian spectra come from cyclic Jacobi rotations.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>

#include "tqoc/errors.hpp"

namespace tqoc {

using Complex = std::complex<double>;

inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kPsdTol = 1e-10;

/// Row-major complex 4x4 matrix.
class ComplexMatrix4 {
public:
    static constexpr std::size_t kDim = 4;

    constexpr ComplexMatrix4() = default;

    static ComplexMatrix4 identity()
    {
        ComplexMatrix4 m;
        for (std::size_t i = 0; i < kDim; ++i) m(i, i) = 1.0;
        return m;
    }

    static ComplexMatrix4 diagonal(const std::array<double, 4>& d)
    {
        ComplexMatrix4 m;
        for (std::size_t i = 0; i < kDim; ++i) m(i, i) = d[i];
        return m;
    }

    Complex& operator()(std::size_t r, std::size_t c) { return data_[r * kDim + c]; }
    const Complex& operator()(std::size_t r, std::size_t c) const { return data_[r * kDim + c]; }

    ComplexMatrix4 adjoint() const
    {
        ComplexMatrix4 out;
        for (std::size_t r = 0; r < kDim; ++r)
            for (std::size_t c = 0; c < kDim; ++c) out(c, r) = std::conj((*this)(r, c));
        return out;
    }

    Complex trace() const
    {
        Complex t = 0.0;
        for (std::size_t i = 0; i < kDim; ++i) t += (*this)(i, i);
        return t;
    }

    double frobenius_norm() const
    {
        double s = 0.0;
        for (const auto& z : data_) s += std::norm(z);
        return std::sqrt(s);
    }

    /// ||m - m^dagger||_F
    double hermiticity_defect() const { return (*this - adjoint()).frobenius_norm(); }

    ComplexMatrix4& operator+=(const ComplexMatrix4& o)
    {
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    ComplexMatrix4& operator-=(const ComplexMatrix4& o)
    {
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    ComplexMatrix4& operator*=(Complex s)
    {
        for (auto& z : data_) z *= s;
        return *this;
    }

    friend ComplexMatrix4 operator+(ComplexMatrix4 a, const ComplexMatrix4& b) { return a += b; }
    friend ComplexMatrix4 operator-(ComplexMatrix4 a, const ComplexMatrix4& b) { return a -= b; }
    friend ComplexMatrix4 operator*(ComplexMatrix4 a, Complex s) { return a *= s; }
    friend ComplexMatrix4 operator*(Complex s, ComplexMatrix4 a) { return a *= s; }
    friend ComplexMatrix4 operator*(const ComplexMatrix4& a, const ComplexMatrix4& b)
    {
        ComplexMatrix4 out;
        for (std::size_t r = 0; r < kDim; ++r)
            for (std::size_t k = 0; k < kDim; ++k) {
                const Complex ark = a(r, k);
                if (ark == Complex{}) continue;
                for (std::size_t c = 0; c < kDim; ++c) out(r, c) += ark * b(k, c);
            }
        return out;
    }
    friend bool operator==(const ComplexMatrix4&, const ComplexMatrix4&) = default;

private:
    std::array<Complex, kDim * kDim> data_{};
};

/// Kronecker product of two 2x2 matrices given row-major.
inline ComplexMatrix4 kron2(const std::array<Complex, 4>& a, const std::array<Complex, 4>& b)
{
    ComplexMatrix4 out;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t k = 0; k < 2; ++k)
                for (std::size_t l = 0; l < 2; ++l) out(2 * i + k, 2 * j + l) = a[2 * i + j] * b[2 * k + l];
    return out;
}

/// Hilbert-Schmidt inner product Re Tr(a^dagger b); equals Tr(a b) for Hermitian a, b.
inline double hs_inner(const ComplexMatrix4& a, const ComplexMatrix4& b)
{
    double s = 0.0;
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) s += (std::conj(a(r, c)) * b(r, c)).real();
    return s;
}

using RealVector16 = std::array<double, 16>;

/// Row-major real 16x16 matrix.
class RealMatrix16 {
public:
    static constexpr std::size_t kDim = 16;

    double& operator()(std::size_t r, std::size_t c) { return data_[r * kDim + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * kDim + c]; }

    RealMatrix16 transpose() const
    {
        RealMatrix16 out;
        for (std::size_t r = 0; r < kDim; ++r)
            for (std::size_t c = 0; c < kDim; ++c) out(c, r) = (*this)(r, c);
        return out;
    }

    RealVector16 apply(const RealVector16& x) const
    {
        RealVector16 y{};
        for (std::size_t r = 0; r < kDim; ++r) {
            const double* row = &data_[r * kDim];
            double s = 0.0;
            for (std::size_t c = 0; c < kDim; ++c) s += row[c] * x[c];
            y[r] = s;
        }
        return y;
    }

    /// this += s * o
    void add_scaled(const RealMatrix16& o, double s)
    {
        if (s == 0.0) return;
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
    }

    double max_abs() const
    {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    friend RealMatrix16 operator-(RealMatrix16 a, const RealMatrix16& b)
    {
        a.add_scaled(b, -1.0);
        return a;
    }
    friend bool operator==(const RealMatrix16&, const RealMatrix16&) = default;

private:
    std::array<double, kDim * kDim> data_{};
};

inline double dot(const RealVector16& a, const RealVector16& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Eigenvalues ascending; column j of `vectors` is the eigenvector of values[j].
struct EigenDecomposition4 {
    std::array<double, 4> values{};
    ComplexMatrix4 vectors;

    ComplexMatrix4 reconstruct() const
    {
        ComplexMatrix4 lambda = ComplexMatrix4::diagonal(values);
        return vectors * lambda * vectors.adjoint();
    }
};

namespace detail {

inline double off_diagonal_norm(const ComplexMatrix4& a)
{
    double s = 0.0;
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c)
            if (r != c) s += std::norm(a(r, c));
    return std::sqrt(s);
}

}  // namespace detail

/// Spectrum of a Hermitian 4x4 matrix by cyclic Jacobi sweeps.
/// Throws NotHermitian when ||m - m^dagger||_F exceeds 1e-10.
inline EigenDecomposition4 hermitian_eigen(const ComplexMatrix4& m)
{
    if (!(m.hermiticity_defect() <= kHermitianTol))
        throw NotHermitian("hermitian_eigen: ||m - m^dagger||_F = " + std::to_string(m.hermiticity_defect()));

    // Work on the exactly Hermitian part.
    ComplexMatrix4 a = (m + m.adjoint()) * Complex{0.5};
    ComplexMatrix4 v = ComplexMatrix4::identity();
    const double scale = std::max(a.frobenius_norm(), 1e-300);

    for (int sweep = 0; sweep < 100; ++sweep) {
        if (detail::off_diagonal_norm(a) < 1e-14 * scale) break;
        for (std::size_t p = 0; p < 3; ++p) {
            for (std::size_t q = p + 1; q < 4; ++q) {
                const double r = std::abs(a(p, q));
                if (r < 1e-300) continue;
                const Complex phase = a(p, q) / r;  // e^{i phi}
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double tau = (aqq - app) / (2.0 * r);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                // J = P R with P = diag(.., e^{-i phi} at q, ..), R the real plane rotation.
                ComplexMatrix4 j = ComplexMatrix4::identity();
                j(p, p) = c;
                j(p, q) = s;
                j(q, p) = -s * std::conj(phase);
                j(q, q) = c * std::conj(phase);

                a = j.adjoint() * a * j;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                v = v * j;
            }
        }
    }

    std::array<std::size_t, 4> order{0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x).real() < a(y, y).real(); });

    EigenDecomposition4 out;
    for (std::size_t j = 0; j < 4; ++j) {
        const std::size_t src = order[j];
        out.values[j] = a(src, src).real();
        std::size_t big = 0;
        for (std::size_t r = 1; r < 4; ++r)
            if (std::abs(v(r, src)) > std::abs(v(big, src))) big = r;
        const Complex fix = std::conj(v(big, src)) / std::abs(v(big, src));
        for (std::size_t r = 0; r < 4; ++r) out.vectors(r, j) = v(r, src) * fix;
    }
    return out;
}

/// U f(Lambda) U^dagger for Hermitian m.
///
/// With `zero_clamp` set the input must be positive semidefinite (eigenvalues
/// >= -1e-10, otherwise DomainError) and eigenvalues below the clamp are
/// replaced by exactly 0 before f is applied. Without it f sees the raw
/// spectrum of any Hermitian matrix.
template <class F>
ComplexMatrix4 matrix_function(const ComplexMatrix4& m, F&& f, std::optional<double> zero_clamp = 1e-12)
{
    const EigenDecomposition4 eig = hermitian_eigen(m);
    std::array<double, 4> mapped{};
    for (std::size_t i = 0; i < 4; ++i) {
        double lambda = eig.values[i];
        if (zero_clamp) {
            if (lambda < -kPsdTol)
                throw DomainError("matrix_function: eigenvalue " + std::to_string(lambda) + " below zero");
            if (lambda < *zero_clamp) lambda = 0.0;
        }
        mapped[i] = f(lambda);
    }
    return eig.vectors * ComplexMatrix4::diagonal(mapped) * eig.vectors.adjoint();
}

}  // namespace tqoc
