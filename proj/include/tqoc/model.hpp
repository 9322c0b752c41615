#pragma once

// Physical model of two qubits coupled to a coherent field u and to an
// incoherent environment with densities n1, n2 at the two transition
// frequencies, plus its realification into a bilinear 16-dimensional ODE.

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <variant>

#include "tqoc/errors.hpp"
#include "tqoc/smallmat.hpp"

namespace tqoc {

namespace pauli {

inline constexpr std::array<Complex, 4> identity{1.0, 0.0, 0.0, 1.0};
inline constexpr std::array<Complex, 4> x{0.0, 1.0, 1.0, 0.0};
inline constexpr std::array<Complex, 4> z{1.0, 0.0, 0.0, -1.0};
// Raising/lowering as displayed for this model: sigma_plus has its 1 in row 2, column 1.
inline constexpr std::array<Complex, 4> plus{0.0, 0.0, 1.0, 0.0};
inline constexpr std::array<Complex, 4> minus{0.0, 1.0, 0.0, 0.0};

}  // namespace pauli

/// sigma^x (x) I + I (x) sigma^x: the field drives each qubit independently.
inline ComplexMatrix4 interaction_v1()
{
    return kron2(pauli::x, pauli::identity) + kron2(pauli::identity, pauli::x);
}

/// sigma^x (x) sigma^x: the field couples the qubits.
inline ComplexMatrix4 interaction_v2() { return kron2(pauli::x, pauli::x); }

enum class InteractionKind { V1, V2, Custom };

struct Interaction {
    InteractionKind kind = InteractionKind::V1;
    ComplexMatrix4 custom;  // used only when kind == Custom

    static Interaction v1() { return {InteractionKind::V1, {}}; }
    static Interaction v2() { return {InteractionKind::V2, {}}; }
    static Interaction from_matrix(const ComplexMatrix4& v)
    {
        if (!(v.hermiticity_defect() <= kHermitianTol))
            throw NotHermitian("custom interaction operator is not Hermitian");
        return {InteractionKind::Custom, v};
    }

    ComplexMatrix4 matrix() const
    {
        switch (kind) {
        case InteractionKind::V1: return interaction_v1();
        case InteractionKind::V2: return interaction_v2();
        case InteractionKind::Custom: return custom;
        }
        return {};
    }
};

/// Physical constants in Planck units. All must be strictly positive.
struct SystemParams {
    double epsilon = 0.1;
    double omega1 = 1.0;
    double omega2 = 0.5;
    double Omega1 = 0.5;
    double Omega2 = 0.5;
    double Lambda1 = 0.05;
    double Lambda2 = 0.05;
    Interaction interaction = Interaction::v1();

    void validate() const
    {
        const std::array<std::pair<const char*, double>, 7> fields{{{"epsilon", epsilon},
                                                                    {"omega1", omega1},
                                                                    {"omega2", omega2},
                                                                    {"Omega1", Omega1},
                                                                    {"Omega2", Omega2},
                                                                    {"Lambda1", Lambda1},
                                                                    {"Lambda2", Lambda2}}};
        for (const auto& [name, value] : fields)
            if (!(value > 0.0) || !std::isfinite(value))
                throw InvalidArgument(std::string("SystemParams.") + name + " must be finite and > 0");
        if (interaction.kind == InteractionKind::Custom &&
            !(interaction.custom.hermiticity_defect() <= kHermitianTol))
            throw NotHermitian("custom interaction operator is not Hermitian");
    }
};

/// Realified density matrix, x_1..x_16 stored at indices 0..15.
using RealState = RealVector16;

/// Zero-based indices of the diagonal entries rho_11, rho_22, rho_33, rho_44 in x.
inline constexpr std::array<std::size_t, 4> kDiagonalSlots{0, 7, 12, 15};

namespace detail {

struct OffDiagonalSlot {
    std::size_t row, col, re, im;
};

// (row, col) of the upper triangle and the x-indices of its real/imaginary parts.
inline constexpr std::array<OffDiagonalSlot, 6> kOffDiagonal{{{0, 1, 1, 2},
                                                              {0, 2, 3, 4},
                                                              {0, 3, 5, 6},
                                                              {1, 2, 8, 9},
                                                              {1, 3, 10, 11},
                                                              {2, 3, 13, 14}}};

inline RealVector16 realify_linear(const ComplexMatrix4& rho)
{
    RealVector16 x{};
    for (std::size_t i = 0; i < 4; ++i) x[kDiagonalSlots[i]] = rho(i, i).real();
    for (const auto& s : kOffDiagonal) {
        x[s.re] = rho(s.row, s.col).real();
        x[s.im] = rho(s.row, s.col).imag();
    }
    return x;
}

}  // namespace detail

/// Overlap weights: 1 on the diagonal slots, 2 on real/imaginary parts of off-diagonals.
inline constexpr RealVector16 kOverlapWeights{1, 2, 2, 2, 2, 2, 2, 1, 2, 2, 2, 2, 1, 2, 2, 1};

inline double state_trace(const RealState& x)
{
    return x[0] + x[7] + x[12] + x[15];
}

/// Hermitian matrix with the upper triangle read from x.
inline ComplexMatrix4 derealify(const RealState& x)
{
    ComplexMatrix4 rho;
    for (std::size_t i = 0; i < 4; ++i) rho(i, i) = x[kDiagonalSlots[i]];
    for (const auto& s : detail::kOffDiagonal) {
        rho(s.row, s.col) = Complex{x[s.re], x[s.im]};
        rho(s.col, s.row) = Complex{x[s.re], -x[s.im]};
    }
    return rho;
}

/// Throws NotHermitian or BadTrace (|Tr rho - 1| > 1e-9).
inline RealState realify(const ComplexMatrix4& rho)
{
    if (!(rho.hermiticity_defect() <= kHermitianTol)) throw NotHermitian("realify: density matrix is not Hermitian");
    const double tr = rho.trace().real();
    if (!(std::abs(tr - 1.0) <= 1e-9)) throw BadTrace("realify: trace " + std::to_string(tr) + " != 1");
    return detail::realify_linear(rho);
}

inline ComplexMatrix4 commutator(const ComplexMatrix4& a, const ComplexMatrix4& b) { return a * b - b * a; }

/// Right-hand side of the master equation:
/// -i[H_S + eps H_eff(n) + V u, rho] + eps L_n(rho).
inline ComplexMatrix4 lindblad_rhs(const ComplexMatrix4& rho, double u, double n1, double n2, const SystemParams& p)
{
    const ComplexMatrix4 z1 = kron2(pauli::z, pauli::identity);
    const ComplexMatrix4 z2 = kron2(pauli::identity, pauli::z);

    ComplexMatrix4 h = z1 * Complex{p.omega1 / 2.0} + z2 * Complex{p.omega2 / 2.0};
    h += (z1 * Complex{p.Lambda1 * n1} + z2 * Complex{p.Lambda2 * n2}) * Complex{p.epsilon};
    if (u != 0.0) h += p.interaction.matrix() * Complex{u};

    ComplexMatrix4 out = commutator(h, rho) * Complex{0.0, -1.0};

    const std::array<ComplexMatrix4, 2> sp{kron2(pauli::plus, pauli::identity), kron2(pauli::identity, pauli::plus)};
    const std::array<ComplexMatrix4, 2> sm{kron2(pauli::minus, pauli::identity), kron2(pauli::identity, pauli::minus)};
    const std::array<double, 2> omegas{p.Omega1, p.Omega2};
    const std::array<double, 2> ns{n1, n2};

    for (std::size_t j = 0; j < 2; ++j) {
        const ComplexMatrix4 pm = sp[j] * sm[j];
        const ComplexMatrix4 mp = sm[j] * sp[j];
        const ComplexMatrix4 emit = sm[j] * rho * sp[j] * Complex{2.0} - pm * rho - rho * pm;
        const ComplexMatrix4 absorb = sp[j] * rho * sm[j] * Complex{2.0} - mp * rho - rho * mp;
        out += emit * Complex{p.epsilon * omegas[j] * (ns[j] + 1.0)};
        out += absorb * Complex{p.epsilon * omegas[j] * ns[j]};
    }
    return out;
}

/// x' = (A + B_u u + B_n1 n1 + B_n2 n2) x
struct SystemMatrices {
    RealMatrix16 A, B_u, B_n1, B_n2;

    RealMatrix16 generator(double u, double n1, double n2) const
    {
        RealMatrix16 g = A;
        g.add_scaled(B_u, u);
        g.add_scaled(B_n1, n1);
        g.add_scaled(B_n2, n2);
        return g;
    }
};

/// Assembles the realified generator column by column from lindblad_rhs.
inline SystemMatrices build_system_matrices(const SystemParams& p)
{
    p.validate();
    SystemMatrices m;
    const std::array<std::array<double, 3>, 4> probes{{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    for (std::size_t c = 0; c < 16; ++c) {
        RealVector16 e{};
        e[c] = 1.0;
        const ComplexMatrix4 basis = derealify(e);
        std::array<RealVector16, 4> cols;
        for (std::size_t k = 0; k < probes.size(); ++k)
            cols[k] = detail::realify_linear(lindblad_rhs(basis, probes[k][0], probes[k][1], probes[k][2], p));
        for (std::size_t r = 0; r < 16; ++r) {
            m.A(r, c) = cols[0][r];
            m.B_u(r, c) = cols[1][r] - cols[0][r];
            m.B_n1(r, c) = cols[2][r] - cols[0][r];
            m.B_n2(r, c) = cols[3][r] - cols[0][r];
        }
    }
    return m;
}

}  // namespace tqoc
