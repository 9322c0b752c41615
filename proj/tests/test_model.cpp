#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "tqoc/model.hpp"
#include "tqoc/objectives.hpp"

using namespace tqoc;
using Catch::Approx;

namespace {

SystemParams random_params(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> d(0.05, 2.0);
    SystemParams p;
    p.epsilon = d(rng);
    p.omega1 = d(rng);
    p.omega2 = d(rng);
    p.Omega1 = d(rng);
    p.Omega2 = d(rng);
    p.Lambda1 = d(rng);
    p.Lambda2 = d(rng);
    p.interaction = (rng() % 2) ? Interaction::v1() : Interaction::v2();
    return p;
}

RealVector16 random_x(std::mt19937_64& rng)
{
    std::normal_distribution<double> g(0.0, 1.0);
    RealVector16 x{};
    for (double& v : x) v = g(rng);
    return x;
}

double max_diff(const RealVector16& a, const RealVector16& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < 16; ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("realify uses the row-by-row upper-triangle layout")
{
    SECTION("pure ground state")
    {
        const RealState x = realify(ComplexMatrix4::diagonal({1.0, 0.0, 0.0, 0.0}));
        CHECK(x[0] == 1.0);
        for (std::size_t i = 1; i < 16; ++i) CHECK(x[i] == 0.0);
    }
    SECTION("diagonal states occupy slots 1, 8, 13, 16")
    {
        const RealState x = realify(ComplexMatrix4::diagonal({0.1, 0.2, 0.3, 0.4}));
        const RealState expected{0.1, 0, 0, 0, 0, 0, 0, 0.2, 0, 0, 0, 0, 0.3, 0, 0, 0.4};
        CHECK(x == expected);
    }
    SECTION("rho12 = 0.1 + 0.2i")
    {
        ComplexMatrix4 rho = ComplexMatrix4::diagonal({0.5, 0.5, 0.0, 0.0});
        rho(0, 1) = Complex{0.1, 0.2};
        rho(1, 0) = Complex{0.1, -0.2};
        const RealState x = realify(rho);
        CHECK(x[1] == 0.1);
        CHECK(x[2] == 0.2);
    }
    SECTION("x9 + i x10 is rho23")
    {
        RealState x{};
        x[0] = 1.0;
        x[8] = 0.3;
        x[9] = -0.1;
        const ComplexMatrix4 rho = derealify(x);
        CHECK(rho(1, 2) == Complex{0.3, -0.1});
        CHECK(rho(2, 1) == Complex{0.3, 0.1});
    }
    SECTION("matches the independent layout")
    {
        std::mt19937_64 rng(5);
        const RealVector16 x = random_x(rng);
        const ComplexMatrix4 rho = derealify(x);
        const oracle::Mat4 o = oracle::to_rho(x);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) CHECK(rho(i, j) == o[i][j]);
    }
}

TEST_CASE("realify and derealify are inverse")
{
    std::mt19937_64 rng(9);
    for (int i = 0; i < 100; ++i) {
        const ComplexMatrix4 rho = oracle::random_density(rng);
        CHECK(derealify(realify(rho)) == rho);
        RealState x = realify(rho);
        CHECK(realify(derealify(x)) == x);
    }
}

TEST_CASE("realify validates its input")
{
    ComplexMatrix4 bad = ComplexMatrix4::diagonal({0.5, 0.5, 0.0, 0.0});
    bad(0, 1) = 0.1;
    CHECK_THROWS_AS(realify(bad), NotHermitian);
    CHECK_THROWS_AS(realify(ComplexMatrix4::diagonal({0.5, 0.6, 0.0, 0.0})), BadTrace);
}

TEST_CASE("weighted inner product equals the Hilbert-Schmidt overlap")
{
    std::mt19937_64 rng(13);
    for (int i = 0; i < 50; ++i) {
        const ComplexMatrix4 a = oracle::random_density(rng);
        const ComplexMatrix4 b = oracle::random_density(rng);
        CHECK(overlap(realify(a), realify(b)) == Approx(hs_inner(a, b)).margin(1e-14));
    }
}

TEST_CASE("interaction operators")
{
    const ComplexMatrix4 v1 = interaction_v1();
    const ComplexMatrix4 v2 = interaction_v2();
    CHECK(v1(0, 1) == Complex{1.0});
    CHECK(v1(0, 2) == Complex{1.0});
    CHECK(v1(0, 3) == Complex{0.0});
    CHECK(v2(0, 3) == Complex{1.0});
    CHECK(v2(1, 2) == Complex{1.0});
    CHECK(v2(0, 1) == Complex{0.0});
    CHECK_THROWS_AS(Interaction::from_matrix(ComplexMatrix4::diagonal({1, 0, 0, 0}) * Complex{0.0, 1.0}), NotHermitian);
}

TEST_CASE("SystemParams validation")
{
    SystemParams p;
    CHECK_NOTHROW(p.validate());
    p.Omega2 = 0.0;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    p = SystemParams{};
    p.epsilon = -0.1;
    CHECK_THROWS_AS(build_system_matrices(p), InvalidArgument);
}

TEST_CASE("lindblad_rhs")
{
    const SystemParams p;
    SECTION("the ground state is stationary without control")
    {
        const ComplexMatrix4 r = lindblad_rhs(ComplexMatrix4::diagonal({1, 0, 0, 0}), 0, 0, 0, p);
        CHECK(r.frobenius_norm() == 0.0);
    }
    SECTION("the generator is trace-free and Hermiticity-preserving")
    {
        std::mt19937_64 rng(21);
        std::uniform_real_distribution<double> c(-3.0, 3.0), n(0.0, 5.0);
        for (int i = 0; i < 50; ++i) {
            const ComplexMatrix4 r = lindblad_rhs(oracle::random_density(rng), c(rng), n(rng), n(rng), p);
            CHECK(std::abs(r.trace()) < 1e-14);
            CHECK(r.hermiticity_defect() < 1e-12);
        }
        CHECK(std::abs(lindblad_rhs(ComplexMatrix4::identity() * Complex{0.25}, 0, 0, 0, p).trace()) < 1e-15);
    }
    SECTION("agrees with the independent master-equation oracle")
    {
        std::mt19937_64 rng(22);
        std::uniform_real_distribution<double> c(-3.0, 3.0), n(0.0, 5.0);
        for (int i = 0; i < 50; ++i) {
            const SystemParams q = random_params(rng);
            const RealVector16 x = random_x(rng);
            const double u = c(rng), n1 = n(rng), n2 = n(rng);
            const RealVector16 lib = detail::realify_linear(lindblad_rhs(derealify(x), u, n1, n2, q));
            const RealVector16 ref = oracle::to_x(oracle::rhs(oracle::to_rho(x), u, n1, n2, q));
            CHECK(max_diff(lib, ref) < 1e-12);
        }
    }
}

TEST_CASE("system matrices reproduce the master equation")
{
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> c(-5.0, 5.0), n(0.0, 10.0);
    for (int trial = 0; trial < 100; ++trial) {
        const SystemParams p = random_params(rng);
        const SystemMatrices m = build_system_matrices(p);
        const RealVector16 x = random_x(rng);
        const double u = c(rng), n1 = n(rng), n2 = n(rng);
        const RealVector16 lhs = detail::realify_linear(lindblad_rhs(derealify(x), u, n1, n2, p));
        const RealVector16 rhs = m.generator(u, n1, n2).apply(x);
        CHECK(max_diff(lhs, rhs) < 1e-12 * std::max(1.0, std::abs(u) + n1 + n2));

        const oracle::Dense g = oracle::generator(p, u, n1, n2);
        const RealVector16 ref = oracle::apply(g, x);
        CHECK(max_diff(ref, rhs) < 1e-10 * std::max(1.0, std::abs(u) + n1 + n2));
    }
}

TEST_CASE("system matrix structure")
{
    const SystemParams p;
    const SystemMatrices m = build_system_matrices(p);
    SECTION("A annihilates the ground state")
    {
        RealVector16 g{};
        g[0] = 1.0;
        for (double v : m.A.apply(g)) CHECK(v == 0.0);
    }
    SECTION("trace preservation per column")
    {
        for (const RealMatrix16* mat : {&m.A, &m.B_u, &m.B_n1, &m.B_n2})
            for (std::size_t c = 0; c < 16; ++c) {
                double s = 0.0;
                for (std::size_t r : kDiagonalSlots) s += (*mat)(r, c);
                CHECK(std::abs(s) < 1e-12);
            }
    }
    SECTION("only B_u depends on the interaction")
    {
        SystemParams q = p;
        q.interaction = Interaction::v2();
        const SystemMatrices m2 = build_system_matrices(q);
        CHECK(m.A == m2.A);
        CHECK(m.B_n1 == m2.B_n1);
        CHECK(m.B_n2 == m2.B_n2);
        CHECK((m.B_u - m2.B_u).max_abs() > 0.1);
    }
    SECTION("custom interaction equal to V1 gives the V1 system")
    {
        SystemParams q = p;
        q.interaction = Interaction::from_matrix(interaction_v1());
        CHECK(build_system_matrices(q).B_u == m.B_u);
    }
}
