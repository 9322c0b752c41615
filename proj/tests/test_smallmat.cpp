#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "tqoc/smallmat.hpp"

using namespace tqoc;
using Catch::Approx;

namespace {

double max_entry_diff(const ComplexMatrix4& a, const ComplexMatrix4& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
    return m;
}

}  // namespace

TEST_CASE("kron2 places blocks by the first factor")
{
    const std::array<Complex, 4> a{1.0, 2.0, 3.0, 4.0};
    const std::array<Complex, 4> id{1.0, 0.0, 0.0, 1.0};
    const ComplexMatrix4 k = kron2(a, id);
    CHECK(k(0, 0) == Complex{1.0});
    CHECK(k(1, 1) == Complex{1.0});
    CHECK(k(0, 2) == Complex{2.0});
    CHECK(k(1, 3) == Complex{2.0});
    CHECK(k(2, 0) == Complex{3.0});
    CHECK(k(3, 3) == Complex{4.0});
    CHECK(k(0, 1) == Complex{0.0});
}

TEST_CASE("basic complex matrix algebra")
{
    std::mt19937_64 rng(1);
    const ComplexMatrix4 a = oracle::random_hermitian(rng);
    const ComplexMatrix4 b = oracle::random_hermitian(rng);
    CHECK(max_entry_diff((a * b).adjoint(), b * a) < 1e-14);
    CHECK(a.hermiticity_defect() < 1e-15);
    CHECK(max_entry_diff(a * ComplexMatrix4::identity(), a) == 0.0);
    CHECK(ComplexMatrix4::identity().trace() == Complex{4.0});
    CHECK(hs_inner(a, b) == Approx((a * b).trace().real()).margin(1e-13));
    CHECK(ComplexMatrix4::identity().frobenius_norm() == Approx(2.0));
}

TEST_CASE("real 16x16 operations")
{
    RealMatrix16 m;
    for (std::size_t r = 0; r < 16; ++r)
        for (std::size_t c = 0; c < 16; ++c) m(r, c) = static_cast<double>(r * 16 + c);
    const RealMatrix16 t = m.transpose();
    CHECK(t(3, 5) == m(5, 3));
    RealVector16 e{};
    e[2] = 1.0;
    const RealVector16 col = m.apply(e);
    for (std::size_t r = 0; r < 16; ++r) CHECK(col[r] == m(r, 2));
    RealMatrix16 z = m - m;
    CHECK(z.max_abs() == 0.0);
    z.add_scaled(m, 2.0);
    CHECK(z(1, 1) == 2.0 * m(1, 1));
    CHECK(dot(col, e) == m(2, 2));
}

TEST_CASE("hermitian_eigen reconstructs random Hermitian matrices")
{
    std::mt19937_64 rng(42);
    double worst_reconstruction = 0.0, worst_orthogonality = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const ComplexMatrix4 m = oracle::random_hermitian(rng, trial % 2 ? 1.0 : 1e3);
        const EigenDecomposition4 e = hermitian_eigen(m);
        const double scale = std::max(1.0, m.frobenius_norm());
        worst_reconstruction = std::max(worst_reconstruction, max_entry_diff(e.reconstruct(), m) / scale);
        worst_orthogonality =
            std::max(worst_orthogonality, max_entry_diff(e.vectors.adjoint() * e.vectors, ComplexMatrix4::identity()));
        REQUIRE(std::is_sorted(e.values.begin(), e.values.end()));
        double tr = 0.0;
        for (double v : e.values) tr += v;
        CHECK(tr == Approx(m.trace().real()).margin(1e-10 * scale));
    }
    CHECK(worst_reconstruction < 1e-12);
    CHECK(worst_orthogonality < 1e-12);
}

TEST_CASE("hermitian_eigen on structured inputs")
{
    SECTION("identity is degenerate and already diagonal")
    {
        const EigenDecomposition4 e = hermitian_eigen(ComplexMatrix4::identity());
        for (double v : e.values) CHECK(v == 1.0);
        CHECK(max_entry_diff(e.vectors, ComplexMatrix4::identity()) == 0.0);
    }
    SECTION("diagonal input is sorted")
    {
        const EigenDecomposition4 e = hermitian_eigen(ComplexMatrix4::diagonal({0.7, 0.1, 0.1, 0.1}));
        CHECK(e.values[0] == Approx(0.1));
        CHECK(e.values[3] == Approx(0.7));
    }
    SECTION("rank-one projector")
    {
        ComplexMatrix4 p;
        const std::array<Complex, 4> v{0.5, Complex{0.0, 0.5}, -0.5, Complex{0.0, -0.5}};
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) p(i, j) = v[i] * std::conj(v[j]);
        const EigenDecomposition4 e = hermitian_eigen(p);
        CHECK(e.values[3] == Approx(1.0).margin(1e-14));
        for (int i = 0; i < 3; ++i) CHECK(std::abs(e.values[i]) < 1e-14);
    }
    SECTION("eigenvector phases are fixed")
    {
        std::mt19937_64 rng(3);
        const EigenDecomposition4 e = hermitian_eigen(oracle::random_hermitian(rng));
        for (std::size_t c = 0; c < 4; ++c) {
            std::size_t big = 0;
            for (std::size_t r = 1; r < 4; ++r)
                if (std::abs(e.vectors(r, c)) > std::abs(e.vectors(big, c))) big = r;
            CHECK(e.vectors(big, c).real() > 0.0);
            CHECK(std::abs(e.vectors(big, c).imag()) < 1e-14);
        }
    }
}

TEST_CASE("hermitian_eigen rejects non-Hermitian input")
{
    ComplexMatrix4 m = ComplexMatrix4::identity();
    m(0, 1) = 1e-3;
    CHECK_THROWS_AS(hermitian_eigen(m), NotHermitian);
}

TEST_CASE("matrix_function")
{
    std::mt19937_64 rng(7);
    SECTION("square root of a density matrix squares back")
    {
        const ComplexMatrix4 rho = oracle::random_density(rng);
        const ComplexMatrix4 r = matrix_function(rho, [](double l) { return std::sqrt(l); });
        CHECK(max_entry_diff(r * r, rho) < 1e-13);
    }
    SECTION("identity map returns any Hermitian matrix without the clamp")
    {
        const ComplexMatrix4 h = oracle::random_hermitian(rng);
        const ComplexMatrix4 out = matrix_function(h, [](double l) { return l; }, std::nullopt);
        CHECK(max_entry_diff(out, h) < 1e-12);
    }
    SECTION("negative spectrum is a domain error in PSD mode")
    {
        CHECK_THROWS_AS(matrix_function(ComplexMatrix4::diagonal({-0.1, 0.4, 0.4, 0.3}), [](double l) { return l; }),
                        DomainError);
    }
    SECTION("tiny eigenvalues are clamped to zero")
    {
        const ComplexMatrix4 d = ComplexMatrix4::diagonal({1e-14, 0.5, 0.25, 0.25 - 1e-14});
        const ComplexMatrix4 out = matrix_function(d, [](double l) { return l == 0.0 ? -1.0 : l; });
        CHECK(out(0, 0).real() == -1.0);
    }
}

TEST_CASE("documented eigen and matrix-function values")
{
    const EigenDecomposition4 d = hermitian_eigen(ComplexMatrix4::diagonal({1.0, 0.0, 0.0, 0.0}));
    CHECK(d.values == std::array<double, 4>{0.0, 0.0, 0.0, 1.0});

    const EigenDecomposition4 mixed = hermitian_eigen(ComplexMatrix4::identity() * Complex{0.25});
    for (double v : mixed.values) CHECK(v == 0.25);

    const std::array<Complex, 4> sx{0.0, 1.0, 1.0, 0.0};
    const EigenDecomposition4 xx = hermitian_eigen(kron2(sx, sx));
    CHECK(xx.values[0] == Approx(-1.0).margin(1e-14));
    CHECK(xx.values[1] == Approx(-1.0).margin(1e-14));
    CHECK(xx.values[2] == Approx(1.0).margin(1e-14));
    CHECK(xx.values[3] == Approx(1.0).margin(1e-14));

    const ComplexMatrix4 root =
        matrix_function(ComplexMatrix4::diagonal({4.0, 1.0, 0.0, 0.0}), [](double l) { return std::sqrt(l); });
    CHECK(max_entry_diff(root, ComplexMatrix4::diagonal({2.0, 1.0, 0.0, 0.0})) < 1e-14);

    const ComplexMatrix4 sq = matrix_function(ComplexMatrix4::identity() * Complex{0.25}, [](double l) { return l * l; });
    CHECK(max_entry_diff(sq, ComplexMatrix4::identity() * Complex{1.0 / 16.0}) < 1e-15);
}

TEST_CASE("sqrt squares back on random PSD matrices")
{
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
        const ComplexMatrix4 rho = oracle::random_density(rng);
        const ComplexMatrix4 r = matrix_function(rho, [](double l) { return std::sqrt(l); });
        CHECK(max_entry_diff(r * r, rho) < 1e-8);
    }
}
