#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "tqoc/dynamics.hpp"
#include "tqoc/objectives.hpp"

using namespace tqoc;
using Catch::Approx;

namespace {

ObjectiveSpec spec_for(ObjectiveKind kind, const RealState& target)
{
    ObjectiveSpec s;
    s.kind = kind;
    s.x_target = target;
    return s;
}

}  // namespace

TEST_CASE("overlap")
{
    const RealState ground = diagonal_state({1, 0, 0, 0});
    const RealState fifth = diagonal_state({0.2, 0.2, 0.2, 0.4});
    CHECK(overlap(ground, ground) == 1.0);
    CHECK(overlap(ground, fifth) == Approx(0.2));
    CHECK(overlap(diagonal_state({0.25, 0.25, 0.25, 0.25}), diagonal_state({0.7, 0.1, 0.1, 0.1})) == Approx(0.25));

    std::mt19937_64 rng(4);
    for (int i = 0; i < 100; ++i) {
        const ComplexMatrix4 a = oracle::random_density(rng), b = oracle::random_density(rng);
        CHECK(overlap(realify(a), realify(b)) == Approx((a * b).trace().real()).margin(1e-12));
    }
}

TEST_CASE("objective values")
{
    ObjectiveSpec s = spec_for(ObjectiveKind::SquaredDeviation, diagonal_state({1, 0, 0, 0}));
    s.M = 0.5;
    CHECK(evaluate(diagonal_state({0.37, 0.63, 0, 0}), s) == Approx(0.0169));

    s.kind = ObjectiveKind::SmoothedDeviation;
    s.theta = 1e-4;
    CHECK(evaluate(diagonal_state({0.5, 0.5, 0, 0}), s) == Approx(0.5e-4));

    s.kind = ObjectiveKind::MaximizeOverlap;
    s.J_bar = 0.7;
    CHECK(evaluate(diagonal_state({0.6, 0.4, 0, 0}), s) == Approx(0.1));
    s.kind = ObjectiveKind::MinimizeOverlap;
    CHECK(evaluate(diagonal_state({0.6, 0.4, 0, 0}), s) == Approx(0.6));

    CHECK(std::string(to_string(ObjectiveKind::SmoothedDeviation)) == "smoothed_deviation");
}

TEST_CASE("smoothed deviation is continuously differentiable")
{
    const double M = 0.4, theta = 1e-3;
    for (double side : {-1.0, 1.0}) {
        const double edge = M + side * theta;
        CHECK(smoothed_deviation(edge, M, theta) == Approx(theta));
        CHECK(std::abs(smoothed_deviation(edge + 1e-12, M, theta) - smoothed_deviation(edge - 1e-12, M, theta)) < 1e-11);
        const double h = 1e-7;
        const double left = (smoothed_deviation(edge, M, theta) - smoothed_deviation(edge - h, M, theta)) / h;
        const double right = (smoothed_deviation(edge + h, M, theta) - smoothed_deviation(edge, M, theta)) / h;
        CHECK(left == Approx(side).margin(1e-3));
        CHECK(right == Approx(side).margin(1e-3));
    }
    CHECK(smoothed_deviation_slope(M, M, theta) == 0.0);
}

TEST_CASE("transversality is minus the gradient of I")
{
    std::mt19937_64 rng(8);
    for (ObjectiveKind kind : {ObjectiveKind::MaximizeOverlap, ObjectiveKind::MinimizeOverlap,
                               ObjectiveKind::SquaredDeviation, ObjectiveKind::SmoothedDeviation}) {
        for (int trial = 0; trial < 20; ++trial) {
            ObjectiveSpec s = spec_for(kind, realify(oracle::random_density(rng)));
            s.M = 0.3;
            s.theta = 0.05;
            const RealState x = realify(oracle::random_density(rng));
            const RealVector16 p = transversality(x, s);
            for (std::size_t i = 0; i < 16; ++i) {
                const double h = 1e-6;
                RealState xp = x, xm = x;
                xp[i] += h;
                xm[i] -= h;
                const double fd = (oracle::objective(s, xp) - oracle::objective(s, xm)) / (2 * h);
                CHECK(p[i] == Approx(-fd).margin(1e-7));
            }
        }
    }
}

TEST_CASE("transversality examples")
{
    const RealState b = diagonal_state({0.7, 0.1, 0.1, 0.1});
    ObjectiveSpec s = spec_for(ObjectiveKind::MaximizeOverlap, b);
    CHECK(transversality(diagonal_state({1, 0, 0, 0}), s) == b);

    s.kind = ObjectiveKind::SquaredDeviation;
    s.M = 0.7;
    for (double v : transversality(diagonal_state({1, 0, 0, 0}), s)) CHECK(v == Approx(0.0).margin(1e-15));
    s.kind = ObjectiveKind::SmoothedDeviation;
    for (double v : transversality(diagonal_state({1, 0, 0, 0}), s)) CHECK(v == Approx(0.0).margin(1e-9));

    s.kind = ObjectiveKind::MinimizeOverlap;
    const RealVector16 pm = transversality(diagonal_state({1, 0, 0, 0}), s);
    for (std::size_t i = 0; i < 16; ++i) CHECK(pm[i] == -b[i]);
}

TEST_CASE("ObjectiveSpec validation")
{
    ObjectiveSpec s = spec_for(ObjectiveKind::SquaredDeviation, diagonal_state({1, 0, 0, 0}));
    s.M = 1.2;
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s.kind = ObjectiveKind::SmoothedDeviation;
    s.M = 0.5;
    s.theta = 0.0;
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s.x_target = diagonal_state({0.5, 0, 0, 0});
    CHECK_THROWS_AS(s.validate(), BadTrace);
}

TEST_CASE("overlap bounds")
{
    const OverlapBounds a = overlap_bounds(ComplexMatrix4::diagonal({0.2, 0.2, 0.2, 0.4}));
    CHECK(a.lower == Approx(0.2));
    CHECK(a.upper == Approx(0.4));
    CHECK(overlap_bounds(ComplexMatrix4::diagonal({0.7, 0.1, 0.1, 0.1})).upper == Approx(0.7));
    CHECK(overlap_bounds(ComplexMatrix4::diagonal({0.7, 0.1, 0.1, 0.1})).lower == Approx(0.1));
    CHECK(overlap_bounds(ComplexMatrix4::diagonal({1, 0, 0, 0})).upper == Approx(1.0));
    CHECK_THROWS_AS(overlap_bounds(ComplexMatrix4::diagonal({1.2, -0.2, 0, 0})), NotDensityMatrix);
    CHECK_THROWS_AS(overlap_bounds(ComplexMatrix4::diagonal({0.5, 0.2, 0, 0})), NotDensityMatrix);

    std::mt19937_64 rng(12);
    for (int i = 0; i < 100; ++i) {
        const ComplexMatrix4 rho = oracle::random_density(rng);
        const ComplexMatrix4 u = oracle::random_unitary(rng);
        const OverlapBounds x = overlap_bounds(rho), y = overlap_bounds(u * rho * u.adjoint());
        CHECK(x.lower == Approx(y.lower).margin(1e-12));
        CHECK(x.upper == Approx(y.upper).margin(1e-12));
        const double f = overlap(realify(oracle::random_density(rng)), realify(rho));
        CHECK(f >= x.lower - 1e-12);
        CHECK(f <= x.upper + 1e-12);
    }
}

TEST_CASE("overlap stays within bounds along trajectories")
{
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> u(-4.0, 4.0), n(0.0, 6.0);
    const SystemMatrices m = build_system_matrices(SystemParams{});
    for (int trial = 0; trial < 10; ++trial) {
        ControlGrid c(6.0, 12);
        for (std::size_t k = 0; k < 12; ++k) {
            c.u[k] = u(rng);
            c.n1[k] = n(rng);
            c.n2[k] = n(rng);
        }
        const ComplexMatrix4 target = oracle::random_density(rng);
        const OverlapBounds b = overlap_bounds(target);
        const Trajectory t = propagate_forward(m, c, realify(oracle::random_density(rng)), 48);
        for (const auto& x : t.states) {
            const double f = overlap(x, realify(target));
            CHECK(f >= b.lower - 1e-9);
            CHECK(f <= b.upper + 1e-9);
        }
    }
}
