#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mflow/functionals.hpp"
#include "oracle_utils.hpp"

using namespace mflow;
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

TEST_CASE("moduli energy closed forms") {
    const Grid g = make_grid(1, 64, kTwoPi);
    CHECK(moduli_energy(SymTensorField(g)) == 0.0);

    const Grid g2 = make_grid(2, 16, kTwoPi);
    CHECK(moduli_energy(SymTensorField::constant(g2, SymMat::diag2(0.7, -0.2))) < 1e-14);

    const auto c = SymTensorField::from_function(
        g, [](double x, double) { return SymMat::scalar(std::cos(x)); });
    // (1/2) int sin^2 = pi/2; cross-checked with a high-resolution quadrature
    const double high_res =
        0.5 * oracle::quadrature_1d([](double x) { return std::sin(x) * std::sin(x); }, kTwoPi);
    CHECK(moduli_energy(c) == doctest::Approx(kPi / 2.0).epsilon(1e-12));
    CHECK(moduli_energy(c) == doctest::Approx(high_res).epsilon(1e-12));
}

TEST_CASE("energy gradient is -Lap A") {
    const Grid g = make_grid(1, 64, kTwoPi);
    const auto c3 = SymTensorField::from_function(
        g, [](double x, double) { return SymMat::scalar(std::cos(3.0 * x)); });
    const SymTensorField grad = energy_gradient(c3);
    for (int i = 0; i < g.num_points(); ++i)
        CHECK(grad.at(0, i) == doctest::Approx(9.0 * c3.at(0, i)).epsilon(1e-11));

    const Grid g2 = make_grid(2, 16, kTwoPi);
    CHECK(sup_norm(energy_gradient(SymTensorField::constant(g2, SymMat::diag2(1.0, 2.0)))) < 1e-12);
}

TEST_CASE("<grad F, A> = 2 F(A) on random data") {
    const Grid g = make_grid(2, 16, kTwoPi);
    std::mt19937 rng(4);
    for (int trial = 0; trial < 5; ++trial) {
        const SymTensorField a = oracle::random_tensor(g, rng, 5, 1.0);
        const double lhs = l2_inner(energy_gradient(a), a);
        const double rhs = 2.0 * moduli_energy(a);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("finite-difference gradient check: quadratic exactness") {
    const Grid g = make_grid(2, 16, kTwoPi);
    std::mt19937 rng(6);
    const SymTensorField a = oracle::random_tensor(g, rng, 4, 1.0);
    // correlate the direction with a so <grad F, B> is well away from zero
    SymTensorField b = oracle::random_tensor(g, rng, 4, 1.0);
    b.axpy(0.7, a);
    const FdCheckReport rep = gradient_fd_check(a, b, {1e-3, 1e-4, 1e-5});
    for (double e : rep.rel_error) CHECK(e <= 1e-8);
    CHECK(rep.roundoff_dominated);

    CHECK_THROWS_WITH_AS(gradient_fd_check(a, SymTensorField(g), {1e-3, 1e-4, 1e-5}),
                         "degenerate direction", std::invalid_argument);
    CHECK_THROWS_AS(gradient_fd_check(a, b, {1e-3, 1e-4}), std::invalid_argument);
}

TEST_CASE("fd check matches a test-side finite difference") {
    // same central difference computed outside the library, as a sanity
    // anchor for the reported directional derivative
    const Grid g = make_grid(1, 32, kTwoPi);
    const auto a = SymTensorField::from_function(
        g, [](double x, double) { return SymMat::scalar(std::cos(x) + 0.3 * std::sin(2.0 * x)); });
    const auto b = SymTensorField::from_function(
        g, [](double x, double) { return SymMat::scalar(std::cos(x)); });
    const double eps = 1e-5;
    SymTensorField plus = a, minus = a;
    plus.axpy(eps, b);
    minus.axpy(-eps, b);
    const double fd = (moduli_energy(plus) - moduli_energy(minus)) / (2.0 * eps);
    const FdCheckReport rep = gradient_fd_check(a, b, {1e-3, 1e-4, 1e-5});
    CHECK(rep.directional == doctest::Approx(fd).epsilon(1e-9));
}

TEST_CASE("zero-energy characterization") {
    const Grid g = make_grid(2, 16, kTwoPi);
    const SymTensorField c = SymTensorField::constant(g, SymMat::diag2(0.4, 0.1));
    CHECK(moduli_energy(c) <= 1e-14);
    CHECK(gradient_l2_norm(c) <= 1e-6);

    SymTensorField wiggly = c;
    ScalarField bump = wiggly.component(0);
    for (int i = 0; i < g.num_points(); ++i)
        bump[static_cast<std::size_t>(i)] += 0.01 * std::cos(g.coord(i % g.n()));
    wiggly.set_component(0, bump);
    CHECK(moduli_energy(wiggly) > 1e-14);
    CHECK(gradient_l2_norm(wiggly) > 1e-6);
}

TEST_CASE("diagnostics record") {
    const Grid g = make_grid(2, 16, kTwoPi);
    const DiagnosticsRecord z = make_diagnostics(SymTensorField(g), 1.5, 0.01);
    CHECK(z.t == 1.5);
    CHECK(z.F == 0.0);
    CHECK(z.A_sup == 0.0);
    CHECK(z.eig_min == 0.0);
    CHECK(z.eig_max == 0.0);

    const DiagnosticsRecord d =
        make_diagnostics(SymTensorField::constant(g, SymMat::diag2(1.0, 2.0)), 0.0, 0.0);
    CHECK(d.eig_min == doctest::Approx(1.0));
    CHECK(d.eig_max == doctest::Approx(2.0));
    CHECK(d.mean_trace == doctest::Approx(3.0).epsilon(1e-13));

    const Grid g1 = make_grid(1, 64, kTwoPi);
    const auto c = SymTensorField::from_function(
        g1, [](double x, double) { return SymMat::scalar(std::cos(x)); });
    const DiagnosticsRecord r = make_diagnostics(c, 0.0, 0.0);
    CHECK(r.F == doctest::Approx(kPi / 2.0).epsilon(1e-12));
    CHECK(r.grad_A_l2 == doctest::Approx(std::sqrt(kPi)).epsilon(1e-12));
    // F = grad^2 / 2 ties the two routes together
    CHECK(2.0 * r.F == doctest::Approx(r.grad_A_l2 * r.grad_A_l2).epsilon(1e-12));
}

TEST_CASE("gauge invariance of the energy") {
    const Grid g = make_grid(2, 16, kTwoPi);
    std::mt19937 rng(19);
    const SymTensorField a = oracle::random_tensor(g, rng, 4, 0.8);
    const GaugeRotation r = GaugeRotation::plane_rotation(2.1);
    CHECK(moduli_energy(conjugate(a, r)) == doctest::Approx(moduli_energy(a)).epsilon(1e-10));
}
