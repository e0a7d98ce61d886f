#include <doctest.h>

#include <beamwave/grid.hpp>
#include <beamwave/nonlinearity.hpp>

#include <cmath>

#include "test_util.hpp"

using namespace beamwave;

TEST_CASE("cubic family: F, F', G closed forms") {
    auto nl = Nonlinearity::cubic();
    CHECK(eval_F(nl, 2.0) == doctest::Approx(2.0));
    CHECK(eval_Fprime(nl, 2.0) == doctest::Approx(1.0));
    CHECK(eval_G(nl, 2.0) == doctest::Approx(2.0));
    CHECK(eval_F(nl, 0.0) == 0.0);
    CHECK(eval_G(nl, 0.0) == 0.0);
}

TEST_CASE("polynomial family: Horner evaluation matches the explicit sum") {
    auto nl = Nonlinearity::polynomial({0.5, 0.0, 2.0}); // F = 0.5 r + 2 r^3
    for (double r : {0.0, 0.3, 1.0, 2.7}) {
        CHECK(eval_F(nl, r) == doctest::Approx(0.5 * r + 2.0 * r * r * r).epsilon(1e-14));
        CHECK(eval_Fprime(nl, r) == doctest::Approx(0.5 + 6.0 * r * r).epsilon(1e-14));
        CHECK(eval_G(nl, r) ==
              doctest::Approx(0.25 * r * r + 0.5 * r * r * r * r).epsilon(1e-14));
    }
}

TEST_CASE("polynomial family: construction guards") {
    CHECK_THROWS_AS(Nonlinearity::polynomial({}), InvalidArgument);
    CHECK_THROWS_AS(Nonlinearity::polynomial({1.0, -0.1}), InvalidArgument);
    CHECK_THROWS_AS(Nonlinearity::polynomial({0.0, 0.0}), InvalidArgument);
    CHECK_THROWS_AS(eval_F(Nonlinearity::cubic(), -1.0), InvalidArgument);
    CHECK_THROWS_AS(eval_F(Nonlinearity::exponential(), 1.0), UnsupportedForFamily);
    CHECK_THROWS_AS(eval_G(Nonlinearity::exponential(), 1.0), UnsupportedForFamily);
}

// Oracle: centered differences of G converge to F at second order in delta.
TEST_CASE("G' = F by finite differences") {
    auto nl = Nonlinearity::polynomial({1.0, 0.7, 0.0, 0.2});
    testutil::Rng rng(21);
    for (int t = 0; t < 5; ++t) {
        const double r = 1.5 + rng.next_double();
        auto fd = [&](double d) { return (eval_G(nl, r + d) - eval_G(nl, r - d)) / (2.0 * d); };
        const double e1 = std::abs(fd(1e-3) - eval_F(nl, r));
        const double e2 = std::abs(fd(5e-4) - eval_F(nl, r));
        CHECK(e1 < 1e-4);
        CHECK(e2 < e1); // shrinking with delta
        CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.3));
    }
}

TEST_CASE("monotonicity and G(r) <= r F(r) on r >= 0") {
    auto nl = Nonlinearity::polynomial({0.3, 1.2});
    double prevF = -1.0, prevG = -1.0;
    for (double r = 0.0; r <= 3.0; r += 0.1) {
        const double F = eval_F(nl, r), G = eval_G(nl, r);
        CHECK(F >= prevF);
        CHECK(G >= prevG);
        CHECK(G <= r * F + 1e-15);
        prevF = F;
        prevG = G;
    }
}

TEST_CASE("profile_nonlinear_term: values per family") {
    auto g = make_grid(32, 2.0);
    auto zero = zero_field(g);
    CHECK(sup_norm(profile_nonlinear_term(Nonlinearity::cubic(), 1.0, zero)) == 0.0);
    CHECK(sup_norm(profile_nonlinear_term(Nonlinearity::exponential(), 1.0, zero)) == 0.0);

    auto ones = field_from_function(g, [](double) { return 1.0; });
    // cubic, gamma = 1: 1 - F(1) * 1 = 0 pointwise
    CHECK(sup_norm(profile_nonlinear_term(Nonlinearity::cubic(), 1.0, ones)) < 1e-15);

    // exponential family, small phi: e^phi - 1 = phi + phi^2/2 + O(phi^3)
    auto small = field_from_function(g, [](double x) { return 1e-3 * std::cos(x); });
    auto term = profile_nonlinear_term(Nonlinearity::exponential(), 1.0, small);
    double err = 0.0;
    for (int i = 0; i < g->n_points; ++i) {
        const double p = small[i];
        err = std::max(err, std::abs(term[i] - (p + 0.5 * p * p)));
    }
    CHECK(err < 2e-10); // cubic remainder phi^3/6 at amplitude 1e-3
}

TEST_CASE("linearization potentials") {
    auto g = make_grid(32, 2.0);
    auto zero = zero_field(g);
    auto p0 = linearization_potentials(Nonlinearity::cubic(), 1.0, zero);
    CHECK(p0.v_minus.has_value());
    CHECK(sup_norm(*p0.v_minus) == 0.0);
    CHECK(sup_norm(p0.v_plus) == 0.0);

    auto phi = field_from_function(g, [](double x) { return 0.7 + 0.2 * std::sin(x); });
    auto p = linearization_potentials(Nonlinearity::cubic(), 1.0, phi);
    double err = 0.0;
    for (int i = 0; i < g->n_points; ++i)
        err = std::max(err, std::abs(p.v_plus[i] - 3.0 * phi[i] * phi[i]));
    CHECK(err < 1e-14); // V+ = 3 phi^2 for the cubic model

    // V+ - V- = 2 gamma F'(phi^2) phi^2 >= 0
    auto nl = Nonlinearity::polynomial({0.4, 0.9});
    auto q = linearization_potentials(nl, 1.3, phi);
    for (int i = 0; i < g->n_points; ++i) {
        CHECK(q.v_plus[i] - (*q.v_minus)[i] >= 0.0);
        const double r = phi[i] * phi[i];
        CHECK(q.v_plus[i] - (*q.v_minus)[i] ==
              doctest::Approx(2.0 * 1.3 * eval_Fprime(nl, r) * r).epsilon(1e-13));
    }

    auto e = linearization_potentials(Nonlinearity::exponential(), 1.0, phi);
    CHECK(!e.v_minus.has_value());
    for (int i = 0; i < g->n_points; ++i)
        CHECK(e.v_plus[i] == doctest::Approx(1.0 - std::exp(phi[i])).epsilon(1e-13));
}
