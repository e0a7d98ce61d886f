#include <doctest.h>

#include <beamwave/dynamics.hpp>
#include <beamwave/stability.hpp>

#include <cmath>

using namespace beamwave;

namespace {

BeamParameters linear_params() { return BeamParameters(0.0, 0.0, Nonlinearity::cubic()); }

} // namespace

TEST_CASE("energy values") {
    auto g = make_grid(128, M_PI);
    auto zero = zero_field(g);
    CHECK(energy(zero, zero, BeamParameters(1.0, 1.0, Nonlinearity::cubic())) == 0.0);

    // u = cos x, v = 0, gamma = 0: the u_xx and u terms contribute pi/2 each
    auto u = field_from_function(g, [](double x) { return std::cos(x); });
    CHECK(energy(u, zero, linear_params()) == doctest::Approx(M_PI).epsilon(1e-12));
}

TEST_CASE("zero state stays zero") {
    auto g = make_grid(64, M_PI);
    auto params = BeamParameters(1.0, 1.0, Nonlinearity::cubic());
    auto s = make_state(zero_field(g), zero_field(g), 0.0, params);
    auto s1 = irk_gauss4_step(s, 1e-2, params);
    CHECK(sup_norm(s1.u) == 0.0);
    CHECK(sup_norm(s1.v) == 0.0);
    CHECK(s1.time == doctest::Approx(1e-2));
}

// Oracle: with gamma = 0 a single mode cos(kx) oscillates at sqrt(k^4 + 1),
// forced by u_tt + u_xxxx + u = 0.
TEST_CASE("linear dispersion: one mode, fourth-order accuracy") {
    auto g = make_grid(64, M_PI);
    auto params = linear_params();
    const double k = 1.0, om = std::sqrt(k * k * k * k + 1.0);
    auto u0 = field_from_function(g, [&](double x) { return std::cos(k * x); });
    auto run = [&](double dt) {
        auto s = make_state(u0, zero_field(g), 0.0, params);
        const int steps = static_cast<int>(std::round(1.0 / dt));
        for (int i = 0; i < steps; ++i) s = irk_gauss4_step(s, dt, params);
        double err = 0.0;
        for (int i = 0; i < g->n_points; ++i)
            err = std::max(err,
                           std::abs(s.u[i] - std::cos(om * 1.0) * std::cos(k * g->nodes[i])));
        return err;
    };
    const double e1 = run(0.02);
    const double e2 = run(0.01);
    CHECK(e1 < 1e-7);
    CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.2)); // order 4
}

TEST_CASE("time symmetry: dt then -dt returns the state") {
    auto g = make_grid(128, 12.0 * M_PI);
    auto params = BeamParameters(1.0, 1.0, Nonlinearity::cubic());
    auto u0 = field_from_function(g, [](double x) { return 0.8 / std::cosh(x); });
    auto v0 = field_from_function(g, [](double x) { return 0.1 * std::exp(-x * x); });
    auto s0 = make_state(u0, v0, 0.0, params);
    IrkOptions opts;
    opts.inner_tol = 1e-14;
    auto fwd = irk_gauss4_step(s0, 0.01, params, opts);
    auto back = irk_gauss4_step(fwd, -0.01, params, opts);
    CHECK(sup_norm(back.u - s0.u) < 1e-12);
    CHECK(sup_norm(back.v - s0.v) < 1e-12);
}

TEST_CASE("reversibility over many steps") {
    auto g = make_grid(128, 12.0 * M_PI);
    auto params = BeamParameters(1.0, 1.0, Nonlinearity::cubic());
    auto u0 = field_from_function(g, [](double x) { return 0.5 / std::cosh(0.7 * x); });
    auto s = make_state(u0, zero_field(g), 0.0, params);
    IrkOptions opts;
    opts.inner_tol = 1e-14;
    const int steps = 20;
    auto cur = s;
    for (int i = 0; i < steps; ++i) cur = irk_gauss4_step(cur, 5e-3, params, opts);
    for (int i = 0; i < steps; ++i) cur = irk_gauss4_step(cur, -5e-3, params, opts);
    CHECK(sup_norm(cur.u - s.u) < 2 * steps * 10.0 * opts.inner_tol);
    CHECK(sup_norm(cur.v - s.v) < 2 * steps * 10.0 * opts.inner_tol);
}

TEST_CASE("Hamiltonian drift over the nonlinear flow stays tiny") {
    auto g = make_grid(256, 12.0 * M_PI);
    auto params = BeamParameters(1.0, 1.0, Nonlinearity::cubic());
    auto u0 = field_from_function(g, [](double x) { return 1.0 / std::cosh(x); });
    auto s = make_state(u0, zero_field(g), 0.0, params);
    const double H0 = s.hamiltonian;
    for (int i = 0; i < 400; ++i) s = irk_gauss4_step(s, 1e-3, params);
    CHECK(std::abs(s.hamiltonian - H0) / std::abs(H0) < 1e-11);
}

TEST_CASE("perturbed_wave_initial: exact wave data and normalized offsets") {
    auto g = make_grid(256, 12.0 * M_PI);
    auto params = BeamParameters(1.0, 1.0, Nonlinearity::cubic());
    ProfileEquation eq = beam_equation(params);
    auto wave = homotopy_solve(default_homotopy_plan(eq), g, 1e-11);

    auto s0 = perturbed_wave_initial(wave, zero_field(g), zero_field(g), 0.0, params);
    CHECK(sup_norm(s0.u - wave.profile) == 0.0);
    auto minus_cphi1 = (-1.0) * differentiate(wave.profile, 1);
    CHECK(sup_norm(s0.v - minus_cphi1) < 1e-15);

    // a normalized even/odd pair
    RealField mv = field_from_function(g, [](double x) { return std::exp(-x * x); });
    RealField mw = zero_field(g);
    const double nrm = std::sqrt(l2_norm_sq(mv));
    mv *= 1.0 / nrm;
    const double eps = 1e-3;
    auto s1 = perturbed_wave_initial(wave, mv, mw, eps, params);
    CHECK(l2_norm(s1.u - wave.profile) == doctest::Approx(eps).epsilon(1e-12));

    RealField bad = 2.0 * mv;
    CHECK_THROWS_AS(perturbed_wave_initial(wave, bad, mw, eps, params), InvalidArgument);
}

TEST_CASE("shift-matched deviation recovers a spectral translation") {
    auto g = make_grid(256, 12.0 * M_PI);
    ProfileEquation eq = beam_equation(BeamParameters(1.0, 1.0, Nonlinearity::cubic()));
    auto wave = homotopy_solve(default_homotopy_plan(eq), g, 1e-11);
    const double s = 1.2345;
    auto moved = shift_field(wave.profile, s);
    double found = 0.0;
    const double dev = shift_matched_deviation(moved, wave.profile, &found);
    CHECK(dev < 1e-11);
    CHECK(found == doctest::Approx(s).epsilon(1e-10));
}

TEST_CASE("evolve: zero data, sampling cadence, unperturbed wave translation") {
    auto g = make_grid(256, 12.0 * M_PI);
    auto params = BeamParameters(1.0, 1.0, Nonlinearity::cubic());

    auto zero_state = make_state(zero_field(g), zero_field(g), 0.0, params);
    auto summary = evolve(zero_state, 0.05, 1e-2, params, std::nullopt, 2);
    CHECK(summary.status == EvolutionStatus::Completed);
    for (const auto& s : summary.samples) {
        CHECK(s.sup_u == 0.0);
        CHECK(s.hamiltonian == 0.0);
    }

    ProfileEquation eq = beam_equation(params);
    auto wave = homotopy_solve(default_homotopy_plan(eq), g, 1e-11);
    auto s0 = perturbed_wave_initial(wave, zero_field(g), zero_field(g), 0.0, params);
    auto run = evolve(s0, 0.5, 1e-3, params, wave, 100);
    CHECK(run.status == EvolutionStatus::Completed);
    for (const auto& s : run.samples) {
        REQUIRE(s.deviation.has_value());
        CHECK(*s.deviation < 1e-6); // pure translation of the discrete wave
    }
    const double H0 = run.samples.front().hamiltonian;
    CHECK(std::abs(run.samples.back().hamiltonian - H0) / std::abs(H0) < 1e-10);
}
