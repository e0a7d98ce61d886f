#include <doctest.h>

#include <beamwave/analysis.hpp>

#include <cmath>
#include <vector>

using namespace beamwave;

namespace {

// Quadrature oracle for K(x) = (1/pi) int_0^inf cos(xi x)/(xi^4 - c^2 xi^2 + 1) d xi:
// panel-wise 10-point Gauss-Legendre with panels short against the oscillation,
// integrated to Xi = 600 (tail below 5e-10).
double kernel_quadrature(double x, double c) {
    static const double gx[5] = {0.1488743389816312, 0.4333953941292472, 0.6794095682990244,
                                 0.8650633666889845, 0.9739065285171717};
    static const double gw[5] = {0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
                                 0.1494513491505806, 0.0666713443086881};
    auto f = [&](double xi) {
        const double xi2 = xi * xi;
        return std::cos(xi * x) / (xi2 * xi2 - c * c * xi2 + 1.0);
    };
    const double panel = std::min(0.5, M_PI / (8.0 * std::max(1.0, std::abs(x))));
    const double XI = 600.0;
    double total = 0.0;
    for (double a = 0.0; a < XI; a += panel) {
        const double b = std::min(a + panel, XI);
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        double acc = 0.0;
        for (int i = 0; i < 5; ++i)
            acc += gw[i] * (f(mid + half * gx[i]) + f(mid - half * gx[i]));
        total += half * acc;
    }
    return total / M_PI;
}

} // namespace

TEST_CASE("green_kernel: closed form against the quadrature oracle") {
    CHECK(green_kernel(0.0, 0.0) == doctest::Approx(1.0 / (2.0 * std::sqrt(2.0))).epsilon(1e-12));
    CHECK(kernel_quadrature(0.0, 0.0) ==
          doctest::Approx(1.0 / (2.0 * std::sqrt(2.0))).epsilon(1e-8));

    for (double c : {0.0, 1.0}) {
        for (double x : {0.0, 0.3, 1.0, 2.5, 5.0, 12.0}) {
            CHECK(green_kernel(x, c) == doctest::Approx(kernel_quadrature(x, c)).epsilon(5e-8));
        }
    }
}

TEST_CASE("green_kernel: symmetry and domain guard") {
    for (double x : {0.7, 2.3, 9.0})
        CHECK(green_kernel(x, 0.9) == doctest::Approx(green_kernel(-x, 0.9)).epsilon(1e-15));
    CHECK_THROWS_AS(green_kernel(1.0, std::sqrt(2.0)), SymbolNotPositive);
    CHECK_THROWS_AS(green_kernel(1.0, -0.2), SymbolNotPositive);
}

TEST_CASE("green_kernel_derivative: finite-difference oracle and parity") {
    CHECK(green_kernel_derivative(0.0, 0.7, 1) == 0.0);
    CHECK_THROWS_AS(green_kernel_derivative(1.0, 0.7, 0), InvalidOrder);
    CHECK_THROWS_AS(green_kernel_derivative(1.0, 0.7, 4), InvalidOrder);

    for (double c : {0.0, 1.0}) {
        for (double x : {0.5, 1.0, 3.7}) {
            const double d = 1e-5;
            const double fd1 = (green_kernel(x + d, c) - green_kernel(x - d, c)) / (2.0 * d);
            CHECK(green_kernel_derivative(x, c, 1) == doctest::Approx(fd1).epsilon(1e-8));
            const double fd2 = (green_kernel_derivative(x + d, c, 2) -
                                green_kernel_derivative(x - d, c, 2)) /
                               (2.0 * d);
            CHECK(green_kernel_derivative(x, c, 3) == doctest::Approx(fd2).epsilon(1e-7));
        }
        // odd derivatives are odd, even are even
        CHECK(green_kernel_derivative(1.3, c, 1) ==
              doctest::Approx(-green_kernel_derivative(-1.3, c, 1)).epsilon(1e-14));
        CHECK(green_kernel_derivative(1.3, c, 2) ==
              doctest::Approx(green_kernel_derivative(-1.3, c, 2)).epsilon(1e-14));
    }
}

TEST_CASE("kernel decay envelope: e^{b|x|} K^(j) bounded on [0, 30]") {
    for (double c : {0.0, 0.5, 1.0, 1.3}) {
        const double b = theoretical_decay_rate(c);
        double mx = 0.0;
        for (double x = 0.0; x <= 30.0; x += 0.1) {
            mx = std::max(mx, std::exp(b * x) * std::abs(green_kernel(x, c)));
            mx = std::max(mx, std::exp(b * x) * std::abs(green_kernel_derivative(x, c, 3)));
        }
        CHECK(mx < 10.0);
        CHECK(std::isfinite(mx));
    }
}

TEST_CASE("fit_exponential_envelope: exact on a synthetic damped cosine") {
    std::vector<double> xs, vals;
    for (double x = 0.0; x <= 40.0; x += 0.05) {
        xs.push_back(x);
        vals.push_back(std::exp(-0.5 * x) * std::cos(1.2 * x));
    }
    auto fit = fit_exponential_envelope(xs, vals, 2.0, 38.0);
    CHECK(fit.rate == doctest::Approx(0.5).epsilon(2e-3));
    CHECK(fit.residual_r2 > 0.9999);
}

TEST_CASE("fit_exponential_envelope: guards") {
    std::vector<double> xs, vals;
    for (double x = 0.0; x <= 10.0; x += 0.05) {
        xs.push_back(x);
        vals.push_back(std::exp(-0.5 * x) * std::cos(1.2 * x));
    }
    // too few envelope maxima in a narrow window
    CHECK_THROWS_AS(fit_exponential_envelope(xs, vals, 4.0, 6.0), InsufficientTail);
}

TEST_CASE("kernel decay rate from the envelope matches sqrt(2 - c^2)/2") {
    for (double c : {0.0, 0.5, 1.0, 1.3}) {
        std::vector<double> xs, vals;
        for (double x = 0.0; x <= 30.0; x += 0.02) {
            xs.push_back(x);
            vals.push_back(green_kernel(x, c));
        }
        auto fit = fit_exponential_envelope(xs, vals, 5.0, 25.0);
        CHECK(fit.rate == doctest::Approx(theoretical_decay_rate(c)).epsilon(0.02));
    }
}

TEST_CASE("wave tail decay rate at c = 1") {
    auto g = make_grid(256, 12.0 * M_PI);
    ProfileEquation eq = beam_equation(BeamParameters(1.0, 1.0, Nonlinearity::cubic()));
    auto wave = homotopy_solve(default_homotopy_plan(eq), g, 1e-11);
    auto fit = fit_decay_rate(wave);
    CHECK(fit.rate == doctest::Approx(0.5).epsilon(0.05));
    CHECK(fit.residual_r2 >= 0.99);

    // a narrow window holds too few envelope maxima
    CHECK_THROWS_AS(fit_decay_rate(wave, std::make_pair(30.0, 35.0)), InsufficientTail);

    // a window whose samples sit at machine noise is rejected outright
    TravelingWave tiny;
    tiny.profile = field_from_function(g, [](double x) { return 1.0 / std::cosh(x); });
    tiny.equation = eq;
    CHECK_THROWS_AS(fit_decay_rate(tiny, std::make_pair(32.0, 37.0)), WindowBelowFloor);
}

TEST_CASE("variational maximizer: EL residual, multiplier consistency, rescaling") {
    auto g = make_grid(256, 12.0 * M_PI);
    auto nl = Nonlinearity::cubic();
    auto res = variational_maximize(1.0, 1.0, nl, g, 1e-8);
    CHECK(res.el_residual < 1e-5);
    CHECK(res.kappa == doctest::Approx(res.kappa_alt).epsilon(1e-6));
    CHECK(constraint_functional(res.maximizer, 1.0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(res.objective > 0.0);

    // kappa^{-1/2} U solves the gamma = 1 profile equation
    ProfileEquation eq = beam_equation(BeamParameters(1.0, 1.0, Nonlinearity::cubic()));
    RealField phi = (1.0 / std::sqrt(res.kappa)) * res.maximizer;
    CHECK(sup_norm(eq.residual(phi)) < 1e-4);

    auto wave = homotopy_solve(default_homotopy_plan(eq), g, 1e-11);
    double diff = 0.0;
    for (int i = 0; i < g->n_points; ++i)
        diff = std::max(diff, std::abs(phi[i] - wave.profile[i]));
    CHECK(diff < 1e-4);
}

TEST_CASE("variational guards") {
    auto g = make_grid(64, 8.0);
    CHECK_THROWS_AS(variational_maximize(0.0, 1.0, Nonlinearity::cubic(), g, 1e-6),
                    InvalidArgument);
    CHECK_THROWS_AS(variational_maximize(1.0, 1.5, Nonlinearity::cubic(), g, 1e-6),
                    SymbolNotPositive);
    CHECK_THROWS_AS(variational_maximize(1.0, 1.0, Nonlinearity::exponential(), g, 1e-6),
                    UnsupportedForFamily);
}

TEST_CASE("superlinearity probe: M_lambda / lambda^2 increases") {
    auto g = make_grid(128, 10.0 * M_PI);
    auto nl = Nonlinearity::cubic();
    double prev = 0.0;
    for (double lambda : {0.5, 1.0, 2.0}) {
        auto res = variational_maximize(lambda, 1.0, nl, g, 1e-7);
        const double ratio = res.objective / (lambda * lambda);
        CHECK(ratio > prev);
        prev = ratio;
    }
}
