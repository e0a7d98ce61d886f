#pragma once

// Closed-form Green's kernel of (d^4 + c^2 d^2 + 1)^{-1}, exponential
// decay-rate fitting of wave tails, and the variational construction of the
// profile by projected gradient ascent on I[u] = integral G(u^2) over the
// quadratic constraint manifold L[u] = lambda.
//
// The kernel follows from the quartic roots +/-a +/- i b of the symbol,
//   a = sqrt(2 + c^2)/2,  b = sqrt(2 - c^2)/2,  a^2 + b^2 = 1:
//   K(x) = e^{-b|x|} (a cos(a x) + b sin(a |x|)) / (4 a b),
// an exponentially damped sinusoid whose envelope rate b matches the decay
// of the traveling waves themselves.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "nonlinearity.hpp"
#include "profile.hpp"
#include "spectral.hpp"

namespace beamwave {

namespace detail {
inline void require_speed_window(double c, const char* who) {
    if (!(c >= 0.0) || !(c < std::sqrt(2.0)))
        throw SymbolNotPositive(std::string(who) + ": requires 0 <= c < sqrt(2)");
}
} // namespace detail

/// K(x) = (1/2 pi) int e^{i xi x} / (xi^4 - c^2 xi^2 + 1) d xi, by residues.
inline double green_kernel(double x, double c) {
    detail::require_speed_window(c, "green_kernel");
    const double a = 0.5 * std::sqrt(2.0 + c * c);
    const double b = 0.5 * std::sqrt(2.0 - c * c);
    const double r = std::abs(x);
    return std::exp(-b * r) * (a * std::cos(a * r) + b * std::sin(a * r)) / (4.0 * a * b);
}

/// j-th derivative of the kernel, j in 1..3 (odd derivatives vanish at 0 in
/// the principal-value sense; K''' carries the unit jump of the Green's
/// function).
inline double green_kernel_derivative(double x, double c, int j) {
    detail::require_speed_window(c, "green_kernel_derivative");
    if (j < 1 || j > 3) throw InvalidOrder("green_kernel_derivative: j must be in 1..3");
    const double a = 0.5 * std::sqrt(2.0 + c * c);
    const double b = 0.5 * std::sqrt(2.0 - c * c);
    const double r = std::abs(x);
    const double sgn = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    const double damp = std::exp(-b * r) / (4.0 * a * b);
    switch (j) {
        case 1: return -sgn * damp * std::sin(a * r); // uses a^2 + b^2 = 1
        case 2: return damp * (b * std::sin(a * r) - a * std::cos(a * r));
        default:
            return sgn * damp * ((a * a - b * b) * std::sin(a * r) + 2.0 * a * b * std::cos(a * r));
    }
}

// ---- exponential envelope fitting ----------------------------------------------

struct DecayFit {
    double rate = 0.0;
    double intercept = 0.0;
    double window_lo = 0.0, window_hi = 0.0;
    double residual_r2 = 0.0;
    int envelope_points = 0;
};

/// Least-squares line through (x_j, log m_j), where m_j are the local maxima
/// of |values| inside [x_lo, x_hi], refined by log-space parabolas.  The
/// tails oscillate at the carrier frequency a, so fitting the envelope
/// avoids the near-zeros that corrupt a raw log fit.
inline DecayFit fit_exponential_envelope(const std::vector<double>& xs,
                                         const std::vector<double>& values, double x_lo,
                                         double x_hi) {
    if (xs.size() != values.size() || xs.size() < 5)
        throw InvalidArgument("fit_exponential_envelope: inconsistent samples");
    std::vector<double> px, py;
    for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
        if (xs[i] < x_lo || xs[i] > x_hi) continue;
        const double v = std::abs(values[i]);
        if (v <= 0.0) continue;
        if (v >= std::abs(values[i - 1]) && v >= std::abs(values[i + 1]) &&
            (v > std::abs(values[i - 1]) || v > std::abs(values[i + 1]))) {
            const double ym = std::log(std::max(std::abs(values[i - 1]), 1e-300));
            const double y0 = std::log(v);
            const double yp = std::log(std::max(std::abs(values[i + 1]), 1e-300));
            const double denom = ym - 2.0 * y0 + yp;
            double xv = xs[i], yv = y0;
            if (denom < 0.0) { // parabola vertex in log space
                const double d = 0.5 * (ym - yp) / denom;
                if (std::abs(d) < 1.0) {
                    xv = xs[i] + d * (xs[i + 1] - xs[i]);
                    yv = y0 - 0.25 * d * (ym - yp);
                }
            }
            px.push_back(xv);
            py.push_back(yv);
        }
    }
    if (px.size() < 4)
        throw InsufficientTail("fit_exponential_envelope: fewer than 4 envelope points");
    const double n = static_cast<double>(px.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < px.size(); ++i) {
        sx += px[i];
        sy += py[i];
        sxx += px[i] * px[i];
        sxy += px[i] * py[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double inter = (sy - slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double mean = sy / n;
    for (std::size_t i = 0; i < px.size(); ++i) {
        const double fit = inter + slope * px[i];
        ss_res += (py[i] - fit) * (py[i] - fit);
        ss_tot += (py[i] - mean) * (py[i] - mean);
    }
    DecayFit out;
    out.rate = -slope;
    out.intercept = inter;
    out.window_lo = x_lo;
    out.window_hi = x_hi;
    out.residual_r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
    out.envelope_points = static_cast<int>(px.size());
    if (out.residual_r2 < 0.99)
        throw WindowBelowFloor("fit_exponential_envelope: fit rejected, r^2 = " +
                               std::to_string(out.residual_r2));
    return out;
}

/// Fits the tail decay rate of a converged wave on x > 0.  The default
/// window starts where the envelope falls below 1e-2 of the peak and ends
/// at the noise floor or 0.9 L, whichever comes first.
inline DecayFit fit_decay_rate(const TravelingWave& wave,
                               std::optional<std::pair<double, double>> window = std::nullopt) {
    const GridPtr& g = wave.profile.grid;
    const double amp = sup_norm(wave.profile);
    if (amp <= 0.0) throw InvalidArgument("fit_decay_rate: zero wave");
    const double floor_level = 1e-12 * amp; // 1e2 x double roundoff on the peak
    double x_lo, x_hi;
    if (window) {
        x_lo = window->first;
        x_hi = window->second;
    } else {
        x_lo = 0.0;
        x_hi = 0.9 * g->half_length;
        double running = amp;
        for (int i = g->n_points / 2; i < g->n_points; ++i) {
            running = std::abs(wave.profile[i]);
            if (running <= 1e-2 * amp) {
                x_lo = g->nodes[i];
                break;
            }
        }
    }
    // collect x > 0 samples
    std::vector<double> xs, vals;
    for (int i = g->n_points / 2; i < g->n_points; ++i) {
        xs.push_back(g->nodes[i]);
        vals.push_back(wave.profile[i]);
    }
    // the window must sit above the roundoff floor of the profile
    bool any_above = false;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (xs[i] >= x_lo && xs[i] <= x_hi && std::abs(vals[i]) > floor_level) any_above = true;
    if (!any_above)
        throw WindowBelowFloor("fit_decay_rate: requested window is below the noise floor");
    // clip the upper end to the last sample above the floor
    double hi_eff = x_lo;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (xs[i] >= x_lo && xs[i] <= x_hi && std::abs(vals[i]) > floor_level)
            hi_eff = std::max(hi_eff, xs[i]);
    DecayFit fit = fit_exponential_envelope(xs, vals, x_lo, hi_eff);
    return fit;
}

/// Theoretical tail rate sqrt(2 - c^2)/2 shared by the kernel and the waves.
inline double theoretical_decay_rate(double c) {
    detail::require_speed_window(c, "theoretical_decay_rate");
    return 0.5 * std::sqrt(2.0 - c * c);
}

// ---- variational construction ---------------------------------------------------

struct VariationalResult {
    RealField maximizer;
    double lambda = 0.0;
    double kappa = 0.0;     // (1/lambda) integral F(U^2) U^2
    double kappa_alt = 0.0; // least-squares multiplier from the EL equation
    double objective = 0.0; // M_lambda = I[U]
    double el_residual = 0.0;
    int iterations = 0;
};

struct VariationalOptions {
    int max_iterations = 50000;
    int max_backtracks = 40;
    double armijo = 1e-4;
};

/// Maximizes I[u] = integral G(u^2) subject to L[u] = lambda by projected
/// gradient ascent.  Steps follow the inverse-symbol-preconditioned projected
/// gradient and are rescaled onto the constraint manifold (the projection is
/// exact because L is quadratic); termination is on the plain projected
/// gradient norm.
inline VariationalResult variational_maximize(double lambda, double c, const Nonlinearity& nl,
                                              const GridPtr& grid, double tol,
                                              const VariationalOptions& opts = {}) {
    if (!(lambda > 0.0)) throw InvalidArgument("variational_maximize: lambda must be positive");
    detail::require_speed_window(c, "variational_maximize");
    if (nl.family != NonlinearityFamily::polynomial)
        throw UnsupportedForFamily("variational_maximize: polynomial family only");

    auto objective = [&](const RealField& u) {
        double s = 0.0;
        for (int i = 0; i < u.size(); ++i) s += eval_G(nl, u[i] * u[i]);
        return u.grid->spacing * s;
    };
    auto rescale = [&](RealField u) {
        const double L = constraint_functional(u, c);
        if (!(L > 0.0)) throw NoConvergence("variational_maximize: iterate left the cone L > 0");
        u *= std::sqrt(lambda / L);
        return u;
    };

    RealField u = rescale(project_even(seed_profile(grid, 1.0)));
    double I_u = objective(u);

    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        RealField Fu = u;
        for (int i = 0; i < u.size(); ++i) Fu[i] = eval_F(nl, u[i] * u[i]) * u[i];
        RealField Su = apply_beam_symbol(u, c);
        RealField grad_I = 2.0 * Fu;
        RealField grad_L = 2.0 * Su;
        const double theta = inner_product(grad_I, grad_L) / inner_product(grad_L, grad_L);
        RealField g_proj = grad_I - theta * grad_L;
        if (l2_norm(g_proj) < tol) break;

        RealField dir = invert_beam_symbol(g_proj, c);
        const double slope = inner_product(g_proj, dir);
        // near the maximum the Armijo gain falls below the roundoff of I, so
        // non-decrease within that resolution also counts as progress
        const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::abs(I_u);
        double tau = 1.0;
        bool moved = false;
        for (int bt = 0; bt < opts.max_backtracks; ++bt) {
            RealField trial = rescale(project_even(u + tau * dir));
            const double I_t = objective(trial);
            if (I_t >= I_u + opts.armijo * tau * slope - slack) {
                u = std::move(trial);
                I_u = I_t;
                moved = true;
                break;
            }
            tau *= 0.5;
        }
        if (!moved) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.3e", l2_norm(g_proj));
            throw NoConvergence(std::string("variational_maximize: ascent stalled above tol, "
                                            "projected gradient ") + buf);
        }
    }
    if (it == opts.max_iterations)
        throw NoConvergence("variational_maximize: iteration cap reached");

    VariationalResult res;
    res.maximizer = u;
    res.lambda = lambda;
    res.iterations = it;
    RealField Fu = u;
    double qf = 0.0;
    for (int i = 0; i < u.size(); ++i) {
        Fu[i] = eval_F(nl, u[i] * u[i]) * u[i];
        qf += Fu[i] * u[i];
    }
    qf *= grid->spacing;
    res.kappa = qf / lambda;
    RealField Su = apply_beam_symbol(u, c);
    res.kappa_alt = inner_product(Fu, Fu) / inner_product(Su, Fu);
    RealField el = Su - (1.0 / res.kappa) * Fu;
    res.el_residual = sup_norm(el);
    res.objective = objective(u);
    return res;
}

} // namespace beamwave
