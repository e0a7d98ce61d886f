#pragma once

// Fourier spectral operations on periodic fields: differentiation, the
// constant-coefficient fourth-order symbol and its inverse, the quadratic
// constraint functional, spectral resampling and sub-grid translation.
//
// Normalization: the forward transform divides by n_points, so multiplier
// conventions are internal and synthesis carries no extra factor.  The
// Nyquist mode is zeroed for odd derivative orders (keeps results real and
// differentiation antisymmetric) and kept for even orders.

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "errors.hpp"
#include "fft.hpp"
#include "grid.hpp"

namespace beamwave {

/// Forward transform with 1/n normalization, FFT mode ordering.
inline std::vector<std::complex<double>> spectrum(const RealField& f) {
    const int n = f.size();
    std::vector<std::complex<double>> a(f.values.begin(), f.values.end());
    detail::transform(a, -1);
    const double inv = 1.0 / n;
    for (auto& c : a) c *= inv;
    return a;
}

/// Synthesis from coefficients produced by spectrum(); imaginary residue is
/// discarded (inputs are expected conjugate-symmetric up to roundoff).
inline RealField synthesize(const GridPtr& g, std::vector<std::complex<double>> coeffs) {
    detail::transform(coeffs, +1);
    std::vector<double> v(coeffs.size());
    for (std::size_t i = 0; i < coeffs.size(); ++i) v[i] = coeffs[i].real();
    return RealField(g, std::move(v));
}

/// Spectral derivative of order 1..4.
inline RealField differentiate(const RealField& f, int order) {
    if (order < 1 || order > 4) throw InvalidOrder("differentiate: order must be in 1..4");
    require_finite(f, "differentiate");
    const int n = f.size();
    auto a = spectrum(f);
    for (int j = 0; j < n; ++j) {
        const double k = f.grid->wavenumbers[j];
        std::complex<double> mult;
        switch (order) {
            case 1: mult = std::complex<double>(0.0, k); break;
            case 2: mult = std::complex<double>(-k * k, 0.0); break;
            case 3: mult = std::complex<double>(0.0, -k * k * k); break;
            default: mult = std::complex<double>(k * k * k * k, 0.0); break;
        }
        if (order % 2 == 1 && j == n / 2) mult = 0.0; // Nyquist
        a[static_cast<std::size_t>(j)] *= mult;
    }
    return synthesize(f.grid, std::move(a));
}

// ---- constant-coefficient symbol alpha k^4 - mu k^2 + omega -----------------
// With (alpha, mu, omega) = (1, c^2, 1) this is the Fourier symbol of
// d^4/dx^4 + c^2 d^2/dx^2 + 1.

inline double symbol_value(double k, double alpha, double mu, double omega) {
    const double k2 = k * k;
    return alpha * k2 * k2 - mu * k2 + omega;
}

/// Minimum of the symbol over real frequencies.
inline double symbol_min_general(double alpha, double mu, double omega) {
    if (alpha > 0.0 && mu > 0.0) return omega - mu * mu / (4.0 * alpha);
    if (alpha == 0.0 && mu > 0.0) return -std::numeric_limits<double>::infinity();
    return omega; // minimum sits at k = 0
}

/// Minimum 1 - c^4/4 of k^4 - c^2 k^2 + 1; requires 0 <= c < sqrt(2).
inline double symbol_min(double c) {
    if (!(c >= 0.0) || !(c < std::sqrt(2.0)))
        throw SymbolNotPositive("symbol_min: requires 0 <= c < sqrt(2)");
    return 1.0 - 0.25 * c * c * c * c;
}

inline RealField apply_symbol(const RealField& f, double alpha, double mu, double omega) {
    require_finite(f, "apply_symbol");
    auto a = spectrum(f);
    // Coefficients below the rounding noise of the transform carry no
    // significant digits; k^4 would amplify that noise to ~1e-10 on a
    // 1024-point grid, so they are zeroed before the multiply.
    double peak = 0.0;
    for (const auto& c : a) peak = std::max(peak, std::abs(c));
    const double floor = 8.0 * std::numeric_limits<double>::epsilon() * peak;
    for (int j = 0; j < f.size(); ++j) {
        auto& c = a[static_cast<std::size_t>(j)];
        if (std::abs(c) < floor)
            c = 0.0;
        else
            c *= symbol_value(f.grid->wavenumbers[j], alpha, mu, omega);
    }
    return synthesize(f.grid, std::move(a));
}

inline RealField invert_symbol(const RealField& f, double alpha, double mu, double omega) {
    require_finite(f, "invert_symbol");
    if (!(symbol_min_general(alpha, mu, omega) > 0.0))
        throw SymbolNotPositive("invert_symbol: symbol is not positive definite");
    auto a = spectrum(f);
    for (int j = 0; j < f.size(); ++j)
        a[static_cast<std::size_t>(j)] /= symbol_value(f.grid->wavenumbers[j], alpha, mu, omega);
    return synthesize(f.grid, std::move(a));
}

/// (d^4 + c^2 d^2 + 1) f as a Fourier multiplier k^4 - c^2 k^2 + 1.
inline RealField apply_beam_symbol(const RealField& f, double c) {
    return apply_symbol(f, 1.0, c * c, 1.0);
}

/// Inverse multiplier 1 / (k^4 - c^2 k^2 + 1); requires 0 <= c < sqrt(2).
inline RealField invert_beam_symbol(const RealField& f, double c) {
    if (!(c >= 0.0) || !(c < std::sqrt(2.0)))
        throw SymbolNotPositive("invert_beam_symbol: requires 0 <= c < sqrt(2)");
    return invert_symbol(f, 1.0, c * c, 1.0);
}

/// L[f] = integral of (f'')^2 - c^2 (f')^2 + f^2 by periodic trapezoid rule.
inline double constraint_functional(const RealField& f, double c) {
    require_finite(f, "constraint_functional");
    RealField f1 = differentiate(f, 1);
    RealField f2 = differentiate(f, 2);
    double s = 0.0;
    for (int i = 0; i < f.size(); ++i)
        s += f2[i] * f2[i] - c * c * f1[i] * f1[i] + f[i] * f[i];
    return f.grid->spacing * s;
}

// ---- resampling and translation ---------------------------------------------

/// Trigonometric interpolation onto a finer grid with the same half-length.
/// The Nyquist coefficient is split across +/- Nyquist of the new grid.
inline RealField resample(const RealField& f, const GridPtr& fine) {
    if (fine->half_length != f.grid->half_length)
        throw InvalidArgument("resample: grids must share the half-length");
    const int n = f.size();
    const int m = fine->n_points;
    if (m < n) throw InvalidArgument("resample: target grid must be at least as fine");
    if (m == n) return RealField(fine, f.values);
    auto a = spectrum(f);
    std::vector<std::complex<double>> b(static_cast<std::size_t>(m), {0.0, 0.0});
    for (int j = 0; j < n; ++j) {
        const int mode = (j <= n / 2) ? j : j - n;
        if (mode == n / 2) { // split Nyquist
            b[static_cast<std::size_t>(n / 2)] += 0.5 * a[static_cast<std::size_t>(j)];
            b[static_cast<std::size_t>(m - n / 2)] += 0.5 * a[static_cast<std::size_t>(j)];
        } else {
            const int idx = (mode >= 0) ? mode : mode + m;
            b[static_cast<std::size_t>(idx)] = a[static_cast<std::size_t>(j)];
        }
    }
    return synthesize(fine, std::move(b));
}

/// f(x - s) through the spectral phase shift; the Nyquist mode is carried
/// with cos(k s) to keep the result real.
inline RealField shift_field(const RealField& f, double s) {
    const int n = f.size();
    auto a = spectrum(f);
    for (int j = 0; j < n; ++j) {
        const double k = f.grid->wavenumbers[j];
        if (j == n / 2)
            a[static_cast<std::size_t>(j)] *= std::cos(k * s);
        else
            a[static_cast<std::size_t>(j)] *= std::exp(std::complex<double>(0.0, -k * s));
    }
    return synthesize(f.grid, std::move(a));
}

} // namespace beamwave
