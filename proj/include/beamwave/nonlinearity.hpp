#pragma once

// Nonlinearity families for the fourth-order models: polynomials
// F(r) = sum a_k r^k with non-negative coefficients, and the exponential
// (suspension-bridge) family with zeroth-order term e^phi - 1.  Also the
// potentials entering the linearized operators
//   L_-,+ = (d^4 + c^2 d^2 + 1) - V_-,+.

#include <cmath>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"

namespace beamwave {

enum class NonlinearityFamily { polynomial, exponential };

struct Nonlinearity {
    NonlinearityFamily family = NonlinearityFamily::polynomial;
    std::vector<double> coefficients; // a_1..a_N, polynomial family only

    static Nonlinearity polynomial(std::vector<double> a) {
        if (a.empty()) throw InvalidArgument("Nonlinearity: empty coefficient list");
        bool any_positive = false;
        for (double ak : a) {
            if (ak < 0.0) throw InvalidArgument("Nonlinearity: coefficients must be >= 0");
            if (ak > 0.0) any_positive = true;
        }
        if (!any_positive) throw InvalidArgument("Nonlinearity: all coefficients are zero");
        return Nonlinearity{NonlinearityFamily::polynomial, std::move(a)};
    }

    /// F(r) = r, the cubic model F(phi^2) phi = phi^3.
    static Nonlinearity cubic() { return polynomial({1.0}); }

    static Nonlinearity exponential() {
        return Nonlinearity{NonlinearityFamily::exponential, {}};
    }
};

namespace detail {
inline void require_polynomial(const Nonlinearity& nl, const char* who) {
    if (nl.family != NonlinearityFamily::polynomial)
        throw UnsupportedForFamily(std::string(who) + ": polynomial family only");
}
} // namespace detail

/// F(r) = sum_{k>=1} a_k r^k, evaluated by Horner's scheme.
inline double eval_F(const Nonlinearity& nl, double r) {
    detail::require_polynomial(nl, "eval_F");
    if (r < 0.0) throw InvalidArgument("eval_F: r must be >= 0");
    double acc = 0.0;
    for (auto it = nl.coefficients.rbegin(); it != nl.coefficients.rend(); ++it)
        acc = acc * r + *it;
    return r * acc;
}

/// F'(r) = sum k a_k r^{k-1}.
inline double eval_Fprime(const Nonlinearity& nl, double r) {
    detail::require_polynomial(nl, "eval_Fprime");
    if (r < 0.0) throw InvalidArgument("eval_Fprime: r must be >= 0");
    double acc = 0.0;
    const int N = static_cast<int>(nl.coefficients.size());
    for (int k = N; k >= 1; --k)
        acc = acc * r + k * nl.coefficients[static_cast<std::size_t>(k - 1)];
    return acc;
}

/// Antiderivative G(r) = sum a_k r^{k+1} / (k+1), G' = F, G(0) = 0.
inline double eval_G(const Nonlinearity& nl, double r) {
    detail::require_polynomial(nl, "eval_G");
    if (r < 0.0) throw InvalidArgument("eval_G: r must be >= 0");
    double acc = 0.0;
    const int N = static_cast<int>(nl.coefficients.size());
    for (int k = N; k >= 1; --k)
        acc = acc * r + nl.coefficients[static_cast<std::size_t>(k - 1)] / (k + 1);
    return r * r * acc;
}

/// Zeroth-order part of the profile equation: phi - gamma F(phi^2) phi for
/// polynomial families, e^phi - 1 for the exponential family (gamma unused).
inline RealField profile_nonlinear_term(const Nonlinearity& nl, double gamma, const RealField& phi) {
    require_finite(phi, "profile_nonlinear_term");
    RealField out = phi;
    if (nl.family == NonlinearityFamily::polynomial) {
        for (int i = 0; i < phi.size(); ++i) {
            const double p = phi[i];
            out[i] = p - gamma * eval_F(nl, p * p) * p;
        }
    } else {
        for (int i = 0; i < phi.size(); ++i) out[i] = std::expm1(phi[i]);
    }
    return out;
}

struct LinearizationPotentials {
    std::optional<RealField> v_minus; // absent for the exponential family
    RealField v_plus;
};

/// Potentials V_-,+ with L_-,+ = (d^4 + c^2 d^2 + 1) - V_-,+:
///   polynomial:  V_- = gamma F(phi^2),  V_+ = gamma F(phi^2) + 2 gamma F'(phi^2) phi^2
///   exponential: V_+ = 1 - e^phi (so L_+ = d^4 + c^2 d^2 + e^phi), V_- absent.
inline LinearizationPotentials linearization_potentials(const Nonlinearity& nl, double gamma,
                                                        const RealField& phi) {
    require_finite(phi, "linearization_potentials");
    if (nl.family == NonlinearityFamily::polynomial) {
        RealField vm = phi, vp = phi;
        for (int i = 0; i < phi.size(); ++i) {
            const double r = phi[i] * phi[i];
            const double F = eval_F(nl, r);
            const double Fp = eval_Fprime(nl, r);
            vm[i] = gamma * F;
            vp[i] = gamma * F + 2.0 * gamma * Fp * r;
        }
        return {std::move(vm), std::move(vp)};
    }
    RealField vp = phi;
    for (int i = 0; i < phi.size(); ++i) vp[i] = -std::expm1(phi[i]);
    return {std::nullopt, std::move(vp)};
}

} // namespace beamwave
