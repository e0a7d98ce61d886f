#pragma once

// Traveling-wave profile solver.  The generalized profile equation
//
//   alpha phi'''' + mu phi'' + N(phi) = 0,
//   N(phi) = (1 - blend) * (omega phi - phi^3) + blend * N_target(phi),
//
// covers the beam equation (alpha = 1, mu = c^2, omega = 1), the fourth-order
// NLS profile equation (mu, omega free) and the exponential suspension-bridge
// model (N_target = e^phi - 1), and exposes the scalar knobs used by the
// homotopy: alpha, mu, omega and the nonlinearity blend.
//
// Solves are Newton outer iterations with conjugate-gradient inner solves of
// the symmetric linearization, preconditioned by the inverse of the
// constant-coefficient symbol.  Iterates are projected onto even fields,
// which removes the translational kernel phi' from the linearized systems.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "nonlinearity.hpp"
#include "spectral.hpp"

namespace beamwave {

enum class EquationFamily { beam_poly, beam_exp, nls };

struct BeamParameters {
    double wavespeed = 1.0;
    double gamma = 1.0;
    Nonlinearity nonlinearity = Nonlinearity::cubic();

    BeamParameters() = default;
    BeamParameters(double c, double g, Nonlinearity nl)
        : wavespeed(c), gamma(g), nonlinearity(std::move(nl)) {
        if (!(c >= 0.0 && c < std::sqrt(2.0)))
            throw InvalidArgument("BeamParameters: wavespeed must satisfy 0 <= c < sqrt(2)");
        if (!(g >= 0.0)) throw InvalidArgument("BeamParameters: gamma must be non-negative");
    }
};

struct NlsParameters {
    double mu = 1.0;
    double omega = 1.0;

    NlsParameters() = default;
    NlsParameters(double mu_, double omega_) : mu(mu_), omega(omega_) {
        if (!(mu < 2.0 * std::sqrt(omega)))
            throw InvalidArgument("NlsParameters: requires mu < 2 sqrt(omega)");
    }
};

struct ProfileEquation {
    double alpha = 1.0;
    double mu = 0.0;
    double omega = 1.0;
    double blend = 1.0; // 0: cubic base model, 1: target nonlinearity
    double gamma = 1.0;
    Nonlinearity nonlinearity = Nonlinearity::cubic();
    EquationFamily family = EquationFamily::beam_poly;

    double get(const std::string& name) const {
        if (name == "alpha") return alpha;
        if (name == "mu") return mu;
        if (name == "omega") return omega;
        if (name == "blend") return blend;
        throw InvalidArgument("ProfileEquation: unknown parameter '" + name + "'");
    }
    void set(const std::string& name, double value) {
        if (name == "alpha") alpha = value;
        else if (name == "mu") mu = value;
        else if (name == "omega") omega = value;
        else if (name == "blend") blend = value;
        else throw InvalidArgument("ProfileEquation: unknown parameter '" + name + "'");
    }

    /// Wavespeed for the beam families (mu = c^2).
    double wavespeed() const { return std::sqrt(std::max(0.0, mu)); }

    /// Zeroth-order term N(phi), evaluated pointwise.
    double nonlinear_term(double p) const {
        const double base = omega * p - p * p * p;
        double target;
        if (nonlinearity.family == NonlinearityFamily::polynomial)
            target = omega * p - gamma * eval_F(nonlinearity, p * p) * p;
        else
            target = std::expm1(p);
        return (1.0 - blend) * base + blend * target;
    }

    /// dN/dphi, the diagonal potential of the linearized operator.
    double nonlinear_derivative(double p) const {
        const double base = omega - 3.0 * p * p;
        double target;
        if (nonlinearity.family == NonlinearityFamily::polynomial) {
            const double r = p * p;
            target = omega - gamma * (eval_F(nonlinearity, r) + 2.0 * eval_Fprime(nonlinearity, r) * r);
        } else {
            target = std::exp(p);
        }
        return (1.0 - blend) * base + blend * target;
    }

    RealField residual(const RealField& phi) const {
        RealField r = apply_symbol(phi, alpha, mu, 0.0); // alpha D4 + mu D2
        for (int i = 0; i < phi.size(); ++i) r[i] += nonlinear_term(phi[i]);
        return r;
    }

    RealField jacobian_potential(const RealField& phi) const {
        RealField d = phi;
        for (int i = 0; i < phi.size(); ++i) d[i] = nonlinear_derivative(phi[i]);
        return d;
    }

    /// J psi = alpha psi'''' + mu psi'' + diag(dN/dphi) psi.
    RealField jacobian_apply(const RealField& potential, const RealField& psi) const {
        RealField r = apply_symbol(psi, alpha, mu, 0.0);
        for (int i = 0; i < psi.size(); ++i) r[i] += potential[i] * psi[i];
        return r;
    }

    /// Far-field constant-coefficient symbol, used as CG preconditioner.
    RealField precondition(const RealField& f) const {
        return invert_symbol(f, alpha, mu, omega);
    }

    double symbol_floor() const {
        return std::max(symbol_min_general(alpha, mu, omega), 0.0);
    }
};

inline ProfileEquation beam_equation(const BeamParameters& p) {
    ProfileEquation eq;
    eq.alpha = 1.0;
    eq.mu = p.wavespeed * p.wavespeed;
    eq.omega = 1.0;
    eq.blend = 1.0;
    eq.gamma = p.gamma;
    eq.nonlinearity = p.nonlinearity;
    eq.family = p.nonlinearity.family == NonlinearityFamily::exponential
                    ? EquationFamily::beam_exp
                    : EquationFamily::beam_poly;
    return eq;
}

inline ProfileEquation nls_equation(const NlsParameters& p) {
    ProfileEquation eq;
    eq.alpha = 1.0;
    eq.mu = p.mu;
    eq.omega = p.omega;
    eq.blend = 1.0;
    eq.gamma = 1.0;
    eq.nonlinearity = Nonlinearity::cubic();
    eq.family = EquationFamily::nls;
    return eq;
}

inline ProfileEquation chen_mckenna_equation(double c) {
    return beam_equation(BeamParameters(c, 1.0, Nonlinearity::exponential()));
}

// ---- converged traveling wave ------------------------------------------------

struct TravelingWave {
    RealField profile;
    ProfileEquation equation;
    double residual_sup = 0.0;
    bool centered = false;
};

/// sqrt(2 omega) sech(sqrt(omega) x): the solitary wave of the second-order
/// model -phi'' + omega phi - phi^3 = 0 used to seed the homotopy.
inline RealField seed_profile(const GridPtr& grid, double omega) {
    if (!(omega > 0.0)) throw InvalidArgument("seed_profile: omega must be positive");
    const double amp = std::sqrt(2.0 * omega);
    const double rate = std::sqrt(omega);
    return field_from_function(grid, [&](double x) { return amp / std::cosh(rate * x); });
}

namespace detail {

/// Preconditioned conjugate gradients for the Newton correction J delta = rhs.
/// J is symmetric but indefinite (the linearization carries one negative
/// direction), so CG runs on the symmetrized system  A w = rhs  with
/// A = J M^{-1} J, which is positive definite on the even subspace; the
/// correction is recovered as delta = M^{-1} J w.  M is the constant
/// coefficient symbol, so A is spectrally close to M itself and M serves as
/// the preconditioner.  The CG residual equals the residual of the original
/// linear system, which makes the relative stopping rule exact.
inline RealField newton_cg_correction(const ProfileEquation& eq, const RealField& potential,
                                      const RealField& rhs, double rel_tol, int max_iter) {
    // every direction is re-projected onto the even subspace: roundoff must not
    // excite the translational near-kernel phi', which A^{-1} would amplify
    auto apply_A = [&](const RealField& w) {
        return project_even(
            eq.jacobian_apply(potential, eq.precondition(eq.jacobian_apply(potential, w))));
    };
    RealField w = zero_field(rhs.grid);
    RealField r = project_even(rhs);
    RealField z = project_even(eq.precondition(r));
    RealField p = z;
    double rz = inner_product(r, z);
    const double target = rel_tol * l2_norm(rhs);
    for (int it = 0; it < max_iter; ++it) {
        if (l2_norm(r) <= target) break;
        RealField Ap = apply_A(p);
        const double pAp = inner_product(p, Ap);
        if (!(pAp > 0.0)) break; // numerically singular direction
        const double a = rz / pAp;
        w += a * p;
        r -= a * Ap;
        z = project_even(eq.precondition(r));
        const double rz_next = inner_product(r, z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    return project_even(eq.precondition(eq.jacobian_apply(potential, w)));
}

} // namespace detail

struct NewtonOptions {
    int max_outer = 50;
    int cg_max_iter = 500;
    double cg_rel_tol = 1e-3;
    int max_halvings = 20;
};

/// Threshold below which a converged profile counts as the zero solution.
inline double trivial_threshold(const ProfileEquation& eq) {
    return 1e-3 * std::sqrt(std::max(eq.symbol_floor(), 0.0));
}

inline TravelingWave newton_cg_solve(const RealField& seed, const ProfileEquation& eq, double tol,
                                     const NewtonOptions& opts = {}) {
    if (!(tol > 0.0)) throw InvalidArgument("newton_cg_solve: tol must be positive");
    require_finite(seed, "newton_cg_solve");
    RealField phi = project_even(seed);
    double res_sup = sup_norm(eq.residual(phi));
    for (int outer = 0; outer <= opts.max_outer; ++outer) {
        if (res_sup < tol) {
            if (sup_norm(phi) < trivial_threshold(eq))
                throw TrivialSolution("newton_cg_solve: converged to the zero solution");
            TravelingWave w;
            w.profile = phi;
            w.equation = eq;
            w.residual_sup = res_sup;
            int arg = 0;
            for (int i = 1; i < phi.size(); ++i)
                if (std::abs(phi[i]) > std::abs(phi[arg])) arg = i;
            w.centered = (arg == phi.size() / 2); // node at x = 0
            return w;
        }
        if (outer == opts.max_outer) break;
        RealField R = eq.residual(phi);
        RealField potential = eq.jacobian_potential(phi);
        RealField delta =
            detail::newton_cg_correction(eq, potential, -1.0 * R, opts.cg_rel_tol, opts.cg_max_iter);
        // globalization: halve the step until the residual decreases
        double step = 1.0;
        bool accepted = false;
        for (int h = 0; h <= opts.max_halvings; ++h) {
            RealField trial = project_even(phi + step * delta);
            const double trial_res = sup_norm(eq.residual(trial));
            if (trial_res < res_sup) {
                phi = trial;
                res_sup = trial_res;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.3e", res_sup);
            throw NoConvergence(std::string("newton_cg_solve: residual stagnated at ") + buf);
        }
    }
    throw NoConvergence("newton_cg_solve: no convergence within max_outer iterations");
}

// ---- homotopy ---------------------------------------------------------------

struct HomotopyStage {
    std::string parameter; // one of alpha, mu, omega, blend
    double start = 0.0;
    double end = 0.0;
    int steps = 1;
};

struct HomotopyPlan {
    ProfileEquation target;
    std::vector<HomotopyStage> stages;
    double seed_omega = 1.0;
    double seed_sign = 1.0;
};

/// sech-seeded plan: continue alpha 0 -> 1 at mu = -1 (where the seed solves
/// the second-order model), then mu -> target, then rotate the nonlinearity
/// into the target family when it differs from the cubic base model.
inline HomotopyPlan default_homotopy_plan(const ProfileEquation& target) {
    HomotopyPlan plan;
    plan.target = target;
    plan.seed_omega = target.omega;
    const bool exponential = target.nonlinearity.family == NonlinearityFamily::exponential;
    plan.seed_sign = exponential ? -1.0 : 1.0;
    plan.stages.push_back({"alpha", 0.0, target.alpha, 8});
    const bool cubic_target = !exponential && target.gamma == 1.0 &&
                              target.nonlinearity.coefficients == std::vector<double>{1.0};
    if (exponential) {
        // rotate the nonlinearity at c = 1.3, where the cubic and exponential
        // troughs are both moderate, then continue the wavespeed to the target
        const double mu_blend = 1.69;
        plan.stages.push_back({"mu", -1.0, mu_blend, 12});
        plan.stages.push_back({"blend", 0.0, 1.0, 80});
        if (target.mu != mu_blend)
            plan.stages.push_back({"mu", mu_blend, target.mu,
                                   std::max(8, static_cast<int>(std::ceil(std::abs(target.mu - mu_blend) / 0.05)))});
    } else {
        plan.stages.push_back(
            {"mu", -1.0, target.mu, std::max(8, static_cast<int>(std::ceil(std::abs(target.mu + 1.0) / 0.25)))});
        if (!cubic_target) plan.stages.push_back({"blend", 0.0, 1.0, 10});
    }
    return plan;
}

inline TravelingWave homotopy_solve(const HomotopyPlan& plan, const GridPtr& grid, double tol,
                                    const NewtonOptions& opts = {}) {
    if (plan.stages.empty()) throw InvalidArgument("homotopy_solve: empty plan");
    ProfileEquation eq = plan.target;
    // start every staged parameter at its first stage's start value
    for (auto it = plan.stages.rbegin(); it != plan.stages.rend(); ++it)
        eq.set(it->parameter, it->start);
    RealField phi = plan.seed_sign * seed_profile(grid, plan.seed_omega);
    TravelingWave wave;
    bool have_wave = false;
    for (std::size_t si = 0; si < plan.stages.size(); ++si) {
        const HomotopyStage& st = plan.stages[si];
        if (st.steps < 1) throw InvalidArgument("homotopy_solve: stage step count must be >= 1");
        if (std::abs(eq.get(st.parameter) - st.start) > 1e-12 * (1.0 + std::abs(st.start)))
            throw InvalidArgument("homotopy_solve: stage " + std::to_string(si) +
                                  " does not chain from the previous stage");
        for (int k = 1; k <= st.steps; ++k) {
            const double value = st.start + (st.end - st.start) * k / st.steps;
            eq.set(st.parameter, value);
            // intermediate solves only seed the next step; the requested
            // tolerance applies to the final solve
            const bool last = (si + 1 == plan.stages.size()) && (k == st.steps);
            const double stage_tol = last ? tol : std::max(tol, 1e-9);
            try {
                wave = newton_cg_solve(phi, eq, stage_tol, opts);
                have_wave = true;
            } catch (const Error& e) {
                throw HomotopyBroken("homotopy_solve: stage " + std::to_string(si) + " (" +
                                         st.parameter + " = " + std::to_string(value) +
                                         ") failed: " + e.what(),
                                     static_cast<int>(si),
                                     st.start + (st.end - st.start) * (k - 1) / st.steps);
            }
            phi = wave.profile;
        }
    }
    if (!have_wave) throw NoConvergence("homotopy_solve: no stages executed");
    return wave;
}

} // namespace beamwave
