#pragma once

// Spectral stability machinery: dense assembly of the linearized operators
// L_-,+, Morse indices, Fredholm solves orthogonal to the translational
// kernel, the Vakhitov-Kolokolov quantities, the eigenvalue problem of the
// full linearization, and the instability index count
//
//   k_r + 2 k_c + 2 k_i^- = n(L) - n(D).
//
// The beam linearization acts on (v, w) as [[0, I], [-L_+, 2c d/dx]]; the
// NLS linearization is [[0, -L_-], [L_+, 0]].

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "nonlinearity.hpp"
#include "profile.hpp"
#include "spectral.hpp"

namespace beamwave {

// ---- dense spectral differentiation matrices ---------------------------------

inline Eigen::MatrixXd differentiation_matrix(const GridPtr& grid, int order) {
    const int n = grid->n_points;
    Eigen::MatrixXd D(n, n);
    RealField unit = zero_field(grid);
    for (int j = 0; j < n; ++j) {
        unit[j] = 1.0;
        RealField col = differentiate(unit, order);
        for (int i = 0; i < n; ++i) D(i, j) = col[i];
        unit[j] = 0.0;
    }
    return D;
}

enum class OperatorTag { L_plus, L_minus };

struct LinearOperatorMatrix {
    Eigen::MatrixXd entries;
    OperatorTag which = OperatorTag::L_plus;
    ProfileEquation equation;
};

/// alpha D4 + mu D2 + omega I - diag(V_which), symmetrized as (A + A^T)/2.
inline LinearOperatorMatrix assemble_operator(const TravelingWave& wave, OperatorTag which) {
    const ProfileEquation& eq = wave.equation;
    if (eq.blend != 1.0)
        throw InvalidArgument("assemble_operator: wave must solve the target equation");
    if (which == OperatorTag::L_minus &&
        eq.nonlinearity.family == NonlinearityFamily::exponential)
        throw UnsupportedForFamily("assemble_operator: the exponential family has no L_minus");
    const GridPtr& g = wave.profile.grid;
    const int n = g->n_points;
    auto pots = linearization_potentials(eq.nonlinearity, eq.gamma, wave.profile);
    const RealField& V = (which == OperatorTag::L_plus) ? pots.v_plus : *pots.v_minus;
    Eigen::MatrixXd A = eq.alpha * differentiation_matrix(g, 4) + eq.mu * differentiation_matrix(g, 2);
    for (int i = 0; i < n; ++i) A(i, i) += eq.omega - V[i];
    Eigen::MatrixXd sym = 0.5 * (A + A.transpose());
    return LinearOperatorMatrix{std::move(sym), which, eq};
}

/// Scale of the operator, used to normalize tolerances; the diagonal carries
/// the k_max^4 weight of the spectral fourth derivative.
inline double symbol_scale(const LinearOperatorMatrix& op) {
    return std::max(1.0, op.entries.diagonal().cwiseAbs().maxCoeff());
}

// ---- symmetric eigensystem cache ---------------------------------------------

struct SymmetricSpectrum {
    Eigen::VectorXd eigenvalues; // ascending
    Eigen::MatrixXd eigenvectors;
};

inline SymmetricSpectrum symmetric_spectrum(const LinearOperatorMatrix& op) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.entries);
    if (es.info() != Eigen::Success)
        throw EigenFailure("symmetric_spectrum: eigensolver did not converge");
    return {es.eigenvalues(), es.eigenvectors()};
}

/// Number of eigenvalues below -tol.
inline int morse_index(const SymmetricSpectrum& spec, double tol) {
    int count = 0;
    for (int i = 0; i < spec.eigenvalues.size(); ++i)
        if (spec.eigenvalues[i] < -tol) ++count;
    return count;
}

inline int morse_index(const LinearOperatorMatrix& op, double tol) {
    return morse_index(symmetric_spectrum(op), tol);
}

inline double default_morse_tol(const LinearOperatorMatrix& op) {
    return 1e-8 * symbol_scale(op);
}

namespace detail {

constexpr double kKernelTol = 1e-6;
constexpr double kOrthoTol = 1e-8;

inline std::vector<int> kernel_indices(const SymmetricSpectrum& spec) {
    std::vector<int> idx;
    for (int i = 0; i < spec.eigenvalues.size(); ++i)
        if (std::abs(spec.eigenvalues[i]) < kKernelTol) idx.push_back(i);
    return idx;
}

} // namespace detail

/// Solves L_+ w = rhs in the orthogonal complement of the kernel direction.
/// rhs must already be orthogonal to the kernel (Fredholm condition); the
/// numerical kernel must be one-dimensional.
inline RealField solve_L_plus_constrained(const LinearOperatorMatrix& op,
                                          const SymmetricSpectrum& spec, const RealField& rhs,
                                          const RealField& kernel) {
    const double denom = l2_norm(rhs) * l2_norm(kernel);
    if (denom > 0.0 && std::abs(inner_product(rhs, kernel)) > detail::kOrthoTol * denom)
        throw FredholmViolation("solve_L_plus_constrained: rhs is not orthogonal to the kernel");
    auto kidx = detail::kernel_indices(spec);
    if (kidx.size() > 1)
        throw DegenerateKernel("solve_L_plus_constrained: numerical kernel dimension " +
                               std::to_string(kidx.size()));
    const int n = static_cast<int>(rhs.size());
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) b[i] = rhs[i];
    Eigen::VectorXd coeff = spec.eigenvectors.transpose() * b;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
        if (!kidx.empty() && i == kidx.front()) continue;
        x += (coeff[i] / spec.eigenvalues[i]) * spec.eigenvectors.col(i);
    }
    RealField w = zero_field(rhs.grid);
    for (int i = 0; i < n; ++i) w[i] = x[i];
    return w;
}

inline RealField solve_L_plus_constrained(const LinearOperatorMatrix& op, const RealField& rhs,
                                          const RealField& kernel) {
    return solve_L_plus_constrained(op, symmetric_spectrum(op), rhs, kernel);
}

// ---- Vakhitov-Kolokolov quantities --------------------------------------------

/// D_11 = 4 c^2 <L_+^{-1} phi'', phi''> + ||phi'||^2 for the beam families.
inline double vk_beam(const TravelingWave& wave) {
    const double c = wave.equation.wavespeed();
    RealField phi1 = differentiate(wave.profile, 1);
    RealField phi2 = differentiate(wave.profile, 2);
    auto op = assemble_operator(wave, OperatorTag::L_plus);
    auto spec = symmetric_spectrum(op);
    RealField w = solve_L_plus_constrained(op, spec, phi2, phi1);
    return 4.0 * c * c * inner_product(w, phi2) + l2_norm_sq(phi1);
}

/// <L_+^{-1} phi, phi> for the NLS family.
inline double vk_nls(const TravelingWave& wave) {
    RealField phi1 = differentiate(wave.profile, 1);
    auto op = assemble_operator(wave, OperatorTag::L_plus);
    auto spec = symmetric_spectrum(op);
    RealField w = solve_L_plus_constrained(op, spec, wave.profile, phi1);
    return inner_product(w, wave.profile);
}

// ---- full linearization spectrum ----------------------------------------------

struct InternalMode {
    std::complex<double> lambda;
    RealField v_real, v_imag; // first component of the eigenvector
    RealField w_real, w_imag; // second component
    double tail_fraction = 0.0; // eigenvector mass beyond |x| > 0.4 L
};

struct IndexCounts {
    int k_r = 0;
    int k_c = 0;
    int k_i_minus = 0;
};

struct SpectrumReport {
    std::vector<std::complex<double>> eigenvalues;
    double max_re = 0.0; // over the spectrum minus the generalized-kernel cluster
    int morse_L_plus = 0;
    std::optional<int> morse_L_minus; // absent for the exponential family
    double vk_value = 0.0;
    IndexCounts counts;
    int n_energy = 0; // n(L)
    int n_d = 0;      // n(D)
    bool index_identity_ok = false;
    RealField negative_eigenfunction; // Psi_0 of L_+
    std::vector<InternalMode> modes;  // leading modes, sorted by Re descending
    std::vector<std::complex<double>> kernel_cluster; // translational pair near 0
    // imaginary point eigenvalues with localized eigenvectors (gap modes)
    std::vector<InternalMode> internal_modes;
    double eigen_tol = 1e-4;
    EquationFamily family = EquationFamily::beam_poly;
};

struct StabilityOptions {
    double eigen_tol = 1e-4; // threshold for zero/positivity decisions on Re/Im
    int keep_modes = 4;
    // The translational kernel plus its generalized vector form a discrete
    // Jordan block; roundoff splits it into a +/- pair of size roughly
    // sqrt(kernel residual).  The two eigenvalues nearest the origin inside
    // this radius belong to that cluster, not to the point spectrum.
    double kernel_zone = 0.02;
    double localized_tail = 0.35; // tail-mass bound for internal-mode detection
};

namespace detail {

/// Deterministic normalization: unit discrete L2 norm over the (v, w) pair
/// and the largest-magnitude component of v rotated to the positive real axis.
inline InternalMode extract_mode(const GridPtr& g, std::complex<double> lambda,
                                 const Eigen::VectorXcd& z, int n) {
    Eigen::VectorXcd zz = z;
    int arg = 0;
    double best = 0.0;
    for (int i = 0; i < 2 * n; ++i)
        if (std::abs(zz[i]) > best) { best = std::abs(zz[i]); arg = i; }
    if (best > 0.0) zz *= std::abs(zz[arg]) / zz[arg];
    const double h = g->spacing;
    double norm_sq = 0.0;
    for (int i = 0; i < 2 * n; ++i) norm_sq += std::norm(zz[i]);
    norm_sq *= h;
    if (norm_sq > 0.0) zz /= std::sqrt(norm_sq);
    InternalMode m;
    m.lambda = lambda;
    m.v_real = zero_field(g);
    m.v_imag = zero_field(g);
    m.w_real = zero_field(g);
    m.w_imag = zero_field(g);
    for (int i = 0; i < n; ++i) {
        m.v_real[i] = zz[i].real();
        m.v_imag[i] = zz[i].imag();
        m.w_real[i] = zz[n + i].real();
        m.w_imag[i] = zz[n + i].imag();
    }
    return m;
}

} // namespace detail

/// Assembles and solves the eigenvalue problem of the full linearization,
/// classifies the point spectrum, and checks the index identity.
inline SpectrumReport eigen_linearization(const TravelingWave& wave,
                                          const StabilityOptions& opts = {}) {
    const ProfileEquation& eq = wave.equation;
    const GridPtr& g = wave.profile.grid;
    const int n = g->n_points;
    const bool is_nls = eq.family == EquationFamily::nls;

    auto op_plus = assemble_operator(wave, OperatorTag::L_plus);
    auto spec_plus = symmetric_spectrum(op_plus);
    const double morse_tol = default_morse_tol(op_plus);

    SpectrumReport rep;
    rep.family = eq.family;
    rep.eigen_tol = opts.eigen_tol;
    rep.morse_L_plus = morse_index(spec_plus, morse_tol);

    // Psi_0: eigenfunction of the lowest eigenvalue, sign-normalized
    rep.negative_eigenfunction = zero_field(g);
    {
        Eigen::VectorXd psi = spec_plus.eigenvectors.col(0);
        int arg = 0;
        psi.cwiseAbs().maxCoeff(&arg);
        if (psi[arg] < 0) psi = -psi;
        const double scale = 1.0 / std::sqrt(g->spacing * psi.squaredNorm());
        for (int i = 0; i < n; ++i) rep.negative_eigenfunction[i] = scale * psi[i];
    }

    std::optional<LinearOperatorMatrix> op_minus;
    std::optional<SymmetricSpectrum> spec_minus;
    if (eq.nonlinearity.family != NonlinearityFamily::exponential) {
        op_minus = assemble_operator(wave, OperatorTag::L_minus);
        spec_minus = symmetric_spectrum(*op_minus);
        rep.morse_L_minus = morse_index(*spec_minus, morse_tol);
    }

    // VK quantity
    RealField phi1 = differentiate(wave.profile, 1);
    if (is_nls) {
        RealField w = solve_L_plus_constrained(op_plus, spec_plus, wave.profile, phi1);
        rep.vk_value = inner_product(w, wave.profile);
    } else {
        RealField phi2 = differentiate(wave.profile, 2);
        RealField w = solve_L_plus_constrained(op_plus, spec_plus, phi2, phi1);
        const double c = eq.wavespeed();
        rep.vk_value = 4.0 * c * c * inner_product(w, phi2) + l2_norm_sq(phi1);
    }

    // Full 2n x 2n eigenvalue problem
    Eigen::MatrixXd M(2 * n, 2 * n);
    double theta = 1.0;
    if (!is_nls) {
        // [[0, I], [-L_+, 2c D1]], balanced by diag(theta I, I)
        const double c = eq.wavespeed();
        Eigen::MatrixXd D1 = differentiation_matrix(g, 1);
        theta = 1.0 / std::sqrt(std::max(1.0, op_plus.entries.cwiseAbs().maxCoeff()));
        M.setZero();
        M.block(0, n, n, n) = (1.0 / theta) * Eigen::MatrixXd::Identity(n, n);
        M.block(n, 0, n, n) = -theta * op_plus.entries;
        M.block(n, n, n, n) = 2.0 * c * D1;
    } else {
        M.setZero();
        M.block(0, n, n, n) = -op_minus->entries;
        M.block(n, 0, n, n) = op_plus.entries;
    }

    Eigen::EigenSolver<Eigen::MatrixXd> es(M, true);
    if (es.info() != Eigen::Success)
        throw EigenFailure("eigen_linearization: eigensolver did not converge");

    rep.eigenvalues.resize(static_cast<std::size_t>(2 * n));
    for (int i = 0; i < 2 * n; ++i) rep.eigenvalues[static_cast<std::size_t>(i)] = es.eigenvalues()[i];

    // the two eigenvalues nearest the origin within kernel_zone form the
    // discrete image of the translational generalized kernel
    std::vector<int> by_modulus(static_cast<std::size_t>(2 * n));
    for (int i = 0; i < 2 * n; ++i) by_modulus[static_cast<std::size_t>(i)] = i;
    std::sort(by_modulus.begin(), by_modulus.end(), [&](int a, int b) {
        return std::abs(es.eigenvalues()[a]) < std::abs(es.eigenvalues()[b]);
    });
    std::vector<bool> in_cluster(static_cast<std::size_t>(2 * n), false);
    for (int m = 0; m < 2 && m < 2 * n; ++m) {
        const int i = by_modulus[static_cast<std::size_t>(m)];
        if (std::abs(es.eigenvalues()[i]) < opts.kernel_zone) {
            in_cluster[static_cast<std::size_t>(i)] = true;
            rep.kernel_cluster.push_back(es.eigenvalues()[i]);
        }
    }

    auto tail_fraction_of = [&](const Eigen::VectorXcd& z) {
        double tail = 0.0, total = 0.0;
        for (int m = 0; m < n; ++m) {
            const double mass = std::norm(z[m]) + std::norm(z[n + m]);
            total += mass;
            if (std::abs(g->nodes[m]) > 0.4 * g->half_length) tail += mass;
        }
        return total > 0.0 ? tail / total : 1.0;
    };

    // classification and Krein signs
    const double tol = opts.eigen_tol;
    rep.max_re = 0.0;
    for (int i = 0; i < 2 * n; ++i) {
        if (in_cluster[static_cast<std::size_t>(i)]) continue;
        const std::complex<double> lam = es.eigenvalues()[i];
        rep.max_re = std::max(rep.max_re, lam.real());
        if (lam.real() > tol && std::abs(lam.imag()) <= tol) {
            ++rep.counts.k_r;
        } else if (lam.real() > tol && lam.imag() > tol) {
            ++rep.counts.k_c;
        } else if (std::abs(lam.real()) <= tol && lam.imag() > tol) {
            Eigen::VectorXcd z = es.eigenvectors().col(i);
            Eigen::VectorXcd v = z.head(n), w = z.tail(n);
            if (!is_nls) v *= theta; // undo balancing
            // Krein sign: <L z, z> on the invariant subspace of the pair
            double q;
            if (!is_nls)
                q = (v.adjoint() * (op_plus.entries * v)).value().real() + w.squaredNorm();
            else
                q = (v.adjoint() * (op_plus.entries * v)).value().real() +
                    (w.adjoint() * (op_minus->entries * w)).value().real();
            if (q < 0.0) ++rep.counts.k_i_minus;
            // localized imaginary modes are gap (internal) modes
            const double tail = tail_fraction_of(es.eigenvectors().col(i));
            if (tail < opts.localized_tail) {
                Eigen::VectorXcd zz = es.eigenvectors().col(i);
                if (!is_nls) zz.head(n) *= theta;
                InternalMode mode = detail::extract_mode(g, lam, zz, n);
                mode.tail_fraction = tail;
                rep.internal_modes.push_back(std::move(mode));
            }
        }
    }
    std::sort(rep.internal_modes.begin(), rep.internal_modes.end(),
              [](const InternalMode& a, const InternalMode& b) {
                  return a.lambda.imag() < b.lambda.imag();
              });

    rep.n_energy = rep.morse_L_plus + (is_nls ? *rep.morse_L_minus : 0);
    rep.n_d = rep.vk_value < 0.0 ? 1 : 0;
    rep.index_identity_ok =
        rep.counts.k_r + 2 * rep.counts.k_c + 2 * rep.counts.k_i_minus == rep.n_energy - rep.n_d;

    // leading modes, sorted by descending real part then ascending |Im|
    std::vector<int> order(static_cast<std::size_t>(2 * n));
    for (int i = 0; i < 2 * n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto la = es.eigenvalues()[a], lb = es.eigenvalues()[b];
        if (la.real() != lb.real()) return la.real() > lb.real();
        return std::abs(la.imag()) < std::abs(lb.imag());
    });
    const int keep = std::min(opts.keep_modes, 2 * n);
    for (int m = 0; m < keep; ++m) {
        const int i = order[static_cast<std::size_t>(m)];
        const double tail = tail_fraction_of(es.eigenvectors().col(i));
        Eigen::VectorXcd z = es.eigenvectors().col(i);
        if (!is_nls) z.head(n) *= theta;
        InternalMode mode = detail::extract_mode(g, es.eigenvalues()[i], z, n);
        mode.tail_fraction = tail;
        rep.modes.push_back(std::move(mode));
    }
    return rep;
}

// ---- verdict ------------------------------------------------------------------

struct IndexVerdict {
    bool spectrally_stable = false;
    IndexCounts counts;
    int n_energy = 0;
    int n_d = 0;
};

/// Checks the index identity and classifies stability (stable iff no real or
/// quadruple unstable spectrum).
inline IndexVerdict index_report(const SpectrumReport& rep) {
    if (!rep.index_identity_ok)
        throw IndexMismatch("index_report: k_r + 2 k_c + 2 k_i^- != n(L) - n(D); counts (" +
                            std::to_string(rep.counts.k_r) + ", " + std::to_string(rep.counts.k_c) +
                            ", " + std::to_string(rep.counts.k_i_minus) + ") vs n(L) = " +
                            std::to_string(rep.n_energy) + ", n(D) = " + std::to_string(rep.n_d));
    IndexVerdict v;
    v.spectrally_stable = (rep.counts.k_r == 0 && rep.counts.k_c == 0);
    v.counts = rep.counts;
    v.n_energy = rep.n_energy;
    v.n_d = rep.n_d;
    return v;
}

} // namespace beamwave
