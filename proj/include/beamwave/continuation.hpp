#pragma once

// Pseudo-arclength continuation of traveling-wave branches in wavespeed c
// (beam families, with mu = c^2) or frequency omega (NLS).  The augmented
// system {profile equation, arclength normalization} is corrected by a
// bordered Newton solve in even-reduced coordinates; the even restriction is
// the phase condition, so the translational kernel never enters the solve.
//
// Predictors are secant-based after an initial natural-parameter step; the
// step size halves when the corrector works hard and doubles when it cruises.

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <optional>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "profile.hpp"
#include "spectral.hpp"
#include "stability.hpp"

namespace beamwave {

enum class ContinuationParameter { wavespeed, frequency };

struct BranchPoint {
    double parameter = 0.0;
    TravelingWave wave;
    double diag_norm = 0.0;     // ||phi'||_L2^2
    double diag_momentum = 0.0; // c ||phi'||^2 (beam) or ||phi||^2 (NLS)
    std::optional<double> vk_value;
    std::optional<double> max_re_lambda;
};

enum class BranchTermination { ReachedEnd, StepFailure, ParameterBound };

struct ContinuationCurve {
    std::vector<BranchPoint> points;
    int direction = +1;
    BranchTermination termination = BranchTermination::ReachedEnd;
    ContinuationParameter parameter_kind = ContinuationParameter::wavespeed;
};

struct ContinuationControls {
    double ds_min = 1e-4;
    double ds_max = 0.05;
    int max_corrector = 12;
    int halve_threshold = 8;  // corrector iterations that trigger halving
    int double_threshold = 3; // fewer iterations than this doubles the step
    double residual_tol = 1e-10;
    int max_points = 4000;
};

namespace detail {

/// Orthonormal basis of the even subspace: node 0 (x = -L) and node n/2
/// (x = 0) are fixed; node j pairs with n - j.
struct EvenReduction {
    GridPtr grid;
    int n = 0, m = 0;
    Eigen::MatrixXd E2, E4; // reduced spectral derivative matrices

    explicit EvenReduction(const GridPtr& g) : grid(g), n(g->n_points), m(g->n_points / 2 + 1) {
        Eigen::MatrixXd D2 = differentiation_matrix(g, 2);
        Eigen::MatrixXd D4 = differentiation_matrix(g, 4);
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, m);
        const double s = 1.0 / std::sqrt(2.0);
        B(0, 0) = 1.0;
        for (int j = 1; j < n / 2; ++j) {
            B(j, j) = s;
            B(n - j, j) = s;
        }
        B(n / 2, n / 2) = 1.0;
        E2 = B.transpose() * D2 * B;
        E4 = B.transpose() * D4 * B;
    }

    Eigen::VectorXd reduce(const RealField& f) const {
        Eigen::VectorXd y(m);
        y[0] = f[0];
        const double s = std::sqrt(2.0);
        for (int j = 1; j < n / 2; ++j) y[j] = s * 0.5 * (f[j] + f[n - j]);
        y[n / 2] = f[n / 2];
        return y;
    }

    RealField expand(const Eigen::VectorXd& y) const {
        RealField f = zero_field(grid);
        f[0] = y[0];
        const double s = 1.0 / std::sqrt(2.0);
        for (int j = 1; j < n / 2; ++j) {
            f[j] = s * y[j];
            f[n - j] = s * y[j];
        }
        f[n / 2] = y[n / 2];
        return f;
    }

    /// B^T diag(d) B is diagonal thanks to the disjoint column supports.
    Eigen::VectorXd reduce_diagonal(const RealField& d) const {
        Eigen::VectorXd out(m);
        out[0] = d[0];
        for (int j = 1; j < n / 2; ++j) out[j] = 0.5 * (d[j] + d[n - j]);
        out[n / 2] = d[n / 2];
        return out;
    }
};

inline void apply_parameter(ProfileEquation& eq, ContinuationParameter kind, double p) {
    if (kind == ContinuationParameter::wavespeed)
        eq.mu = p * p;
    else
        eq.omega = p;
}

} // namespace detail

/// Traces the branch from a converged wave toward target_parameter.
inline ContinuationCurve extend_branch(const TravelingWave& start, double target_parameter,
                                       double ds, const ContinuationControls& ctl = {}) {
    if (!(ds > 0.0)) throw InvalidArgument("extend_branch: ds must be positive");
    const GridPtr& g = start.profile.grid;
    const ContinuationParameter kind = start.equation.family == EquationFamily::nls
                                           ? ContinuationParameter::frequency
                                           : ContinuationParameter::wavespeed;

    ContinuationCurve curve;
    curve.parameter_kind = kind;
    const double p0 =
        kind == ContinuationParameter::wavespeed ? start.equation.wavespeed() : start.equation.omega;
    curve.direction = (target_parameter >= p0) ? +1 : -1;

    auto make_point = [&](const TravelingWave& w, double p) {
        BranchPoint bp;
        bp.parameter = p;
        bp.wave = w;
        bp.diag_norm = l2_norm_sq(differentiate(w.profile, 1));
        bp.diag_momentum = kind == ContinuationParameter::wavespeed ? p * bp.diag_norm
                                                                    : l2_norm_sq(w.profile);
        return bp;
    };
    curve.points.push_back(make_point(start, p0));
    if (target_parameter == p0) return curve;

    detail::EvenReduction red(g);
    const double h = g->spacing;
    const int m = red.m;

    ProfileEquation eq = start.equation;

    // natural-parameter solve, used for the first tangent and the final clip
    auto natural_solve = [&](const RealField& seed, double p) {
        detail::apply_parameter(eq, kind, p);
        return newton_cg_solve(seed, eq, ctl.residual_tol);
    };

    const double dir = curve.direction;
    double p1 = p0 + dir * std::min({ds, 0.01, std::abs(target_parameter - p0)});
    TravelingWave w1;
    try {
        w1 = natural_solve(curve.points.back().wave.profile, p1);
    } catch (const Error&) {
        curve.termination = BranchTermination::StepFailure;
        return curve;
    }
    curve.points.push_back(make_point(w1, p1));
    if (dir * (p1 - target_parameter) >= 0.0) {
        curve.termination = BranchTermination::ReachedEnd;
        return curve;
    }

    // secant tangent state
    Eigen::VectorXd y_prev = red.reduce(curve.points[curve.points.size() - 2].wave.profile);
    Eigen::VectorXd y_cur = red.reduce(curve.points.back().wave.profile);
    double p_prev = curve.points[curve.points.size() - 2].parameter;
    double p_cur = curve.points.back().parameter;

    double step = ds;
    while (true) {
        // unit tangent in the (relative L2 field, parameter) metric; the
        // relative weight keeps steps meaningful on branches whose field
        // norm grows by orders of magnitude (the exponential family)
        const double wf = 1.0 / std::max(1.0, h * y_cur.squaredNorm());
        Eigen::VectorXd ty = y_cur - y_prev;
        double tp = p_cur - p_prev;
        const double tnorm = std::sqrt(wf * h * ty.squaredNorm() + tp * tp);
        ty /= tnorm;
        tp /= tnorm;

        bool accepted = false;
        while (!accepted) {
            // predictor
            Eigen::VectorXd y = y_cur + step * ty;
            double p = p_cur + step * tp;

            // corrector: bordered Newton on {reduced residual, normalization}
            int iter = 0;
            bool converged = false;
            for (; iter < ctl.max_corrector; ++iter) {
                detail::apply_parameter(eq, kind, p);
                RealField phi = red.expand(y);
                RealField R = eq.residual(phi);
                const double res_sup = sup_norm(R);
                const double norm_res =
                    wf * h * ty.dot(y - (y_cur + step * ty)) + tp * (p - (p_cur + step * tp));
                if (res_sup < ctl.residual_tol && std::abs(norm_res) < 1e-9 * (1.0 + step)) {
                    converged = true;
                    break;
                }
                Eigen::VectorXd Rr = red.reduce(R);
                RealField pot = eq.jacobian_potential(phi);
                Eigen::MatrixXd J = eq.alpha * red.E4 + eq.mu * red.E2;
                J.diagonal() += red.reduce_diagonal(pot);
                Eigen::VectorXd Rp;
                if (kind == ContinuationParameter::wavespeed)
                    Rp = 2.0 * p * (red.E2 * y);
                else
                    Rp = y;
                Eigen::MatrixXd A(m + 1, m + 1);
                A.topLeftCorner(m, m) = J;
                A.topRightCorner(m, 1) = Rp;
                A.bottomLeftCorner(1, m) = wf * h * ty.transpose();
                A(m, m) = tp;
                Eigen::VectorXd rhs(m + 1);
                rhs.head(m) = -Rr;
                rhs[m] = -norm_res;
                Eigen::VectorXd delta = A.partialPivLu().solve(rhs);
                if (!delta.allFinite()) break;
                y += delta.head(m);
                p += delta[m];
            }

            if (converged) {
                detail::apply_parameter(eq, kind, p);
                RealField phi = red.expand(y);
                TravelingWave w;
                try {
                    w = newton_cg_solve(phi, eq, ctl.residual_tol, {2});
                } catch (const Error&) {
                    converged = false;
                }
                if (converged) {
                    y_prev = y_cur;
                    p_prev = p_cur;
                    y_cur = red.reduce(w.profile);
                    p_cur = p;
                    curve.points.push_back(make_point(w, p));
                    accepted = true;
                    if (iter + 1 < ctl.double_threshold) step = std::min(2.0 * step, ctl.ds_max);
                    if (iter + 1 > ctl.halve_threshold) step = std::max(0.5 * step, ctl.ds_min);
                    break;
                }
            }
            if (step <= ctl.ds_min * (1.0 + 1e-12)) {
                curve.termination = BranchTermination::StepFailure;
                return curve;
            }
            step = std::max(0.5 * step, ctl.ds_min);
        }

        // existence window guard for the beam families
        if (kind == ContinuationParameter::wavespeed && p_cur >= std::sqrt(2.0) - 1e-6) {
            curve.termination = BranchTermination::ParameterBound;
            return curve;
        }

        if (dir * (p_cur - target_parameter) >= 0.0) {
            curve.termination = BranchTermination::ReachedEnd;
            return curve;
        }
        if (static_cast<int>(curve.points.size()) >= ctl.max_points) {
            curve.termination = BranchTermination::StepFailure;
            return curve;
        }

        // clip the final step onto the target parameter
        if (dir * (p_cur + step * tp - target_parameter) > 0.0) {
            try {
                TravelingWave w = natural_solve(curve.points.back().wave.profile, target_parameter);
                curve.points.push_back(make_point(w, target_parameter));
                curve.termination = BranchTermination::ReachedEnd;
            } catch (const Error&) {
                curve.termination = BranchTermination::StepFailure;
            }
            return curve;
        }
    }
}

// ---- per-point stability diagnostics -------------------------------------------

struct DiagnosticsRow {
    double parameter = 0.0;
    double diag_momentum = 0.0;
    std::optional<double> vk_value;
    std::optional<double> max_re_lambda;
    IndexCounts counts;
    int n_energy = 0;
    int n_d = 0;
    bool identity_ok = false;
    bool degenerate = false; // VK solve hit a degenerate kernel
};

struct BranchTable {
    std::vector<DiagnosticsRow> rows;
};

struct DiagnosticsOptions {
    StabilityOptions stability;
    int threads = 2;
};

/// Fills vk_value and max_re_lambda for every point of the curve; points with
/// a degenerate L_+ kernel (the branch fold) keep both diagnostics absent.
inline BranchTable branch_diagnostics(ContinuationCurve& curve,
                                      const DiagnosticsOptions& opts = {}) {
    if (curve.points.empty()) throw InvalidArgument("branch_diagnostics: empty curve");
    BranchTable table;
    table.rows.resize(curve.points.size());
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= curve.points.size()) return;
            BranchPoint& bp = curve.points[i];
            DiagnosticsRow row;
            row.parameter = bp.parameter;
            row.diag_momentum = bp.diag_momentum;
            try {
                SpectrumReport rep = eigen_linearization(bp.wave, opts.stability);
                row.vk_value = rep.vk_value;
                row.max_re_lambda = rep.max_re;
                row.counts = rep.counts;
                row.n_energy = rep.n_energy;
                row.n_d = rep.n_d;
                row.identity_ok = rep.index_identity_ok;
                bp.vk_value = rep.vk_value;
                bp.max_re_lambda = rep.max_re;
            } catch (const DegenerateKernel&) {
                row.degenerate = true;
            }
            table.rows[i] = std::move(row);
        }
    };
    const int nthreads = std::max(1, opts.threads);
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    return table;
}

// ---- stability transition -------------------------------------------------------

struct TransitionEstimate {
    double c_star_argmax = 0.0;                // vertex of c ||phi_c'||^2
    std::optional<double> c_star_crossing;     // zero crossing of max Re lambda
};

/// Locates the parameter where the branch momentum c ||phi'||^2 attains its
/// interior maximum (quadratic interpolation through the three bracketing
/// points), cross-checked against the zero crossing of max Re lambda when the
/// diagnostics are available.
inline TransitionEstimate locate_transition(const ContinuationCurve& curve,
                                            double crossing_threshold = 1e-4) {
    std::vector<const BranchPoint*> pts;
    for (const auto& p : curve.points) pts.push_back(&p);
    std::sort(pts.begin(), pts.end(),
              [](const BranchPoint* a, const BranchPoint* b) { return a->parameter < b->parameter; });
    const int n = static_cast<int>(pts.size());
    int arg = -1;
    for (int i = 1; i + 1 < n; ++i) {
        if (pts[static_cast<std::size_t>(i)]->diag_momentum >=
                pts[static_cast<std::size_t>(i - 1)]->diag_momentum &&
            pts[static_cast<std::size_t>(i)]->diag_momentum >=
                pts[static_cast<std::size_t>(i + 1)]->diag_momentum) {
            if (arg < 0 || pts[static_cast<std::size_t>(i)]->diag_momentum >
                               pts[static_cast<std::size_t>(arg)]->diag_momentum)
                arg = i;
        }
    }
    if (arg < 0)
        throw NoTransitionInRange("locate_transition: no interior maximum of the momentum diagnostic");

    const double x0 = pts[static_cast<std::size_t>(arg - 1)]->parameter;
    const double x1 = pts[static_cast<std::size_t>(arg)]->parameter;
    const double x2 = pts[static_cast<std::size_t>(arg + 1)]->parameter;
    const double g0 = pts[static_cast<std::size_t>(arg - 1)]->diag_momentum;
    const double g1 = pts[static_cast<std::size_t>(arg)]->diag_momentum;
    const double g2 = pts[static_cast<std::size_t>(arg + 1)]->diag_momentum;
    // vertex of the quadratic through three (nonuniform) points
    const double d1 = (g1 - g0) / (x1 - x0);
    const double d2 = (g2 - g1) / (x2 - x1);
    const double second = (d2 - d1) / (0.5 * (x2 - x0));
    TransitionEstimate est;
    est.c_star_argmax = 0.5 * (x0 + x1) - d1 / second;

    // crossing of max Re lambda: the real pair obeys lambda^2 ~ A (c* - c), so
    // interpolate lambda^2 linearly through the last two unstable points
    const BranchPoint* a = nullptr;
    const BranchPoint* b = nullptr;
    for (int i = 0; i + 1 < n; ++i) {
        const auto& cur = *pts[static_cast<std::size_t>(i)];
        const auto& nxt = *pts[static_cast<std::size_t>(i + 1)];
        if (cur.max_re_lambda && nxt.max_re_lambda && *cur.max_re_lambda > crossing_threshold &&
            *nxt.max_re_lambda <= crossing_threshold) {
            b = &cur;
            a = (i > 0 && pts[static_cast<std::size_t>(i - 1)]->max_re_lambda &&
                 *pts[static_cast<std::size_t>(i - 1)]->max_re_lambda > crossing_threshold)
                    ? pts[static_cast<std::size_t>(i - 1)]
                    : nullptr;
        }
    }
    if (a && b) {
        const double la = *a->max_re_lambda, lb = *b->max_re_lambda;
        const double denom = la * la - lb * lb;
        if (denom > 0.0)
            est.c_star_crossing =
                b->parameter + lb * lb * (b->parameter - a->parameter) / denom;
    }
    return est;
}

} // namespace beamwave
