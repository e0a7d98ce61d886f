#pragma once

// Run configuration, pipeline orchestration, and deterministic artifact
// emission.  Configs are strict JSON (unknown keys rejected); CSV artifacts
// are written with 17 significant digits, '.' decimal separator and '\n'
// line endings, so identical configs produce byte-identical files.
//
// Exit codes: 0 success, 2 configuration error, 3 solver failure,
// 4 eigen/index/verification mismatch.

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "continuation.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "profile.hpp"
#include "stability.hpp"

namespace beamwave {

using json = nlohmann::json;

// ---- configuration ---------------------------------------------------------------

enum class Command { solve, branch, stability, evolve, kernel, variational, nls_branch };

inline Command parse_command(const std::string& s) {
    if (s == "solve") return Command::solve;
    if (s == "branch") return Command::branch;
    if (s == "stability") return Command::stability;
    if (s == "evolve") return Command::evolve;
    if (s == "kernel") return Command::kernel;
    if (s == "variational") return Command::variational;
    if (s == "nls-branch") return Command::nls_branch;
    throw ConfigError("unknown command '" + s + "'");
}

inline std::string command_name(Command c) {
    switch (c) {
        case Command::solve: return "solve";
        case Command::branch: return "branch";
        case Command::stability: return "stability";
        case Command::evolve: return "evolve";
        case Command::kernel: return "kernel";
        case Command::variational: return "variational";
        default: return "nls-branch";
    }
}

struct RunConfig {
    Command command = Command::solve;
    std::string equation = "beam-poly"; // beam-poly | beam-exp | nls
    int n_points = 1024;
    double half_length = 12.0 * M_PI;
    // family parameters
    double c = 1.0;
    double gamma = 1.0;
    std::vector<double> coefficients{1.0};
    double mu = 1.0;
    double omega = 1.0;
    double lambda = 1.0; // variational constraint level
    // tolerances
    double tol_newton = 5e-11;
    double tol_eigen = 1e-4;
    double tol_continuation = 1e-10;
    double tol_variational = 1e-8;
    double tol_inner = 1e-12;
    // continuation window
    double param_start = 1.0;
    double param_end = 1.4;
    double ds_min = 1e-4;
    double ds_max = 0.05;
    bool with_spectrum = true;
    // evolution
    double T = 10.0;
    double dt = 1e-3;
    double epsilon = 1e-3;
    int mode_index = 0;
    int sample_every = 10;

    std::string output_dir = "beamwave_out";
    bool verify = false;

    Nonlinearity nonlinearity() const {
        return equation == "beam-exp" ? Nonlinearity::exponential()
                                      : Nonlinearity::polynomial(coefficients);
    }
    ProfileEquation profile_equation() const {
        if (equation == "nls") return nls_equation(NlsParameters(mu, omega));
        return beam_equation(BeamParameters(c, gamma, nonlinearity()));
    }
};

namespace detail {

inline void reject_unknown(const json& j, const std::vector<std::string>& known,
                           const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const auto& k : known)
            if (it.key() == k) ok = true;
        if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

template <class T>
void fetch(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(std::string("field '") + key + "' has the wrong type");
        }
    }
}

} // namespace detail

inline RunConfig parse_config(const json& j, std::optional<Command> cli_command = std::nullopt) {
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    detail::reject_unknown(j,
                           {"command", "equation", "grid", "parameters", "tolerances",
                            "continuation", "evolution", "output_dir"},
                           "config root");
    RunConfig cfg;
    if (j.contains("command")) {
        cfg.command = parse_command(j.at("command").get<std::string>());
        if (cli_command && *cli_command != cfg.command)
            throw ConfigError("config command '" + command_name(cfg.command) +
                              "' disagrees with the command line");
    } else if (cli_command) {
        cfg.command = *cli_command;
    }
    detail::fetch(j, "equation", cfg.equation);
    if (cfg.equation != "beam-poly" && cfg.equation != "beam-exp" && cfg.equation != "nls")
        throw ConfigError("equation must be beam-poly, beam-exp or nls");
    if (j.contains("grid")) {
        const json& g = j.at("grid");
        detail::reject_unknown(g, {"n_points", "half_length"}, "grid");
        detail::fetch(g, "n_points", cfg.n_points);
        detail::fetch(g, "half_length", cfg.half_length);
    }
    if (j.contains("parameters")) {
        const json& p = j.at("parameters");
        detail::reject_unknown(p, {"c", "gamma", "coefficients", "mu", "omega", "lambda"},
                               "parameters");
        detail::fetch(p, "c", cfg.c);
        detail::fetch(p, "gamma", cfg.gamma);
        detail::fetch(p, "coefficients", cfg.coefficients);
        detail::fetch(p, "mu", cfg.mu);
        detail::fetch(p, "omega", cfg.omega);
        detail::fetch(p, "lambda", cfg.lambda);
    }
    if (j.contains("tolerances")) {
        const json& t = j.at("tolerances");
        detail::reject_unknown(t, {"newton", "eigen", "continuation", "variational", "inner"},
                               "tolerances");
        detail::fetch(t, "newton", cfg.tol_newton);
        detail::fetch(t, "eigen", cfg.tol_eigen);
        detail::fetch(t, "continuation", cfg.tol_continuation);
        detail::fetch(t, "variational", cfg.tol_variational);
        detail::fetch(t, "inner", cfg.tol_inner);
    }
    if (j.contains("continuation")) {
        const json& ct = j.at("continuation");
        detail::reject_unknown(ct, {"param_start", "param_end", "ds_min", "ds_max", "with_spectrum"},
                               "continuation");
        detail::fetch(ct, "param_start", cfg.param_start);
        detail::fetch(ct, "param_end", cfg.param_end);
        detail::fetch(ct, "ds_min", cfg.ds_min);
        detail::fetch(ct, "ds_max", cfg.ds_max);
        detail::fetch(ct, "with_spectrum", cfg.with_spectrum);
    } else if (cfg.command == Command::branch || cfg.command == Command::nls_branch) {
        cfg.param_start = cfg.equation == "nls" ? cfg.omega : cfg.c;
        cfg.param_end = cfg.equation == "nls" ? 2.0 : 1.4;
    }
    if (j.contains("evolution")) {
        const json& e = j.at("evolution");
        detail::reject_unknown(e, {"T", "dt", "epsilon", "mode_index", "sample_every"},
                               "evolution");
        detail::fetch(e, "T", cfg.T);
        detail::fetch(e, "dt", cfg.dt);
        detail::fetch(e, "epsilon", cfg.epsilon);
        detail::fetch(e, "mode_index", cfg.mode_index);
        detail::fetch(e, "sample_every", cfg.sample_every);
    }
    detail::fetch(j, "output_dir", cfg.output_dir);

    // validation
    const double root2 = std::sqrt(2.0);
    if (cfg.n_points < 8 || cfg.n_points % 2 != 0)
        throw ConfigError("grid.n_points must be even and >= 8");
    if (!(cfg.half_length > 0.0)) throw ConfigError("grid.half_length must be positive");
    if (cfg.equation != "nls") {
        if (!(cfg.c >= 0.0 && cfg.c < root2))
            throw ConfigError("wavespeed must satisfy 0 <= c < sqrt(2) ~ 1.41421");
        if (!(cfg.gamma >= 0.0)) throw ConfigError("gamma must be non-negative");
    } else {
        if (!(cfg.mu < 2.0 * std::sqrt(cfg.omega)))
            throw ConfigError("nls parameters must satisfy mu < 2 sqrt(omega), i.e. omega > mu^2/4");
    }
    for (double t : {cfg.tol_newton, cfg.tol_eigen, cfg.tol_continuation, cfg.tol_variational,
                     cfg.tol_inner})
        if (!(t > 0.0)) throw ConfigError("tolerances must be positive");
    if (!(cfg.ds_min > 0.0) || !(cfg.ds_max >= cfg.ds_min))
        throw ConfigError("continuation ds bounds must satisfy 0 < ds_min <= ds_max");
    if (cfg.command == Command::branch || cfg.command == Command::nls_branch) {
        auto check_param = [&](double p, const char* which) {
            if (cfg.equation == "nls") {
                if (!(p > cfg.mu * cfg.mu / 4.0))
                    throw ConfigError(std::string(which) + " must exceed mu^2/4 for the nls family");
            } else if (!(p >= 0.0 && p < root2)) {
                throw ConfigError(std::string(which) + " must lie in [0, sqrt(2))");
            }
        };
        check_param(cfg.param_start, "continuation.param_start");
        check_param(cfg.param_end, "continuation.param_end");
    }
    if (!(cfg.lambda > 0.0)) throw ConfigError("lambda must be positive");
    if (!(cfg.T > 0.0) || !(cfg.dt > 0.0)) throw ConfigError("evolution T and dt must be positive");
    if (cfg.sample_every < 1) throw ConfigError("evolution.sample_every must be >= 1");
    if (cfg.mode_index < 0) throw ConfigError("evolution.mode_index must be >= 0");
    if (cfg.command == Command::nls_branch && cfg.equation != "nls")
        throw ConfigError("nls-branch requires equation = nls");
    if (cfg.command == Command::evolve && cfg.equation != "beam-poly")
        throw ConfigError("evolve supports the beam-poly family");
    return cfg;
}

inline RunConfig load_config(const std::string& path,
                             std::optional<Command> cli_command = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse failure: " + std::string(e.what()));
    }
    return parse_config(j, cli_command);
}

// ---- artifact writers --------------------------------------------------------------

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write artifact '" + p.string() + "'");
    out << text;
}

inline void write_csv(const std::filesystem::path& p, const std::string& header,
                      const std::vector<std::vector<double>>& rows) {
    std::string text = header + "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) text += ",";
            text += fmt17(row[i]);
        }
        text += "\n";
    }
    write_text(p, text);
}

inline void write_json(const std::filesystem::path& p, const json& j) {
    write_text(p, j.dump(2) + "\n");
}

} // namespace detail

// ---- run report ----------------------------------------------------------------------

struct RunReport {
    json config_echo;
    std::map<std::string, std::string> manifest; // file name -> role
    json headline;
    int exit_status = 0;
    std::string failure;
};

namespace detail {

inline json config_to_json(const RunConfig& cfg) {
    json j;
    j["command"] = command_name(cfg.command);
    j["equation"] = cfg.equation;
    j["grid"] = {{"n_points", cfg.n_points}, {"half_length", cfg.half_length}};
    j["parameters"] = {{"c", cfg.c},       {"gamma", cfg.gamma}, {"coefficients", cfg.coefficients},
                       {"mu", cfg.mu},     {"omega", cfg.omega}, {"lambda", cfg.lambda}};
    j["tolerances"] = {{"newton", cfg.tol_newton},
                       {"eigen", cfg.tol_eigen},
                       {"continuation", cfg.tol_continuation},
                       {"variational", cfg.tol_variational},
                       {"inner", cfg.tol_inner}};
    j["continuation"] = {{"param_start", cfg.param_start},
                         {"param_end", cfg.param_end},
                         {"ds_min", cfg.ds_min},
                         {"ds_max", cfg.ds_max},
                         {"with_spectrum", cfg.with_spectrum}};
    j["evolution"] = {{"T", cfg.T},
                      {"dt", cfg.dt},
                      {"epsilon", cfg.epsilon},
                      {"mode_index", cfg.mode_index},
                      {"sample_every", cfg.sample_every}};
    j["output_dir"] = cfg.output_dir;
    return j;
}

inline void write_wave_csv(const std::filesystem::path& dir, const RealField& phi,
                           RunReport& report, const char* role = "wave profile (x, phi)") {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < phi.size(); ++i)
        rows.push_back({phi.grid->nodes[i], phi[i]});
    write_csv(dir / "wave.csv", "x,phi", rows);
    report.manifest["wave.csv"] = role;
}

inline json spectrum_to_json(const SpectrumReport& rep) {
    json out;
    json evs = json::array();
    for (const auto& l : rep.eigenvalues) evs.push_back({l.real(), l.imag()});
    out["eigenvalues"] = evs;
    out["max_re"] = rep.max_re;
    out["morse_L_plus"] = rep.morse_L_plus;
    if (rep.morse_L_minus) out["morse_L_minus"] = *rep.morse_L_minus;
    out["vk"] = rep.vk_value;
    out["counts"] = {{"k_r", rep.counts.k_r},
                     {"k_c", rep.counts.k_c},
                     {"k_i_minus", rep.counts.k_i_minus}};
    out["n_L"] = rep.n_energy;
    out["n_D"] = rep.n_d;
    out["index_identity_ok"] = rep.index_identity_ok;
    json kc = json::array();
    for (const auto& l : rep.kernel_cluster) kc.push_back({l.real(), l.imag()});
    out["kernel_cluster"] = kc;
    json im = json::array();
    for (const auto& m : rep.internal_modes)
        im.push_back({{"lambda", {m.lambda.real(), m.lambda.imag()}},
                      {"tail_fraction", m.tail_fraction}});
    out["internal_modes"] = im;
    return out;
}

/// Panel Gauss-Legendre quadrature of the kernel integral, used by --verify.
inline double kernel_quadrature(double x, double c) {
    static const double gx[5] = {0.1488743389816312, 0.4333953941292472, 0.6794095682990244,
                                 0.8650633666889845, 0.9739065285171717};
    static const double gw[5] = {0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
                                 0.1494513491505806, 0.0666713443086881};
    auto f = [&](double xi) {
        const double xi2 = xi * xi;
        return std::cos(xi * x) / (xi2 * xi2 - c * c * xi2 + 1.0);
    };
    const double panel = std::min(0.5, M_PI / (8.0 * std::max(1.0, std::abs(x))));
    double total = 0.0;
    for (double a = 0.0; a < 600.0; a += panel) {
        const double b = std::min(a + panel, 600.0);
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        double acc = 0.0;
        for (int i = 0; i < 5; ++i)
            acc += gw[i] * (f(mid + half * gx[i]) + f(mid - half * gx[i]));
        total += half * acc;
    }
    return total / M_PI;
}

} // namespace detail

// ---- pipelines -------------------------------------------------------------------------

namespace detail {

inline TravelingWave solve_target(const RunConfig& cfg, const GridPtr& grid) {
    return homotopy_solve(default_homotopy_plan(cfg.profile_equation()), grid, cfg.tol_newton);
}

inline void run_solve(const RunConfig& cfg, const std::filesystem::path& dir, RunReport& report) {
    auto grid = make_grid(cfg.n_points, cfg.half_length);
    auto wave = solve_target(cfg, grid);
    write_wave_csv(dir, wave.profile, report);
    report.headline["residual_sup"] = wave.residual_sup;
    report.headline["amplitude"] = sup_norm(wave.profile);
    report.headline["centered"] = wave.centered;
    if (cfg.verify) {
        auto fine = make_grid(2 * cfg.n_points, cfg.half_length);
        auto refined = resample(wave.profile, fine);
        const double res = sup_norm(wave.equation.residual(refined));
        report.headline["verify_refined_residual"] = res;
        if (res > std::max(1e-8, 100.0 * cfg.tol_newton))
            throw IndexMismatch("verify: refined-grid residual " + fmt17(res));
    }
}

inline ContinuationCurve trace_window(const RunConfig& cfg, const GridPtr& grid) {
    RunConfig start_cfg = cfg;
    if (cfg.equation == "nls")
        start_cfg.omega = cfg.param_start;
    else
        start_cfg.c = cfg.param_start;
    auto wave = solve_target(start_cfg, grid);
    ContinuationControls ctl;
    ctl.ds_min = cfg.ds_min;
    ctl.ds_max = cfg.ds_max;
    ctl.residual_tol = cfg.tol_continuation;
    return extend_branch(wave, cfg.param_end, cfg.ds_max, ctl);
}

inline void run_branch(const RunConfig& cfg, const std::filesystem::path& dir, RunReport& report) {
    auto grid = make_grid(cfg.n_points, cfg.half_length);
    auto curve = trace_window(cfg, grid);
    const bool nls = cfg.equation == "nls";

    std::optional<BranchTable> table;
    if (cfg.with_spectrum) {
        DiagnosticsOptions opts;
        opts.stability.eigen_tol = cfg.tol_eigen;
        table = branch_diagnostics(curve, opts);
    } else {
        for (auto& bp : curve.points) {
            try {
                bp.vk_value = nls ? vk_nls(bp.wave) : vk_beam(bp.wave);
            } catch (const DegenerateKernel&) {
            }
        }
    }

    std::vector<std::vector<double>> rows;
    const double nan = std::nan("");
    for (const auto& bp : curve.points)
        rows.push_back({bp.parameter, bp.diag_norm, bp.diag_momentum,
                        bp.vk_value.value_or(nan), bp.max_re_lambda.value_or(nan)});
    const char* header = nls ? "omega,norm_phi_prime_sq,norm_phi_sq,vk,max_re_lambda"
                             : "c,norm_phi_prime_sq,c_norm_phi_prime_sq,vk,max_re_lambda";
    write_csv(dir / "branch.csv", header, rows);
    report.manifest["branch.csv"] = "branch diagnostics table";

    report.headline["points"] = curve.points.size();
    report.headline["termination"] = curve.termination == BranchTermination::ReachedEnd
                                         ? "reached_end"
                                         : curve.termination == BranchTermination::StepFailure
                                               ? "step_failure"
                                               : "parameter_bound";
    report.headline["param_last"] = curve.points.back().parameter;
    try {
        auto est = locate_transition(curve, cfg.tol_eigen);
        report.headline["c_star"] = est.c_star_argmax;
        if (est.c_star_crossing) report.headline["c_star_crossing"] = *est.c_star_crossing;
    } catch (const NoTransitionInRange&) {
        report.headline["c_star"] = nullptr;
    }
    if (table) {
        int bad = 0, degenerate = 0;
        for (const auto& r : table->rows) {
            if (r.degenerate)
                ++degenerate;
            else if (!r.identity_ok)
                ++bad;
        }
        report.headline["index_identity_failures"] = bad;
        report.headline["degenerate_points"] = degenerate;
        if (bad > 0) throw IndexMismatch("index identity failed at " + std::to_string(bad) + " points");
    }
    if (cfg.verify && cfg.with_spectrum) {
        for (const auto& bp : curve.points) {
            if (!bp.vk_value || !bp.max_re_lambda) continue;
            const bool unstable_vk = *bp.vk_value > 0.0;
            const bool unstable_eig = *bp.max_re_lambda > cfg.tol_eigen;
            if (unstable_vk != unstable_eig)
                throw IndexMismatch("verify: vk/eigen sign mismatch at parameter " +
                                    fmt17(bp.parameter));
        }
        report.headline["verify_vk_sign_consistent"] = true;
    }
}

inline void run_stability(const RunConfig& cfg, const std::filesystem::path& dir,
                          RunReport& report) {
    auto grid = make_grid(cfg.n_points, cfg.half_length);
    auto wave = solve_target(cfg, grid);
    StabilityOptions opts;
    opts.eigen_tol = cfg.tol_eigen;
    auto rep = eigen_linearization(wave, opts);
    auto verdict = index_report(rep); // throws IndexMismatch on violation
    json sj = spectrum_to_json(rep);
    sj["verdict"] = verdict.spectrally_stable ? "stable" : "unstable";
    write_json(dir / "spectrum.json", sj);
    report.manifest["spectrum.json"] = "linearization spectrum and index counts";
    write_wave_csv(dir, wave.profile, report);
    report.headline["max_re"] = rep.max_re;
    report.headline["vk"] = rep.vk_value;
    report.headline["morse_L_plus"] = rep.morse_L_plus;
    report.headline["verdict"] = verdict.spectrally_stable ? "stable" : "unstable";
    if (cfg.verify) {
        auto lp = assemble_operator(wave, OperatorTag::L_plus);
        Eigen::VectorXd p1(grid->n_points);
        RealField phi1 = differentiate(wave.profile, 1);
        for (int i = 0; i < grid->n_points; ++i) p1[i] = phi1[i];
        const double kres = (lp.entries * p1).norm() / p1.norm();
        report.headline["verify_kernel_residual_L_plus"] = kres;
        if (kres > 1e-7) throw IndexMismatch("verify: L_+ phi' residual " + fmt17(kres));
    }
}

inline void run_evolve(const RunConfig& cfg, const std::filesystem::path& dir, RunReport& report) {
    auto grid = make_grid(cfg.n_points, cfg.half_length);
    auto wave = solve_target(cfg, grid);
    const BeamParameters params(cfg.c, cfg.gamma, cfg.nonlinearity());

    EvolutionState initial = [&] {
        if (cfg.epsilon == 0.0)
            return perturbed_wave_initial(wave, zero_field(grid), zero_field(grid), 0.0, params);
        StabilityOptions opts;
        opts.eigen_tol = cfg.tol_eigen;
        opts.keep_modes = cfg.mode_index + 1;
        auto rep = eigen_linearization(wave, opts);
        const auto& mode = rep.modes.at(static_cast<std::size_t>(cfg.mode_index));
        RealField mv = mode.v_real, mw = mode.w_real;
        const double nrm = std::sqrt(l2_norm_sq(mv) + l2_norm_sq(mw));
        mv *= 1.0 / nrm;
        mw *= 1.0 / nrm;
        report.headline["mode_lambda"] = {mode.lambda.real(), mode.lambda.imag()};
        return perturbed_wave_initial(wave, mv, mw, cfg.epsilon, params);
    }();

    EvolveOptions opts;
    opts.irk.inner_tol = cfg.tol_inner;
    if (cfg.epsilon != 0.0) opts.epsilon = cfg.epsilon;
    auto summary = evolve(initial, cfg.T, cfg.dt, params, wave, cfg.sample_every, opts);

    std::vector<std::vector<double>> rows;
    for (const auto& s : summary.samples)
        rows.push_back({s.time, s.hamiltonian, s.sup_u, s.deviation.value_or(std::nan(""))});
    write_csv(dir / "evolution.csv", "t,hamiltonian,sup_u,deviation", rows);
    report.manifest["evolution.csv"] = "time series (t, H, sup|u|, deviation)";

    const char* status = summary.status == EvolutionStatus::Completed  ? "completed"
                         : summary.status == EvolutionStatus::Blowup ? "blowup"
                                                                       : "stage_failed";
    report.headline["status"] = status;
    const double H0 = summary.samples.front().hamiltonian;
    double drift = 0.0;
    for (const auto& s : summary.samples)
        drift = std::max(drift, std::abs(s.hamiltonian - H0) / std::max(1e-300, std::abs(H0)));
    if (summary.status == EvolutionStatus::Completed) report.headline["h_drift"] = drift;
    if (summary.growth_fit) {
        report.headline["growth_rate"] = summary.growth_fit->rate;
        report.headline["growth_window"] = {summary.growth_fit->t_lo, summary.growth_fit->t_hi};
    }
    if (cfg.verify && summary.status == EvolutionStatus::Completed) {
        report.headline["verify_h_drift"] = drift;
        if (drift > 1e-8) throw IndexMismatch("verify: Hamiltonian drift " + fmt17(drift));
    }
}

inline void run_kernel(const RunConfig& cfg, const std::filesystem::path& dir, RunReport& report) {
    const double c = cfg.c;
    const double x_max = 30.0;
    const double step = 0.05;
    std::vector<std::vector<double>> rows;
    std::vector<double> xs, ks;
    for (double x = 0.0; x <= x_max + 1e-12; x += step) {
        rows.push_back({x, green_kernel(x, c), green_kernel_derivative(x, c, 1),
                        green_kernel_derivative(x, c, 2), green_kernel_derivative(x, c, 3)});
        xs.push_back(x);
        ks.push_back(green_kernel(x, c));
    }
    write_csv(dir / "kernel.csv", "x,K,K1,K2,K3", rows);
    report.manifest["kernel.csv"] = "Green kernel and derivatives";
    auto fit = fit_exponential_envelope(xs, ks, 5.0, 25.0);
    report.headline["kernel_rate"] = fit.rate;
    report.headline["theoretical_rate"] = theoretical_decay_rate(c);
    report.headline["K0"] = green_kernel(0.0, c);
    if (cfg.verify) {
        double worst = 0.0;
        for (double x : {0.0, 1.0, 5.0, 12.0})
            worst = std::max(worst, std::abs(green_kernel(x, c) - kernel_quadrature(x, c)));
        report.headline["verify_quadrature_gap"] = worst;
        if (worst > 1e-7) throw IndexMismatch("verify: kernel quadrature gap " + fmt17(worst));
    }
}

inline void run_variational(const RunConfig& cfg, const std::filesystem::path& dir,
                            RunReport& report) {
    auto grid = make_grid(cfg.n_points, cfg.half_length);
    auto res = variational_maximize(cfg.lambda, cfg.c, cfg.nonlinearity(), grid,
                                    cfg.tol_variational);
    json vj;
    vj["lambda"] = res.lambda;
    vj["kappa"] = res.kappa;
    vj["kappa_alt"] = res.kappa_alt;
    vj["M_lambda"] = res.objective;
    vj["el_residual"] = res.el_residual;
    vj["iterations"] = res.iterations;
    write_json(dir / "variational.json", vj);
    report.manifest["variational.json"] = "constrained maximization summary";
    write_wave_csv(dir, res.maximizer, report, "variational maximizer (x, U)");
    report.headline["kappa"] = res.kappa;
    report.headline["M_lambda"] = res.objective;
    report.headline["el_residual"] = res.el_residual;
    if (cfg.verify) {
        const double rel = std::abs(res.kappa - res.kappa_alt) / std::abs(res.kappa);
        report.headline["verify_kappa_rel_gap"] = rel;
        if (rel > 1e-6) throw IndexMismatch("verify: multiplier estimates differ by " + fmt17(rel));
    }
}

} // namespace detail

/// Runs the configured pipeline, writing artifacts plus report.json into the
/// output directory.  Exceptions are mapped onto the exit-status contract.
inline RunReport run(const RunConfig& cfg) {
    RunReport report;
    report.config_echo = detail::config_to_json(cfg);
    std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    try {
        switch (cfg.command) {
            case Command::solve: detail::run_solve(cfg, dir, report); break;
            case Command::branch:
            case Command::nls_branch: detail::run_branch(cfg, dir, report); break;
            case Command::stability: detail::run_stability(cfg, dir, report); break;
            case Command::evolve: detail::run_evolve(cfg, dir, report); break;
            case Command::kernel: detail::run_kernel(cfg, dir, report); break;
            case Command::variational: detail::run_variational(cfg, dir, report); break;
        }
        report.exit_status = 0;
    } catch (const ConfigError& e) {
        report.exit_status = 2;
        report.failure = e.what();
    } catch (const EigenFailure& e) {
        report.exit_status = 4;
        report.failure = e.what();
    } catch (const IndexMismatch& e) {
        report.exit_status = 4;
        report.failure = e.what();
    } catch (const DegenerateKernel& e) {
        report.exit_status = 4;
        report.failure = e.what();
    } catch (const Error& e) {
        report.exit_status = 3;
        report.failure = e.what();
    }
    json rj;
    rj["command"] = command_name(cfg.command);
    rj["equation"] = cfg.equation;
    rj["config"] = report.config_echo;
    rj["headline"] = report.headline;
    json manifest;
    for (const auto& [file, role] : report.manifest) manifest[file] = role;
    rj["artifacts"] = manifest;
    rj["status"] = report.exit_status == 0 ? "ok" : "failed";
    if (!report.failure.empty()) rj["failure"] = report.failure;
    detail::write_json(dir / "report.json", rj);
    report.manifest["report.json"] = "run report";
    return report;
}

} // namespace beamwave
