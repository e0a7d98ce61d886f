#include <doctest.h>

#include <beamwave/io.hpp>

#include <filesystem>
#include <fstream>

using namespace beamwave;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("beamwave_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("config: minimal beam config gets defaults") {
    json j = {{"command", "solve"}, {"parameters", {{"c", 1.0}}}};
    auto cfg = parse_config(j);
    CHECK(cfg.command == Command::solve);
    CHECK(cfg.n_points == 1024);
    CHECK(cfg.half_length == doctest::Approx(12.0 * M_PI));
    CHECK(cfg.equation == "beam-poly");
    CHECK(cfg.c == 1.0);
    CHECK(cfg.tol_newton > 0.0);
}

TEST_CASE("config: window violations are named") {
    json j = {{"command", "solve"}, {"parameters", {{"c", 1.5}}}};
    CHECK_THROWS_WITH_AS(parse_config(j),
                         "wavespeed must satisfy 0 <= c < sqrt(2) ~ 1.41421", ConfigError);

    json n = {{"command", "solve"},
              {"equation", "nls"},
              {"parameters", {{"mu", 1.0}, {"omega", 0.2}}}};
    CHECK_THROWS_AS(parse_config(n), ConfigError);
}

TEST_CASE("config: unknown keys are rejected at every level") {
    json j = {{"command", "solve"}, {"mystery", 1}};
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    json j2 = {{"command", "solve"}, {"grid", {{"n_points", 64}, {"n_pointz", 64}}}};
    CHECK_THROWS_AS(parse_config(j2), ConfigError);
    json j3 = {{"command", "solve"}, {"parameters", {{"speed", 1.0}}}};
    CHECK_THROWS_AS(parse_config(j3), ConfigError);
}

TEST_CASE("config: command consistency with the command line") {
    json j = {{"command", "solve"}};
    CHECK_THROWS_AS(parse_config(j, Command::branch), ConfigError);
    auto cfg = parse_config(j, Command::solve);
    CHECK(cfg.command == Command::solve);
}

TEST_CASE("config: family guards") {
    json j = {{"command", "nls-branch"}, {"equation", "beam-poly"}};
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    json j2 = {{"command", "evolve"}, {"equation", "beam-exp"}};
    CHECK_THROWS_AS(parse_config(j2), ConfigError);
    json j3 = {{"command", "solve"}, {"equation", "kdv"}};
    CHECK_THROWS_AS(parse_config(j3), ConfigError);
}

TEST_CASE("kernel run emits deterministic artifacts") {
    auto dir1 = temp_dir("kernel1");
    auto dir2 = temp_dir("kernel2");
    json j = {{"command", "kernel"}, {"parameters", {{"c", 0.5}}}};
    auto cfg = parse_config(j);
    cfg.verify = true;

    cfg.output_dir = dir1.string();
    auto r1 = run(cfg);
    REQUIRE(r1.exit_status == 0);
    cfg.output_dir = dir2.string();
    auto r2 = run(cfg);
    REQUIRE(r2.exit_status == 0);

    CHECK(slurp(dir1 / "kernel.csv") == slurp(dir2 / "kernel.csv"));
    CHECK(fs::exists(dir1 / "report.json"));
    CHECK(r1.headline["kernel_rate"].get<double>() ==
          doctest::Approx(theoretical_decay_rate(0.5)).epsilon(0.02));

    // csv shape: header + one row per sample, 5 columns
    std::string csv = slurp(dir1 / "kernel.csv");
    CHECK(csv.substr(0, 12) == "x,K,K1,K2,K3");
    CHECK(csv.find("\r") == std::string::npos);
}

TEST_CASE("solve run emits wave.csv of the right shape, verify passes") {
    auto dir = temp_dir("solve");
    json j = {{"command", "solve"},
              {"grid", {{"n_points", 256}, {"half_length", 12.0 * M_PI}}},
              {"parameters", {{"c", 1.0}}},
              {"tolerances", {{"newton", 1e-11}}}};
    auto cfg = parse_config(j);
    cfg.verify = true;
    cfg.output_dir = dir.string();
    auto report = run(cfg);
    REQUIRE(report.exit_status == 0);
    CHECK(report.headline["residual_sup"].get<double>() < 1e-10);

    std::string csv = slurp(dir / "wave.csv");
    int lines = 0;
    for (char ch : csv)
        if (ch == '\n') ++lines;
    CHECK(lines == 257); // header + n_points rows

    auto rj = json::parse(slurp(dir / "report.json"));
    CHECK(rj["status"] == "ok");
    CHECK(rj["artifacts"].contains("wave.csv"));
}

TEST_CASE("solver failures map to exit status 3") {
    auto dir = temp_dir("fail3");
    json j = {{"command", "solve"},
              {"grid", {{"n_points", 64}, {"half_length", 5.0}}},
              {"parameters", {{"c", 1.0}}},
              {"tolerances", {{"newton", 1e-30}}}}; // unreachable tolerance
    auto cfg = parse_config(j);
    cfg.output_dir = dir.string();
    auto report = run(cfg);
    CHECK(report.exit_status == 3);
    auto rj = json::parse(slurp(dir / "report.json"));
    CHECK(rj["status"] == "failed");
}

TEST_CASE("variational run artifacts") {
    auto dir = temp_dir("vari");
    json j = {{"command", "variational"},
              {"grid", {{"n_points", 128}, {"half_length", 10.0 * M_PI}}},
              {"parameters", {{"c", 1.0}, {"lambda", 1.0}}},
              {"tolerances", {{"variational", 1e-8}}}};
    auto cfg = parse_config(j);
    cfg.verify = true;
    cfg.output_dir = dir.string();
    auto report = run(cfg);
    REQUIRE(report.exit_status == 0);
    auto vj = json::parse(slurp(dir / "variational.json"));
    CHECK(vj["el_residual"].get<double>() < 1e-5);
    CHECK(vj["lambda"] == 1.0);
    CHECK(vj.contains("kappa"));
    CHECK(vj.contains("M_lambda"));
}

TEST_CASE("stability run emits spectrum.json with counts and verdict") {
    auto dir = temp_dir("stab");
    json j = {{"command", "stability"},
              {"grid", {{"n_points", 256}, {"half_length", 12.0 * M_PI}}},
              {"parameters", {{"c", 1.0}}},
              {"tolerances", {{"newton", 1e-10}}}};
    auto cfg = parse_config(j);
    cfg.verify = true;
    cfg.output_dir = dir.string();
    auto report = run(cfg);
    REQUIRE(report.exit_status == 0);
    auto sj = json::parse(slurp(dir / "spectrum.json"));
    CHECK(sj["verdict"] == "unstable");
    CHECK(sj["counts"]["k_r"] == 1);
    CHECK(sj["index_identity_ok"] == true);
    CHECK(sj["morse_L_plus"] == 1);
    CHECK(sj["eigenvalues"].size() == 512); // 2n pairs of [re, im]
    CHECK(sj["eigenvalues"][0].size() == 2);
}

TEST_CASE("evolve run emits the evolution table and conserves H") {
    auto dir = temp_dir("evolve");
    json j = {{"command", "evolve"},
              {"grid", {{"n_points", 128}, {"half_length", 12.0 * M_PI}}},
              {"parameters", {{"c", 1.0}}},
              {"evolution",
               {{"T", 0.2}, {"dt", 1e-3}, {"epsilon", 0.0}, {"sample_every", 20}}},
              {"tolerances", {{"newton", 1e-10}}}};
    auto cfg = parse_config(j);
    cfg.verify = true;
    cfg.output_dir = dir.string();
    auto report = run(cfg);
    REQUIRE(report.exit_status == 0);
    CHECK(report.headline["status"] == "completed");
    CHECK(report.headline["h_drift"].get<double>() < 1e-10);
    std::string csv = slurp(dir / "evolution.csv");
    CHECK(csv.rfind("t,hamiltonian,sup_u,deviation", 0) == 0);
}

TEST_CASE("nls-branch run uses omega columns") {
    auto dir = temp_dir("nlsbranch");
    json j = {{"command", "nls-branch"},
              {"equation", "nls"},
              {"grid", {{"n_points", 128}, {"half_length", 12.0 * M_PI}}},
              {"parameters", {{"mu", 1.0}, {"omega", 1.0}}},
              {"continuation",
               {{"param_start", 1.0}, {"param_end", 1.1}, {"ds_max", 0.05},
                {"with_spectrum", false}}},
              {"tolerances", {{"newton", 1e-10}, {"continuation", 1e-10}}}};
    auto cfg = parse_config(j);
    cfg.output_dir = dir.string();
    auto report = run(cfg);
    REQUIRE(report.exit_status == 0);
    std::string csv = slurp(dir / "branch.csv");
    CHECK(csv.rfind("omega,norm_phi_prime_sq,norm_phi_sq,vk,max_re_lambda", 0) == 0);
    CHECK(report.headline["termination"] == "reached_end");
    // vk present and negative at every point of this stable family
    std::size_t pos = csv.find('\n') + 1;
    int rows = 0;
    while (pos < csv.size()) {
        std::size_t end = csv.find('\n', pos);
        std::string line = csv.substr(pos, end - pos);
        const auto c1 = line.find(','), c2 = line.find(',', c1 + 1), c3 = line.find(',', c2 + 1);
        const auto c4 = line.find(',', c3 + 1);
        CHECK(std::stod(line.substr(c3 + 1, c4 - c3 - 1)) < 0.0);
        pos = end + 1;
        ++rows;
    }
    CHECK(rows >= 3);
}

TEST_CASE("branch run on a short window emits the stated columns") {
    auto dir = temp_dir("branch");
    json j = {{"command", "branch"},
              {"grid", {{"n_points", 128}, {"half_length", 12.0 * M_PI}}},
              {"parameters", {{"c", 1.0}}},
              {"continuation",
               {{"param_start", 1.0}, {"param_end", 1.05}, {"ds_max", 0.03},
                {"with_spectrum", true}}},
              {"tolerances", {{"newton", 1e-10}, {"continuation", 1e-10}}}};
    auto cfg = parse_config(j);
    cfg.verify = true;
    cfg.output_dir = dir.string();
    auto report = run(cfg);
    REQUIRE(report.exit_status == 0);
    std::string csv = slurp(dir / "branch.csv");
    CHECK(csv.rfind("c,norm_phi_prime_sq,c_norm_phi_prime_sq,vk,max_re_lambda", 0) == 0);
    CHECK(report.headline["index_identity_failures"].get<int>() == 0);
    CHECK(report.headline["verify_vk_sign_consistent"].get<bool>());
}
