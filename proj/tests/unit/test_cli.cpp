#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>
#include <twostrain/cli.hpp>

using namespace twostrain;
namespace fs = std::filesystem;

namespace {

// Unique per-process scratch directory so parallel ctest invocations cannot collide.
fs::path scratch_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() /
                     ("twostrain-test-" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int run_quiet(const RunConfig& cfg, std::string* out = nullptr) {
    std::ostringstream os, es;
    const int rc = run(cfg, os, es);
    if (out) *out = os.str();
    return rc;
}

}  // namespace

TEST_CASE("command line parses a full simulate invocation") {
    const RunConfig cfg = parse_config({"simulate", "--model", "integrated-chain", "--k", "5",
                                        "--r", "3", "--beta1", "0.4", "--beta2", "0.2", "--eps",
                                        "0.3", "--t-end", "120", "--method", "rk4", "--out",
                                        "traj.csv"});
    CHECK(cfg.command == "simulate");
    CHECK(cfg.model == "integrated-chain");
    CHECK(cfg.k == 5);
    CHECK(cfg.r == 3);
    CHECK(cfg.beta1 == 0.4);
    REQUIRE(cfg.eps.has_value());
    CHECK(*cfg.eps == 0.3);
    CHECK_FALSE(cfg.lambda.has_value());
    CHECK(cfg.t_end == 120.0);
    CHECK(cfg.method == "rk4");
    CHECK(cfg.out == "traj.csv");
}

TEST_CASE("fixed-point commands demand exactly one immunity input") {
    CHECK_THROWS_AS(parse_config({"repro", "--model", "integrated-basic", "--beta1", "0.6",
                                  "--beta2", "0.2"}),
                    ConfigError);
    // --eps and --lambda exclude each other at the option level.
    CHECK_THROWS(parse_config({"repro", "--model", "integrated-basic", "--beta1", "0.6", "--beta2",
                               "0.2", "--eps", "0.3", "--lambda", "0.1"}));
    CHECK_NOTHROW(parse_config(
        {"repro", "--model", "integrated-basic", "--beta1", "0.6", "--beta2", "0.2", "--lambda",
         "0.1"}));
}

TEST_CASE("sweeping commands refuse a fixed immunity input") {
    // On the command line the options simply do not exist there.
    CHECK_THROWS(parse_config({"sweep", "--model", "integrated-basic", "--beta1", "0.6", "--beta2",
                               "0.2", "--eps", "0.3", "--out", "s.csv"}));
    CHECK_THROWS(parse_config({"scan", "--model", "integrated-basic", "--beta1", "0.6", "--beta2",
                               "0.2", "--lambda", "0.3", "--out", "s.csv"}));
    // Configs built in code go through the same cross-field validation inside run().
    RunConfig cfg;
    cfg.command = "sweep";
    cfg.model = "integrated-basic";
    cfg.beta1 = 0.6;
    cfg.beta2 = 0.2;
    cfg.eps = 0.3;
    cfg.out = (scratch_dir() / "refused.csv").string();
    std::ostringstream os, es;
    CHECK(run(cfg, os, es) == exit_usage);
}

TEST_CASE("grid command needs an immunity input exactly when no axis supplies it") {
    CHECK_THROWS_AS(parse_config({"bifurcation", "--model", "integrated-basic", "--beta2", "0.2",
                                  "--eps", "0.3", "--out", "g.csv"}),
                    ConfigError);  // epsilon axis plus --eps
    CHECK_THROWS_AS(parse_config({"bifurcation", "--model", "integrated-chain", "--k", "5", "--r",
                                  "3", "--beta2", "0.2", "--x-var", "beta1", "--y-var", "r",
                                  "--out", "g.csv"}),
                    ConfigError);  // no epsilon anywhere
    CHECK_NOTHROW(parse_config({"bifurcation", "--model", "integrated-chain", "--k", "5", "--r",
                                "3", "--beta2", "0.2", "--x-var", "beta1", "--y-var", "r", "--eps",
                                "0.2", "--out", "g.csv"}));
}

TEST_CASE("config serialization round-trips every command") {
    std::vector<RunConfig> cases;
    {
        RunConfig c;
        c.command = "simulate";
        c.model = "separated-chain";
        c.k = 4;
        c.r = 2;
        c.beta1 = 0.45;
        c.beta2 = 0.21;
        c.gamma = 0.11;
        c.alpha = 0.07;
        c.N = 2000.0;
        c.eps = 0.37;
        c.t_end = 321.0;
        c.method = "rk4";
        c.rel_tol = 1e-9;
        c.abs_tol = 1e-7;
        c.max_step = 0.5;
        c.record_stride = 4;
        c.init_i1 = 12.0;
        c.init_i2 = 3.5;
        c.out = "a.csv";
        cases.push_back(c);
    }
    {
        RunConfig c;
        c.command = "repro";
        c.model = "integrated-basic";
        c.beta1 = 0.6;
        c.beta2 = 0.2;
        c.lambda = 1.0 / 3.0;  // a value with no short decimal form
        cases.push_back(c);
    }
    {
        RunConfig c;
        c.command = "equilibria";
        c.model = "integrated-chain";
        c.k = 7;
        c.r = 0;
        c.beta1 = 0.9;
        c.beta2 = 0.3;
        c.eps = 0.125;
        c.out = "eq.csv";
        cases.push_back(c);
    }
    {
        RunConfig c;
        c.command = "bifurcation";
        c.model = "separated-chain";
        c.k = 5;
        c.r = 3;
        c.beta2 = 0.2;
        c.x_var = "epsilon";
        c.x_lo = 0.05;
        c.x_hi = 0.85;
        c.x_n = 33;
        c.y_var = "r";
        c.y_lo = 0.0;
        c.y_hi = 5.0;
        c.y_n = 21;
        c.out = "grid.csv";
        cases.push_back(c);
    }
    {
        RunConfig c;
        c.command = "sweep";
        c.model = "integrated-chain";
        c.k = 5;
        c.r = 3;
        c.beta1 = 0.4;
        c.beta2 = 0.2;
        c.eps_lo = 0.1;
        c.eps_hi = 0.7;
        c.eps_n = 13;
        c.sweep_t_end = 4000.0;
        c.out = "sweep.csv";
        cases.push_back(c);
    }
    {
        RunConfig c;
        c.command = "scan";
        c.model = "separated-basic";
        c.beta1 = 0.6;
        c.beta2 = 0.2;
        c.scan_lo = 0.01;
        c.scan_hi = 0.93;
        c.coarse_step = 0.0025;
        c.refine_tol = 1e-9;
        c.out = "scan.csv";
        cases.push_back(c);
    }
    {
        RunConfig c;
        c.command = "verify-lct";
        c.model = "integrated-chain";
        c.k = 5;
        c.r = 3;
        c.beta1 = 0.4;
        c.beta2 = 0.2;
        c.lambda = 0.05;
        c.t_check = 250.0;
        c.quad_step = 0.08;
        c.lct_tol = 0.5;
        c.out = "report.json";
        cases.push_back(c);
    }
    {
        RunConfig c;
        c.command = "figure";
        c.figure_id = "fig2c";
        c.out = "fig2c.csv";
        cases.push_back(c);
    }

    int idx = 0;
    for (const RunConfig& original : cases) {
        const fs::path cfg_path = scratch_dir() / ("roundtrip" + std::to_string(idx++) + ".toml");
        std::ofstream(cfg_path) << to_config_string(original);
        const RunConfig parsed = parse_config({"--config", cfg_path.string()});
        REQUIRE(parsed == original);
    }
}

TEST_CASE("figure presets name the published panels") {
    const RunConfig c = resolve_figure("fig2c", "out.csv");
    CHECK(c.command == "sweep");
    CHECK(c.model == "integrated-chain");
    CHECK(c.k == 5);
    CHECK(c.r == 3);
    CHECK(c.beta1 == 0.4);
    CHECK(c.beta2 == 0.2);
    CHECK(c.figure_id == "fig2c");
    CHECK(c.out == "out.csv");

    const RunConfig d = resolve_figure("fig3d", "g.csv");
    CHECK(d.command == "bifurcation");
    CHECK(d.k == 4);
    CHECK(d.r == 3);
    CHECK(d.beta2 == 0.169);
    CHECK(d.alpha == 0.04);
    CHECK(d.y_var == "beta1");

    const RunConfig e = resolve_figure("fig1a", "g.csv");
    CHECK(e.command == "bifurcation");
    CHECK(e.model == "integrated-basic");
    CHECK(e.x_var == "epsilon");
    CHECK(e.y_n == 101);

    for (const char* id : {"fig1a", "fig1b", "fig1c", "fig1d", "fig2a", "fig2b", "fig2c", "fig2d",
                           "fig2e", "fig2f", "fig3a", "fig3b", "fig3c", "fig3d", "fig3e", "fig3f"})
        CHECK_NOTHROW(resolve_figure(id, "x.csv"));
    CHECK_THROWS_AS(resolve_figure("fig9z", "x.csv"), ConfigError);
}

TEST_CASE("reproduction command prints its table to standard output") {
    RunConfig cfg;
    cfg.command = "repro";
    cfg.model = "integrated-basic";
    cfg.beta1 = 0.6;
    cfg.beta2 = 0.2;
    cfg.eps = 0.25;
    std::string out;
    REQUIRE(run_quiet(cfg, &out) == exit_ok);
    REQUIRE(out.rfind("model,k,r,beta1,beta2,gamma,alpha,lambda,epsilon,r0,r1,r2,r12,r21\n", 0) ==
            0);
    CHECK(out.find("integrated-basic,1,1,") != std::string::npos);
    CHECK(out.find(",4.5,4.5,2,") != std::string::npos);  // r0, r1, r2 at eps = 0.25
}

TEST_CASE("simulate writes a deterministic table with a metadata sidecar") {
    RunConfig cfg;
    cfg.command = "simulate";
    cfg.model = "separated-chain";
    cfg.k = 4;
    cfg.r = 2;
    cfg.beta1 = 0.5;
    cfg.beta2 = 0.2;
    cfg.eps = 0.3;
    cfg.t_end = 40.0;
    const fs::path a = scratch_dir() / "sim-a.csv";
    const fs::path b = scratch_dir() / "sim-b.csv";

    cfg.out = a.string();
    REQUIRE(run_quiet(cfg) == exit_ok);
    cfg.out = b.string();
    REQUIRE(run_quiet(cfg) == exit_ok);

    const std::string body_a = slurp(a), body_b = slurp(b);
    CHECK(body_a == body_b);  // identical inputs give byte-identical tables
    CHECK(body_a.rfind("t,S0,S1,S2,S3,S4,I1,I2,V\n", 0) == 0);

    const auto meta = nlohmann::json::parse(slurp(a.string() + ".meta.json"));
    CHECK(meta.at("tool") == "twostrain");
    CHECK(meta.at("command") == "simulate");
    CHECK(meta.at("model").at("kind") == "separated-chain");
    CHECK(meta.at("params").at("epsilon").get<double>() == Catch::Approx(0.3).epsilon(1e-12));
    CHECK(meta.at("params").at("lambda").get<double>() ==
          Catch::Approx(epsilon_to_lambda(make_model(ModelKind::SeparatedChain, 4, 2), 0.3, 0.1))
              .epsilon(1e-12));
    CHECK(meta.at("schema").get<std::string>().rfind("t,S0", 0) == 0);
}

TEST_CASE("equilibria command emits one row per steady state") {
    RunConfig cfg;
    cfg.command = "equilibria";
    cfg.model = "integrated-basic";
    cfg.beta1 = 0.6;
    cfg.beta2 = 0.2;
    cfg.eps = 0.9;  // strain 1 cannot persist here
    std::string out;
    REQUIRE(run_quiet(cfg, &out) == exit_ok);
    std::istringstream lines(out);
    std::string header, dfe, s1, s2;
    std::getline(lines, header);
    std::getline(lines, dfe);
    std::getline(lines, s1);
    std::getline(lines, s2);
    CHECK(header == "equilibrium,admissible,S0,S1,I1,I2,residual");
    CHECK(dfe.rfind("disease_free,1,", 0) == 0);
    CHECK(s1.rfind("strain1_only,0,", 0) == 0);
    CHECK(s1 == "strain1_only,0,,,,,");
    CHECK(s2.rfind("strain2_only,1,", 0) == 0);
}

TEST_CASE("scan command writes the transition table") {
    RunConfig cfg;
    cfg.command = "scan";
    cfg.model = "separated-basic";
    cfg.beta1 = 0.6;
    cfg.beta2 = 0.2;
    const fs::path out = scratch_dir() / "scan.csv";
    cfg.out = out.string();
    REQUIRE(run_quiet(cfg) == exit_ok);
    const std::string body = slurp(out);
    CHECK(body.rfind("crossing_eps,boundary,from,to\n", 0) == 0);
    CHECK(body.find(",R21,C,S1\n") != std::string::npos);
    CHECK(body.find(",R1,S1,DF\n") != std::string::npos);
}

TEST_CASE("exit codes separate the failure classes") {
    RunConfig cfg;
    cfg.command = "repro";
    cfg.model = "integrated-basic";
    cfg.beta1 = 0.6;
    cfg.beta2 = 0.2;
    cfg.eps = 0.25;

    SECTION("invalid rate is a domain failure") {
        cfg.gamma = 0.0;
        CHECK(run_quiet(cfg) == exit_domain);
    }
    SECTION("degenerate immunity map is a domain failure") {
        cfg.command = "equilibria";
        cfg.model = "integrated-chain";
        cfg.k = 3;
        cfg.r = 3;
        CHECK(run_quiet(cfg) == exit_domain);
    }
    SECTION("unknown figure id is a usage failure") {
        cfg = RunConfig{};
        cfg.command = "figure";
        cfg.figure_id = "fig7q";
        cfg.out = (scratch_dir() / "x.csv").string();
        CHECK(run_quiet(cfg) == exit_usage);
    }
    SECTION("unwritable output path is an io failure") {
        cfg.out = (scratch_dir() / "no-such-dir" / "x.csv").string();
        CHECK(run_quiet(cfg) == exit_io);
    }
    SECTION("unknown method is a usage failure") {
        cfg.command = "simulate";
        cfg.method = "euler";
        cfg.out = (scratch_dir() / "x.csv").string();
        CHECK(run_quiet(cfg) == exit_usage);
    }
}

TEST_CASE("delay-kernel verification gates its exit code on the residual") {
    RunConfig cfg;
    cfg.command = "verify-lct";
    cfg.model = "integrated-chain";
    cfg.k = 5;
    cfg.r = 3;
    cfg.beta1 = 0.4;
    cfg.beta2 = 0.2;
    cfg.eps = 0.3;
    cfg.t_check = 200.0;
    cfg.quad_step = 0.1;
    const fs::path report = scratch_dir() / "lct.json";
    cfg.out = report.string();

    std::string out;
    REQUIRE(run_quiet(cfg, &out) == exit_ok);
    CHECK(out.rfind("PASS", 0) == 0);
    const auto j = nlohmann::json::parse(slurp(report));
    CHECK(j.at("report").at("pass").get<bool>());

    cfg.lct_tol = 1e-12;  // absurdly tight: the quadrature cannot meet it
    REQUIRE(run_quiet(cfg, &out) == exit_verify);
    CHECK(out.rfind("FAIL", 0) == 0);
}

TEST_CASE("argv entry point maps parse errors to the usage exit code") {
    std::ostringstream os, es;
    const char* bad[] = {"twostrain", "repro", "--model", "integrated-basic", "--beta1", "0.6",
                         "--beta2", "0.2"};
    CHECK(run_cli(8, bad, os, es) == exit_usage);

    const char* good[] = {"twostrain", "repro",   "--model", "integrated-basic",
                          "--beta1",   "0.6",     "--beta2", "0.2",
                          "--eps",     "0.25"};
    std::ostringstream os2, es2;
    CHECK(run_cli(10, good, os2, es2) == exit_ok);
    CHECK(os2.str().rfind("model,k,r,", 0) == 0);

    const char* help[] = {"twostrain", "--help"};
    std::ostringstream os3, es3;
    CHECK(run_cli(2, help, os3, es3) == exit_ok);
    CHECK(os3.str().find("simulate") != std::string::npos);
}
