#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "twostrain/analysis.hpp"
#include "twostrain/chain_delay.hpp"
#include "twostrain/csv.hpp"
#include "twostrain/equilibria.hpp"
#include "twostrain/errors.hpp"
#include "twostrain/integrate.hpp"
#include "twostrain/model.hpp"
#include "twostrain/parallel.hpp"
#include "twostrain/reproduction.hpp"
#include "twostrain/version.hpp"

namespace twostrain {

// Exit codes, one per failure class.
enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 1,        // CLI/config problems
    exit_domain = 2,       // invalid model/parameter inputs
    exit_singular = 3,     // vanishing closed-form denominator
    exit_integration = 4,  // integrator failure
    exit_io = 5,           // filesystem problems
    exit_verify = 6,       // verify-lct residual above tolerance
    exit_internal = 7,
};

struct RunConfig {
    std::string command;

    // Model and rates.
    std::string model = "integrated-basic";
    int k = 1;
    int r = 1;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double gamma = 0.1;
    double alpha = 0.1;
    double N = 1000.0;
    std::optional<double> eps;     // exactly one of eps/lambda for fixed-point commands
    std::optional<double> lambda;

    // simulate
    double t_end = 500.0;
    std::string method = "rk45";
    double rel_tol = 1e-8;
    double abs_tol = -1.0;
    double max_step = 1.0;
    int record_stride = 1;
    double init_i1 = -1.0;  // < 0: defaults to 0.01 * N
    double init_i2 = -1.0;

    // bifurcation
    std::string x_var = "epsilon";
    double x_lo = 0.0, x_hi = 0.99;
    int x_n = 100;
    std::string y_var = "beta1";
    double y_lo = 0.0, y_hi = 1.0;
    int y_n = 101;

    // sweep
    double eps_lo = 0.0, eps_hi = 0.95;
    int eps_n = 96;
    double sweep_t_end = 10000.0;

    // scan
    double scan_lo = 0.0, scan_hi = 0.95;
    double coarse_step = 0.005;
    double refine_tol = 1e-6;

    // verify-lct
    double t_check = 500.0;
    double quad_step = 0.1;
    double lct_tol = -1.0;  // < 0: max(1e-3 * N, truncation bound)

    // figure
    std::string figure_id;

    std::string out;  // CSV (or JSON report) path; repro/equilibria print to stdout when empty

    bool operator==(const RunConfig&) const = default;
};

// Figure presets: parameters mirror the corresponding panel captions. Grid panels classify a
// region diagram over (x = eps, y); sweep panels settle the system along an eps grid.
struct FigurePreset {
    const char* id;
    const char* panel;  // "bifurcation" or "sweep"
    ModelKind kind;
    int k, r;
    double beta1, beta2, gamma, alpha;
    const char* y_var;  // grids only
    double y_lo, y_hi;
    int y_n;
};

inline const std::array<FigurePreset, 16>& figure_presets() {
    static const std::array<FigurePreset, 16> presets{{
        {"fig1a", "bifurcation", ModelKind::IntegratedBasic, 1, 1, 0.0, 0.2, 0.1, 0.1, "beta1", 0.0, 1.0, 101},
        {"fig1b", "sweep", ModelKind::IntegratedBasic, 1, 1, 0.6, 0.2, 0.1, 0.1, "", 0, 0, 0},
        {"fig1c", "bifurcation", ModelKind::SeparatedBasic, 1, 1, 0.0, 0.2, 0.1, 0.1, "beta1", 0.0, 1.0, 101},
        {"fig1d", "sweep", ModelKind::SeparatedBasic, 1, 1, 0.6, 0.2, 0.1, 0.1, "", 0, 0, 0},
        {"fig2a", "bifurcation", ModelKind::IntegratedChain, 5, 3, 0.0, 0.2, 0.1, 0.1, "beta1", 0.0, 1.0, 101},
        {"fig2b", "bifurcation", ModelKind::IntegratedChain, 5, 3, 0.5, 0.2, 0.1, 0.1, "r", 0.0, 5.0, 101},
        {"fig2c", "sweep", ModelKind::IntegratedChain, 5, 3, 0.4, 0.2, 0.1, 0.1, "", 0, 0, 0},
        {"fig2d", "bifurcation", ModelKind::SeparatedChain, 5, 3, 0.0, 0.2, 0.1, 0.1, "beta1", 0.0, 1.0, 101},
        {"fig2e", "bifurcation", ModelKind::SeparatedChain, 5, 3, 0.3, 0.2, 0.1, 0.1, "r", 0.0, 5.0, 101},
        {"fig2f", "sweep", ModelKind::SeparatedChain, 5, 3, 0.28, 0.2, 0.1, 0.1, "", 0, 0, 0},
        {"fig3a", "bifurcation", ModelKind::IntegratedChain, 5, 3, 0.0, 0.2, 0.1, 0.04, "beta1", 0.0, 1.0, 101},
        {"fig3b", "sweep", ModelKind::IntegratedChain, 5, 3, 0.45, 0.2, 0.1, 0.04, "", 0, 0, 0},
        {"fig3c", "sweep", ModelKind::IntegratedChain, 5, 3, 0.7, 0.2, 0.1, 0.04, "", 0, 0, 0},
        {"fig3d", "bifurcation", ModelKind::IntegratedChain, 4, 3, 0.0, 0.169, 0.1, 0.04, "beta1", 0.0, 1.0, 101},
        {"fig3e", "sweep", ModelKind::IntegratedChain, 4, 3, 0.6, 0.169, 0.1, 0.04, "", 0, 0, 0},
        {"fig3f", "sweep", ModelKind::IntegratedChain, 4, 3, 0.9, 0.169, 0.1, 0.04, "", 0, 0, 0},
    }};
    return presets;
}

// Materializes a preset as the bifurcation/sweep run it stands for.
inline RunConfig resolve_figure(const std::string& id, const std::string& out_path) {
    for (const FigurePreset& fp : figure_presets()) {
        if (id != fp.id) continue;
        RunConfig cfg;
        cfg.command = fp.panel;
        cfg.model = kind_name(fp.kind);
        cfg.k = fp.k;
        cfg.r = fp.r;
        cfg.beta1 = fp.beta1;
        cfg.beta2 = fp.beta2;
        cfg.gamma = fp.gamma;
        cfg.alpha = fp.alpha;
        cfg.N = 1000.0;
        cfg.figure_id = fp.id;
        cfg.out = out_path;
        if (cfg.command == "bifurcation") {
            cfg.x_var = "epsilon";
            cfg.x_lo = 0.0;
            cfg.x_hi = 0.99;
            cfg.x_n = 100;
            cfg.y_var = fp.y_var;
            cfg.y_lo = fp.y_lo;
            cfg.y_hi = fp.y_hi;
            cfg.y_n = fp.y_n;
        } else {
            cfg.eps_lo = 0.0;
            cfg.eps_hi = 0.95;
            cfg.eps_n = 96;
            cfg.sweep_t_end = 10000.0;
        }
        return cfg;
    }
    throw ConfigError("unknown figure id '" + id + "' (fig1a..fig1d, fig2a..fig2f, fig3a..fig3f)");
}

namespace detail_cli {

inline void add_model_options(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--model", cfg.model, "integrated-basic|separated-basic|integrated-chain|separated-chain")
        ->capture_default_str();
    sub->add_option("--k", cfg.k, "chain length (chain kinds)")->capture_default_str();
    sub->add_option("--r", cfg.r, "vaccination reach, 0 <= r <= k")->capture_default_str();
    sub->add_option("--beta1", cfg.beta1, "strain-1 transmission rate")->capture_default_str();
    sub->add_option("--beta2", cfg.beta2, "strain-2 transmission rate")->capture_default_str();
    sub->add_option("--gamma", cfg.gamma, "recovery rate")->capture_default_str();
    sub->add_option("--alpha", cfg.alpha, "immunity waning rate")->capture_default_str();
    sub->add_option("--N", cfg.N, "population size")->capture_default_str();
}

inline void add_rate_choice(CLI::App* sub, RunConfig& cfg) {
    auto* e = sub->add_option("--eps", cfg.eps, "effective immunity in [0, 1)");
    auto* l = sub->add_option("--lambda", cfg.lambda, "vaccination rate >= 0");
    e->excludes(l);
    l->excludes(e);
}

inline void add_out_option(CLI::App* sub, RunConfig& cfg, bool required) {
    auto* o = sub->add_option("--out", cfg.out, "output path (a .meta.json sidecar is written next to it)");
    if (required) o->required();
}

struct ParsedApp {
    RunConfig cfg;
};

inline CLI::App* build_app(CLI::App& app, RunConfig& cfg) {
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from a TOML config file");

    auto* simulate = app.add_subcommand("simulate", "integrate the system and write the trajectory");
    add_model_options(simulate, cfg);
    add_rate_choice(simulate, cfg);
    simulate->add_option("--t-end", cfg.t_end, "horizon in days")->capture_default_str();
    simulate->add_option("--method", cfg.method, "rk45 (adaptive) or rk4 (fixed step)")->capture_default_str();
    simulate->add_option("--rel-tol", cfg.rel_tol, "adaptive relative tolerance")->capture_default_str();
    simulate->add_option("--abs-tol", cfg.abs_tol, "adaptive absolute tolerance (<0: 1e-8 N)")->capture_default_str();
    simulate->add_option("--max-step", cfg.max_step, "max (rk45) or fixed (rk4) step, days")->capture_default_str();
    simulate->add_option("--record-stride", cfg.record_stride, "record every n-th accepted step")->capture_default_str();
    simulate->add_option("--i1-0", cfg.init_i1, "initial strain-1 infections (<0: 0.01 N)")->capture_default_str();
    simulate->add_option("--i2-0", cfg.init_i2, "initial strain-2 infections (<0: 0.01 N)")->capture_default_str();
    add_out_option(simulate, cfg, true);

    auto* repro = app.add_subcommand("repro", "closed-form and numeric reproduction numbers");
    add_model_options(repro, cfg);
    add_rate_choice(repro, cfg);
    add_out_option(repro, cfg, false);

    auto* equilibria = app.add_subcommand("equilibria", "closed-form equilibria and admissibility");
    add_model_options(equilibria, cfg);
    add_rate_choice(equilibria, cfg);
    add_out_option(equilibria, cfg, false);

    auto* bifurcation = app.add_subcommand("bifurcation", "region labels over a 2-D parameter grid");
    add_model_options(bifurcation, cfg);
    add_rate_choice(bifurcation, cfg);
    bifurcation->add_option("--x-var", cfg.x_var, "epsilon|beta1|r")->capture_default_str();
    bifurcation->add_option("--x-lo", cfg.x_lo)->capture_default_str();
    bifurcation->add_option("--x-hi", cfg.x_hi)->capture_default_str();
    bifurcation->add_option("--x-n", cfg.x_n)->capture_default_str();
    bifurcation->add_option("--y-var", cfg.y_var, "epsilon|beta1|r")->capture_default_str();
    bifurcation->add_option("--y-lo", cfg.y_lo)->capture_default_str();
    bifurcation->add_option("--y-hi", cfg.y_hi)->capture_default_str();
    bifurcation->add_option("--y-n", cfg.y_n)->capture_default_str();
    add_out_option(bifurcation, cfg, true);

    auto* sweep = app.add_subcommand("sweep", "settle to steady state along an eps grid");
    add_model_options(sweep, cfg);
    sweep->add_option("--eps-lo", cfg.eps_lo)->capture_default_str();
    sweep->add_option("--eps-hi", cfg.eps_hi)->capture_default_str();
    sweep->add_option("--eps-n", cfg.eps_n, "node count")->capture_default_str();
    sweep->add_option("--t-end", cfg.sweep_t_end, "settling horizon in days")->capture_default_str();
    add_out_option(sweep, cfg, true);

    auto* scan = app.add_subcommand("scan", "locate region transitions along eps");
    add_model_options(scan, cfg);
    scan->add_option("--eps-lo", cfg.scan_lo)->capture_default_str();
    scan->add_option("--eps-hi", cfg.scan_hi)->capture_default_str();
    scan->add_option("--coarse-step", cfg.coarse_step)->capture_default_str();
    scan->add_option("--refine-tol", cfg.refine_tol)->capture_default_str();
    add_out_option(scan, cfg, true);

    auto* verify = app.add_subcommand("verify-lct", "check the chain against its delay-kernel form");
    add_model_options(verify, cfg);
    add_rate_choice(verify, cfg);
    verify->add_option("--t-check", cfg.t_check, "time at which the substitution is evaluated")->capture_default_str();
    verify->add_option("--quad-step", cfg.quad_step, "quadrature grid spacing, days")->capture_default_str();
    verify->add_option("--tol", cfg.lct_tol, "pass threshold (<0: max(1e-3 N, truncation bound))")->capture_default_str();
    add_out_option(verify, cfg, true);

    auto* figure = app.add_subcommand("figure", "run a named preset panel");
    figure->add_option("--id", cfg.figure_id, "fig1a..fig1d, fig2a..fig2f, fig3a..fig3f")->required();
    add_out_option(figure, cfg, true);

    for (CLI::App* sub : {simulate, repro, equilibria, bifurcation, sweep, scan, verify, figure})
        sub->configurable();
    return &app;
}

inline void finalize(RunConfig& cfg) {
    const bool needs_rate = cfg.command == "simulate" || cfg.command == "repro" ||
                            cfg.command == "equilibria" || cfg.command == "verify-lct";
    if (needs_rate && !cfg.eps && !cfg.lambda)
        throw ConfigError(cfg.command + " needs exactly one of --eps/--lambda");
    if (cfg.command == "bifurcation") {
        const bool eps_axis = cfg.x_var == "epsilon" || cfg.y_var == "epsilon";
        if (eps_axis && (cfg.eps || cfg.lambda))
            throw ConfigError("an epsilon axis conflicts with --eps/--lambda");
        if (!eps_axis && !cfg.eps && !cfg.lambda)
            throw ConfigError("bifurcation without an epsilon axis needs one of --eps/--lambda");
    }
    if ((cfg.command == "sweep" || cfg.command == "scan" || cfg.command == "figure") &&
        (cfg.eps || cfg.lambda))
        throw ConfigError(cfg.command + " sweeps eps itself; --eps/--lambda do not apply");
}

// args as on the command line, program name excluded.
inline RunConfig parse_config(const std::vector<std::string>& args) {
    RunConfig cfg;
    CLI::App app{"two-strain vaccination model toolkit"};
    build_app(app, cfg);
    std::vector<const char*> argv;
    argv.push_back("twostrain");
    for (const std::string& a : args) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
    const auto subs = app.get_subcommands();
    if (subs.size() != 1) throw ConfigError("exactly one subcommand required");
    cfg.command = subs.front()->get_name();
    finalize(cfg);
    return cfg;
}

inline std::string config_key(const std::string& k, const std::string& v, bool quote) {
    return quote ? k + " = \"" + v + "\"\n" : k + " = " + v + "\n";
}

}  // namespace detail_cli

using detail_cli::parse_config;

// Serializes a RunConfig as a TOML document that parse_config({"--config", path}) accepts;
// round-tripping reproduces the config exactly (doubles are written with 17 digits).
inline std::string to_config_string(const RunConfig& cfg) {
    using detail_cli::config_key;
    std::string s = "[" + cfg.command + "]\n";
    const auto num = [&](const std::string& k, double v) { s += config_key(k, fmt17(v), false); };
    const auto inum = [&](const std::string& k, int v) { s += config_key(k, std::to_string(v), false); };
    const auto str = [&](const std::string& k, const std::string& v) {
        if (!v.empty()) s += config_key(k, v, true);
    };
    if (cfg.command == "figure") {
        str("id", cfg.figure_id);
        str("out", cfg.out);
        return s;
    }
    str("model", cfg.model);
    inum("k", cfg.k);
    inum("r", cfg.r);
    num("beta1", cfg.beta1);
    num("beta2", cfg.beta2);
    num("gamma", cfg.gamma);
    num("alpha", cfg.alpha);
    num("N", cfg.N);
    if (cfg.eps) num("eps", *cfg.eps);
    if (cfg.lambda) num("lambda", *cfg.lambda);
    if (cfg.command == "simulate") {
        num("t-end", cfg.t_end);
        str("method", cfg.method);
        num("rel-tol", cfg.rel_tol);
        num("abs-tol", cfg.abs_tol);
        num("max-step", cfg.max_step);
        inum("record-stride", cfg.record_stride);
        num("i1-0", cfg.init_i1);
        num("i2-0", cfg.init_i2);
    } else if (cfg.command == "bifurcation") {
        str("x-var", cfg.x_var);
        num("x-lo", cfg.x_lo);
        num("x-hi", cfg.x_hi);
        inum("x-n", cfg.x_n);
        str("y-var", cfg.y_var);
        num("y-lo", cfg.y_lo);
        num("y-hi", cfg.y_hi);
        inum("y-n", cfg.y_n);
    } else if (cfg.command == "sweep") {
        num("eps-lo", cfg.eps_lo);
        num("eps-hi", cfg.eps_hi);
        inum("eps-n", cfg.eps_n);
        num("t-end", cfg.sweep_t_end);
    } else if (cfg.command == "scan") {
        num("eps-lo", cfg.scan_lo);
        num("eps-hi", cfg.scan_hi);
        num("coarse-step", cfg.coarse_step);
        num("refine-tol", cfg.refine_tol);
    } else if (cfg.command == "verify-lct") {
        num("t-check", cfg.t_check);
        num("quad-step", cfg.quad_step);
        num("tol", cfg.lct_tol);
    }
    str("out", cfg.out);
    return s;
}

namespace detail_cli {

inline ModelSpec model_of(const RunConfig& cfg) {
    const ModelKind kind = parse_kind(cfg.model);
    return make_model(kind, cfg.k, cfg.r);
}

inline EpiParams params_of(const RunConfig& cfg, const ModelSpec& m) {
    EpiParams p;
    p.beta1 = cfg.beta1;
    p.beta2 = cfg.beta2;
    p.gamma = cfg.gamma;
    p.alpha = cfg.alpha;
    p.N = cfg.N;
    p.lambda = cfg.lambda ? *cfg.lambda : (cfg.eps ? epsilon_to_lambda(m, *cfg.eps, p.alpha) : 0.0);
    p.validate();
    return p;
}

inline void write_text_file(const std::string& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << body;
    if (!f.good()) throw IoError("write failed for '" + path + "'");
}

inline std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline nlohmann::json meta_base(const RunConfig& cfg, const ModelSpec& m, const EpiParams& p,
                                const std::string& schema) {
    nlohmann::json j;
    j["tool"] = "twostrain";
    j["version"] = version;
    j["command"] = cfg.command;
    if (!cfg.figure_id.empty()) j["figure_id"] = cfg.figure_id;
    j["model"] = {{"kind", kind_name(m.kind)}, {"k", m.k}, {"r", m.r}};
    j["params"] = {{"beta1", p.beta1}, {"beta2", p.beta2},   {"gamma", p.gamma}, {"alpha", p.alpha},
                   {"lambda", p.lambda}, {"epsilon", lambda_to_epsilon(m, p.lambda, p.alpha)}, {"N", p.N}};
    j["schema"] = schema;
    j["thread_cap"] = thread_cap();
    j["generated_at"] = timestamp_utc();  // excluded from the determinism guarantee
    return j;
}

inline void emit(const RunConfig& cfg, const std::string& body, const nlohmann::json& meta,
                 std::ostream& os) {
    if (cfg.out.empty()) {
        os << body;
        return;
    }
    write_text_file(cfg.out, body);
    write_text_file(cfg.out + ".meta.json", meta.dump(2) + "\n");
}

inline std::string state_csv_header(const ModelSpec& m) {
    std::string h;
    for (int i = 0; i <= m.k; ++i) h += ",S" + std::to_string(i);
    h += ",I1,I2";
    if (m.separated()) h += ",V";
    return h;
}

inline std::string state_csv_fields(const ModelSpec& m, const StateVec& x) {
    std::string row;
    for (int i = 0; i <= m.k; ++i) row += "," + fmt17(x.s(i));
    row += "," + fmt17(x.i1()) + "," + fmt17(x.i2());
    if (m.separated()) row += "," + fmt17(x.v());
    return row;
}

inline int run_simulate(const RunConfig& cfg, std::ostream& os, std::ostream& es) {
    const ModelSpec m = model_of(cfg);
    const EpiParams p = params_of(cfg, m);
    IntegrationOptions opts;
    if (cfg.method == "rk45")
        opts.method = Method::AdaptiveRK45;
    else if (cfg.method == "rk4")
        opts.method = Method::FixedRK4;
    else
        throw ConfigError("unknown method '" + cfg.method + "' (rk45|rk4)");
    opts.rel_tol = cfg.rel_tol;
    opts.abs_tol = cfg.abs_tol;
    opts.max_step = cfg.max_step;
    opts.record_stride = cfg.record_stride;

    const double i1 = cfg.init_i1 < 0 ? 0.01 * p.N : cfg.init_i1;
    const double i2 = cfg.init_i2 < 0 ? 0.01 * p.N : cfg.init_i2;
    const StateVec init = make_state(m, p.N - i1 - i2, i1, i2);
    const Trajectory traj = integrate(m, p, init, cfg.t_end, opts);

    std::string body = "t" + state_csv_header(m) + "\n";
    for (size_t j = 0; j < traj.t.size(); ++j)
        body += fmt17(traj.t[j]) + state_csv_fields(m, traj.x[j]) + "\n";

    nlohmann::json meta = meta_base(cfg, m, p, "t" + state_csv_header(m));
    meta["options"] = {{"method", cfg.method},       {"rel_tol", opts.rel_tol},
                       {"abs_tol", opts.abs_tol},    {"max_step", opts.max_step},
                       {"record_stride", opts.record_stride}, {"t_end", cfg.t_end},
                       {"init_i1", i1},              {"init_i2", i2}};
    meta["result"] = {{"rows", traj.t.size()},
                      {"max_conservation_error", traj.max_conservation_error},
                      {"min_component", traj.min_component},
                      {"undershoot_clamps", traj.undershoot_clamps}};
    emit(cfg, body, meta, os);
    if (traj.undershoot_clamps > 0)
        es << "warning: " << traj.undershoot_clamps << " undershoot clamp(s), worst "
           << traj.min_component << "\n";
    if (!cfg.out.empty())
        os << "wrote " << cfg.out << " (" << traj.t.size() << " rows)\n";
    return exit_ok;
}

inline std::string opt_field(const std::optional<double>& v) { return v ? fmt17(*v) : ""; }

inline int run_repro(const RunConfig& cfg, std::ostream& os, std::ostream&) {
    const ModelSpec m = model_of(cfg);
    const EpiParams p = params_of(cfg, m);
    const ReproductionSet rs = repro_closed(m, p);
    const std::string schema = "model,k,r,beta1,beta2,gamma,alpha,lambda,epsilon,r0,r1,r2,r12,r21";
    std::string body = schema + "\n";
    body += std::string(kind_name(m.kind)) + "," + std::to_string(m.k) + "," + std::to_string(m.r) +
            "," + fmt17(p.beta1) + "," + fmt17(p.beta2) + "," + fmt17(p.gamma) + "," +
            fmt17(p.alpha) + "," + fmt17(p.lambda) + "," +
            fmt17(lambda_to_epsilon(m, p.lambda, p.alpha)) + "," + fmt17(rs.r0) + "," + fmt17(rs.r1) +
            "," + fmt17(rs.r2) + "," + opt_field(rs.r12) + "," + opt_field(rs.r21) + "\n";
    nlohmann::json meta = meta_base(cfg, m, p, schema);
    meta["result"] = {{"label", label_name(classify(rs))}};
    emit(cfg, body, meta, os);
    if (!cfg.out.empty()) os << "wrote " << cfg.out << " (label " << label_name(classify(rs)) << ")\n";
    return exit_ok;
}

inline int run_equilibria(const RunConfig& cfg, std::ostream& os, std::ostream&) {
    const ModelSpec m = model_of(cfg);
    const EpiParams p = params_of(cfg, m);
    const EquilibriumSet set = equilibria(m, p);
    const std::string schema = "equilibrium,admissible" + state_csv_header(m) + ",residual";
    std::string body = schema + "\n";
    const auto row = [&](const char* name, const StateVec* x) {
        if (!x) {
            body += std::string(name) + ",0";
            for (int i = 0; i < m.size(); ++i) body += ",";
            body += ",\n";
            return;
        }
        body += std::string(name) + ",1" + state_csv_fields(m, *x) + "," +
                fmt17(equilibrium_residual(m, p, *x)) + "\n";
    };
    row("disease_free", &set.disease_free);
    row("strain1_only", set.strain1_only ? &*set.strain1_only : nullptr);
    row("strain2_only", set.strain2_only ? &*set.strain2_only : nullptr);
    nlohmann::json meta = meta_base(cfg, m, p, schema);
    emit(cfg, body, meta, os);
    if (!cfg.out.empty()) os << "wrote " << cfg.out << "\n";
    return exit_ok;
}

inline int run_bifurcation(const RunConfig& cfg, std::ostream& os, std::ostream&) {
    const ModelSpec m = model_of(cfg);
    const EpiParams p = params_of(cfg, m);
    const AxisSpec x{parse_axis(cfg.x_var), cfg.x_lo, cfg.x_hi, cfg.x_n};
    const AxisSpec y{parse_axis(cfg.y_var), cfg.y_lo, cfg.y_hi, cfg.y_n};
    const RegionGrid grid = bifurcation_grid(m, p, x, y);
    std::string body = "x,y,label\n";
    for (int iy = 0; iy < y.n; ++iy)
        for (int ix = 0; ix < x.n; ++ix)
            body += fmt17(x.node(ix)) + "," + fmt17(y.node(iy)) + "," +
                    label_name(grid.at(ix, iy)) + "\n";
    nlohmann::json meta = meta_base(cfg, m, p, "x,y,label");
    meta["axes"] = {{"x", {{"var", axis_name(x.var)}, {"lo", x.lo}, {"hi", x.hi}, {"n", x.n}}},
                    {"y", {{"var", axis_name(y.var)}, {"lo", y.lo}, {"hi", y.hi}, {"n", y.n}}}};
    emit(cfg, body, meta, os);
    if (!cfg.out.empty()) os << "wrote " << cfg.out << " (" << x.n * y.n << " nodes)\n";
    return exit_ok;
}

inline int run_sweep(const RunConfig& cfg, std::ostream& os, std::ostream& es) {
    const ModelSpec m = model_of(cfg);
    const EpiParams p = params_of(cfg, m);
    if (cfg.eps_n < 1) throw ConfigError("eps-n must be >= 1");
    std::vector<double> grid(cfg.eps_n);
    for (int i = 0; i < cfg.eps_n; ++i)
        grid[i] = cfg.eps_n == 1 ? cfg.eps_lo
                                 : cfg.eps_lo + (cfg.eps_hi - cfg.eps_lo) * i / (cfg.eps_n - 1);
    const SweepTable table = steady_sweep(m, p, grid, std::nullopt, cfg.sweep_t_end);
    std::string body = "epsilon,lambda,i1_star,i2_star,total,label,status\n";
    long failures = 0;
    for (const SweepRow& row : table.rows) {
        body += fmt17(row.eps) + "," + fmt17(row.lambda) + "," + fmt17(row.i1_star) + "," +
                fmt17(row.i2_star) + "," + fmt17(row.total) + "," + label_name(row.label) + "," +
                row.status + "\n";
        if (row.status != "ok") ++failures;
    }
    nlohmann::json meta = meta_base(cfg, m, p, "epsilon,lambda,i1_star,i2_star,total,label,status");
    meta["options"] = {{"eps_lo", cfg.eps_lo},
                       {"eps_hi", cfg.eps_hi},
                       {"eps_n", cfg.eps_n},
                       {"t_end", cfg.sweep_t_end},
                       {"extinction_threshold", table.extinction_threshold}};
    emit(cfg, body, meta, os);
    if (failures > 0) es << "warning: " << failures << " row(s) did not complete\n";
    if (!cfg.out.empty()) os << "wrote " << cfg.out << " (" << table.rows.size() << " rows)\n";
    return exit_ok;
}

inline int run_scan(const RunConfig& cfg, std::ostream& os, std::ostream&) {
    const ModelSpec m = model_of(cfg);
    const EpiParams p = params_of(cfg, m);
    const TransitionList list =
        threshold_scan(m, p, cfg.scan_lo, cfg.scan_hi, cfg.coarse_step, cfg.refine_tol);
    std::string body = "crossing_eps,boundary,from,to\n";
    for (const Transition& tr : list.transitions)
        body += fmt17(tr.eps) + "," + repro_name(tr.boundary) + "," + label_name(tr.from) + "," +
                label_name(tr.to) + "\n";
    nlohmann::json meta = meta_base(cfg, m, p, "crossing_eps,boundary,from,to");
    meta["options"] = {{"eps_lo", cfg.scan_lo},
                       {"eps_hi", cfg.scan_hi},
                       {"coarse_step", cfg.coarse_step},
                       {"refine_tol", cfg.refine_tol}};
    emit(cfg, body, meta, os);
    if (!cfg.out.empty())
        os << "wrote " << cfg.out << " (" << list.transitions.size() << " transitions)\n";
    return exit_ok;
}

inline int run_verify_lct(const RunConfig& cfg, std::ostream& os, std::ostream&) {
    const ModelSpec m = model_of(cfg);
    const EpiParams p = params_of(cfg, m);
    if (!(cfg.quad_step > 0.0)) throw ConfigError("quad-step must be > 0");
    IntegrationOptions opts;
    opts.method = Method::FixedRK4;
    opts.max_step = cfg.quad_step / 8.0;  // ODE error ~h^4 stays far below the ~h^2 quadrature error
    opts.record_stride = 8;
    const Trajectory traj = integrate(m, p, default_init(m, p), cfg.t_check, opts);
    const DelayCheckReport rep = lct_substitution_check(m, p, traj, cfg.t_check);
    const double tol = cfg.lct_tol >= 0.0 ? cfg.lct_tol : std::max(1e-3 * p.N, rep.truncation_bound);
    const bool pass = rep.max_substitution_residual <= tol;

    nlohmann::json j = meta_base(cfg, m, p, "delay-check-report");
    j["report"] = {{"t_check", rep.t_check},
                   {"quad_step", rep.quad_step},
                   {"n_points", rep.n_points},
                   {"truncation_bound", rep.truncation_bound},
                   {"per_index_residuals", rep.per_index_residuals},
                   {"max_substitution_residual", rep.max_substitution_residual},
                   {"max_gamma_pi_residual", rep.max_gamma_pi_residual},
                   {"tolerance", tol},
                   {"pass", pass}};
    write_text_file(cfg.out, j.dump(2) + "\n");
    os << (pass ? "PASS" : "FAIL") << ": max substitution residual "
       << rep.max_substitution_residual << " (tolerance " << tol << "), report " << cfg.out << "\n";
    return pass ? exit_ok : exit_verify;
}

inline int dispatch(const RunConfig& cfg, std::ostream& os, std::ostream& es) {
    if (cfg.command == "simulate") return run_simulate(cfg, os, es);
    if (cfg.command == "repro") return run_repro(cfg, os, es);
    if (cfg.command == "equilibria") return run_equilibria(cfg, os, es);
    if (cfg.command == "bifurcation") return run_bifurcation(cfg, os, es);
    if (cfg.command == "sweep") return run_sweep(cfg, os, es);
    if (cfg.command == "scan") return run_scan(cfg, os, es);
    if (cfg.command == "verify-lct") return run_verify_lct(cfg, os, es);
    if (cfg.command == "figure") {
        RunConfig inner = resolve_figure(cfg.figure_id, cfg.out);
        return dispatch(inner, os, es);
    }
    throw ConfigError("unknown command '" + cfg.command + "'");
}

}  // namespace detail_cli

// Executes a run; exceptions are mapped onto the ExitCode classes. Configs built in code get the
// same cross-field validation as parsed ones.
inline int run(const RunConfig& cfg, std::ostream& os = std::cout, std::ostream& es = std::cerr) {
    try {
        RunConfig checked = cfg;
        detail_cli::finalize(checked);
        return detail_cli::dispatch(checked, os, es);
    } catch (const ConfigError& e) {
        es << "config error: " << e.what() << "\n";
        return exit_usage;
    } catch (const SingularParameterError& e) {
        es << "error: " << e.what() << "\n";
        return exit_singular;
    } catch (const DegenerateMapError& e) {
        es << "error: " << e.what() << "\n";
        return exit_domain;
    } catch (const DomainError& e) {
        es << "error: " << e.what() << "\n";
        return exit_domain;
    } catch (const IntegrationError& e) {
        es << "error: " << e.what() << "\n";
        return exit_integration;
    } catch (const IoError& e) {
        es << "error: " << e.what() << "\n";
        return exit_io;
    } catch (const std::exception& e) {
        es << "internal error: " << e.what() << "\n";
        return exit_internal;
    }
}

// Full CLI entry point (argv form). Returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& os = std::cout,
                   std::ostream& es = std::cerr) {
    RunConfig cfg;
    CLI::App app{"two-strain vaccination model toolkit"};
    detail_cli::build_app(app, cfg);
    try {
        app.parse(argc, argv);
        const auto subs = app.get_subcommands();
        if (subs.size() != 1) throw ConfigError("exactly one subcommand required");
        cfg.command = subs.front()->get_name();
        detail_cli::finalize(cfg);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, os, es) == 0 ? exit_ok : exit_usage;
    } catch (const ConfigError& e) {
        es << "config error: " << e.what() << "\n";
        return exit_usage;
    }
    return run(cfg, os, es);
}

}  // namespace twostrain
