#include "msp/experiments.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace msp {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitVerdict = 3;

struct Options {
    std::string config = "default";
    std::string out;
    unsigned workers = 0;
    std::size_t paths = 0;
    bool strict = false;
    bool path_csv = false;
    // solve-merton
    double sharpe = -1.0;
    // simulate
    std::string strategy = "pi_zero";
    double epsilon = -1.0;
    double delta = -1.0;
};

std::string output_dir(const Options& o, const RunConfig& cfg) {
    if (!o.out.empty()) return o.out;
    if (const char* env = std::getenv("MSP_OUTPUT_DIR"); env && *env) return env;
    return cfg.output_dir;
}

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

int exit_for(Verdict v, bool strict, const std::string& what) {
    if (v == Verdict::Fail) {
        std::cerr << what << ": FAIL\n";
        return kExitVerdict;
    }
    if (v == Verdict::Unresolved) {
        std::cerr << "warning: " << what << " is UNRESOLVED; more paths are needed\n";
        return strict ? kExitVerdict : kExitOk;
    }
    return kExitOk;
}

Verdict combine(Verdict a, Verdict b) {
    if (a == Verdict::Fail || b == Verdict::Fail) return Verdict::Fail;
    if (a == Verdict::Unresolved || b == Verdict::Unresolved) return Verdict::Unresolved;
    return Verdict::Pass;
}

Verdict invariants_verdict(const std::vector<InvariantRow>& rows) {
    for (const auto& r : rows) {
        if (r.verdict != Verdict::Pass) return Verdict::Fail;
    }
    return Verdict::Pass;
}

int cmd_solve_merton(const Options& o, const RunConfig& cfg, const std::string& dir) {
    const auto u = build_utility(cfg);
    const double sharpe = o.sharpe >= 0.0 ? o.sharpe : 0.5;
    auto method = resolve_merton_method(cfg, u);
    const auto sol = solve_merton(u, sharpe, cfg.horizon, method, cfg.merton);
    std::ostringstream os;
    os << "t,x,value,dx,dxx,risk_tolerance,pde_residual\n";
    for (double t : {0.0, 0.5 * cfg.horizon}) {
        for (double x : logspace(0.1, 10.0, 25)) {
            const auto p = sol.evaluate(t, x);
            os << format_number(t) << ',' << format_number(x) << ',' << format_number(p.value) << ','
               << format_number(p.dx) << ',' << format_number(p.dxx) << ','
               << format_number(p.risk_tolerance) << ','
               << format_number(residual_of_pde(sol, t, x)) << '\n';
        }
    }
    write_text(os.str(), join(dir, "merton.csv"));
    std::cout << "method " << to_string(method) << ", lambda " << format_number(sharpe)
              << ", M(0, x0) = " << format_number(sol.value(0.0, cfg.x0)) << '\n';
    return kExitOk;
}

int cmd_expand(const Scenario& sc, const std::string& dir) {
    const auto& cfg = sc.config;
    std::ostringstream os;
    os << "epsilon,delta,x,z,v0,v10,v01,q,pi0\n";
    for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
        for (double z : linspace(cfg.z0 - 0.5, cfg.z0 + 0.5, 5)) {
            for (double x : logspace(0.1, 10.0, 9)) {
                const auto& b = *sc.bundle;
                os << format_number(cfg.epsilons[i]) << ',' << format_number(cfg.deltas[i]) << ','
                   << format_number(x) << ',' << format_number(z) << ','
                   << format_number(b.leading_order(0.0, x, z)) << ','
                   << format_number(b.fast_correction(0.0, x, z)) << ','
                   << format_number(b.slow_correction(0.0, x, z)) << ','
                   << format_number(b.q(0.0, x, z, cfg.epsilons[i], cfg.deltas[i])) << ','
                   << format_number(b.pi_zero(0.0, x, cfg.y0, z)) << '\n';
            }
        }
    }
    write_text(os.str(), join(dir, "expansion.csv"));
    std::cout << "Q(0, x0, z0) = "
              << format_number(sc.bundle->q(0.0, cfg.x0, cfg.z0, cfg.epsilons.front(), cfg.deltas.front()))
              << " at the first grid cell\n";
    return kExitOk;
}

int cmd_simulate(const Options& o, const Scenario& sc, const std::string& dir) {
    const auto& cfg = sc.config;
    const double eps = o.epsilon > 0.0 ? o.epsilon : cfg.epsilons.front();
    const double delta = o.delta > 0.0 ? o.delta : cfg.deltas.front();
    const auto model = sc.model_at(eps, delta);
    const auto strategy = make_strategy(o.strategy, cfg);
    // Plain value estimates run without the control variate.
    const auto sim = cfg.sim_config(cfg.paths, false);
    const auto ens = simulate_paths(model, strategy, *sc.bundle, sim);
    const auto est = estimate_value(ens);
    const auto nhat = nhat_diagnostic(ens);
    nlohmann::ordered_json j{{"strategy", o.strategy},
                             {"epsilon", eps},
                             {"delta", delta},
                             {"dt", ens.dt},
                             {"steps", ens.steps},
                             {"paths", est.n},
                             {"effective_n", est.effective_n},
                             {"mean", est.mean},
                             {"standard_error", est.standard_error},
                             {"floor_hits", est.floor_hits},
                             {"moments", {est.moments[0], est.moments[1], est.moments[2], est.moments[3]}},
                             {"q", sc.bundle->q(0.0, cfg.x0, cfg.z0, eps, delta)},
                             {"nhat_pass", nhat.pass}};
    if (ens.ntilde_available) j["ntilde_pass"] = ntilde_diagnostic(ens).pass;
    write_text(j.dump(2) + "\n", join(dir, "simulate.json"));
    if (cfg.path_csv || o.path_csv) write_path_csv(ens, join(dir, "paths.csv"));
    std::cout << o.strategy << ": V = " << format_number(est.mean) << " +- "
              << format_number(est.standard_error) << '\n';
    return kExitOk;
}

void print_residual(const ResidualStudy& s) {
    for (const auto& r : s.rows) {
        std::cout << "  eps " << r.epsilon << " delta " << r.delta << ": E = " << r.residual
                  << " (SE " << r.se << ")" << (r.resolved ? "" : " unresolved") << '\n';
    }
    std::cout << "residual study: slope " << s.fit.slope << " +- " << s.fit.slope_se << " -> "
              << to_string(s.verdict) << '\n';
}

void print_optimality(const OptimalityStudy& s) {
    for (const auto& c : s.challengers) {
        std::cout << "  " << c.challenger << ": " << to_string(c.verdict) << '\n';
    }
    std::cout << "optimality study: " << to_string(s.verdict) << '\n';
}

void print_invariants(const std::vector<InvariantRow>& rows) {
    for (const auto& r : rows) {
        std::cout << "  " << to_string(r.verdict) << "  " << r.name << "  " << r.measured
                  << " <= " << r.tolerance << '\n';
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Multiscale portfolio asymptotics: Merton solver, expansion and Monte Carlo studies"};
    app.require_subcommand(1);
    Options o;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config,-c", o.config, "configuration file, or 'default'");
        sub->add_option("--out,-o", o.out, "output directory (overrides MSP_OUTPUT_DIR and the config)");
        sub->add_option("--workers,-j", o.workers, "worker threads");
        sub->add_option("--paths", o.paths, "override simulation.paths");
        sub->add_flag("--strict", o.strict, "treat UNRESOLVED verdicts as failures");
    };
    auto* merton = app.add_subcommand("solve-merton", "solve the constant-Sharpe Merton problem");
    add_common(merton);
    merton->add_option("--lambda", o.sharpe, "Sharpe ratio (default 0.5)");
    auto* expand = app.add_subcommand("expand", "evaluate v0, v10, v01, Q and pi0");
    add_common(expand);
    auto* simulate = app.add_subcommand("simulate", "estimate one strategy's value");
    add_common(simulate);
    simulate->add_option("--strategy", o.strategy, "pi_zero, perturbed, scaled or zero");
    simulate->add_option("--epsilon", o.epsilon, "fast scale (default: first grid cell)");
    simulate->add_option("--delta", o.delta, "slow scale (default: first grid cell)");
    simulate->add_flag("--path-csv", o.path_csv, "write per-path terminal records");
    auto* residual = app.add_subcommand("residual-study", "residual order of the first-order expansion");
    add_common(residual);
    auto* optimality = app.add_subcommand("optimality-study", "asymptotic optimality of pi0");
    add_common(optimality);
    auto* invariants = app.add_subcommand("invariants", "module invariant suite");
    add_common(invariants);
    auto* all = app.add_subcommand("all", "every study and the invariant suite");
    add_common(all);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    RunConfig cfg;
    std::string dir;
    try {
        cfg = load_config(o.config);
        if (o.workers > 0) cfg.workers = o.workers;
        if (o.paths > 0) cfg.paths = o.paths;
        validate_config(cfg, o.config);
        dir = output_dir(o, cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        if (merton->parsed()) return cmd_solve_merton(o, cfg, dir);
        Scenario sc;
        try {
            sc = build_scenario(cfg);
        } catch (const ConfigError& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return kExitConfig;
        }
        if (expand->parsed()) return cmd_expand(sc, dir);
        if (simulate->parsed()) return cmd_simulate(o, sc, dir);

        const bool do_res = residual->parsed() || all->parsed();
        const bool do_opt = optimality->parsed() || all->parsed();
        const bool do_inv = invariants->parsed() || all->parsed();
        ResidualStudy res;
        OptimalityStudy opt;
        std::vector<InvariantRow> inv;
        Verdict verdict = Verdict::Pass;
        if (do_inv) {
            inv = invariant_suite(sc);
            write_invariants_csv(inv, join(dir, "invariants.csv"));
            print_invariants(inv);
            verdict = combine(verdict, invariants_verdict(inv));
        }
        if (do_res) {
            res = residual_order_study(sc);
            write_residual_csv(res, join(dir, "residual_study.csv"));
            print_residual(res);
            verdict = combine(verdict, res.verdict);
        }
        if (do_opt) {
            opt = optimality_study(sc);
            write_optimality_csv(opt, join(dir, "optimality_study.csv"));
            print_optimality(opt);
            verdict = combine(verdict, opt.verdict);
        }
        write_text(summary_json(cfg, do_res ? &res : nullptr, do_opt ? &opt : nullptr,
                                do_inv ? &inv : nullptr),
                   join(dir, "summary.json"));
        return exit_for(verdict, o.strict, "verdict");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace msp
