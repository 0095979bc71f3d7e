#include "msp/experiments.hpp"

#include "msp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace msp {

namespace {

InvariantRow row(std::string name, double measured, double tolerance, std::string detail) {
    InvariantRow r;
    r.name = std::move(name);
    r.measured = measured;
    r.tolerance = tolerance;
    r.verdict = std::isfinite(measured) && measured <= tolerance ? Verdict::Pass : Verdict::Fail;
    r.detail = std::move(detail);
    return r;
}

// A failing check must still produce a row; exceptions become FAIL rows.
void run(std::vector<InvariantRow>& out, const std::string& name,
         const std::function<InvariantRow()>& check) {
    try {
        out.push_back(check());
    } catch (const std::exception& e) {
        InvariantRow r;
        r.name = name;
        r.measured = std::numeric_limits<double>::infinity();
        r.verdict = Verdict::Fail;
        r.detail = std::string("threw: ") + e.what();
        out.push_back(r);
    }
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

}  // namespace

std::vector<InvariantRow> invariant_suite(const Scenario& sc) {
    const auto& cfg = sc.config;
    std::vector<InvariantRow> rows;
    const auto mixture = make_power_mixture({1.0, 1.0}, {0.5, 0.25});
    const std::vector<UtilitySpec> utilities{sc.utility, mixture};
    const auto xs = logspace(1e-2, 1e2, 31);
    const std::vector<double> ts{0.0, 0.25, 0.5, 0.9};
    const double T = 1.0;

    run(rows, "utility.assumptions", [&] {
        std::size_t warnings = 0;
        for (const auto& u : utilities) warnings += validate_assumptions(u).size();
        return row("utility.assumptions", static_cast<double>(warnings), 0.0,
                   "sampled concavity, Inada and increasing R warnings");
    });

    run(rows, "utility.inverse_marginal", [&] {
        double worst = 0.0;
        for (const auto& u : utilities) {
            for (double x : logspace(1e-3, 1e3, 121)) {
                worst = std::max(worst, rel(u.inverse_marginal(u.marginal(x)), x));
            }
        }
        return row("utility.inverse_marginal", worst, 1e-10, "max |I(U'(x)) - x| / x");
    });

    run(rows, "merton.terminal_condition", [&] {
        double worst = 0.0;
        for (const auto& u : utilities) {
            const auto sol = solve_merton(u, 0.5, T, MertonMethod::DualQuadrature, cfg.merton);
            for (double x : xs) worst = std::max(worst, std::abs(sol.value(T, x) - u.value(x)));
        }
        return row("merton.terminal_condition", worst, 0.0, "max |M(T,x) - U(x)|");
    });

    run(rows, "merton.increasing_concave", [&] {
        std::size_t violations = 0;
        for (const auto& u : utilities) {
            const auto sol = solve_merton(u, 0.5, T, MertonMethod::DualQuadrature, cfg.merton);
            for (double t : ts) {
                double prev = -std::numeric_limits<double>::infinity();
                for (double x : xs) {
                    const auto p = sol.evaluate(t, x);
                    if (!(p.dx > 0.0) || !(p.dxx < 0.0) || !(p.value > prev)) ++violations;
                    prev = p.value;
                }
            }
        }
        return row("merton.increasing_concave", static_cast<double>(violations), 0.0,
                   "points with M_x <= 0, M_xx >= 0 or M not increasing");
    });

    run(rows, "merton.decreasing_in_time", [&] {
        std::size_t violations = 0;
        for (const auto& u : utilities) {
            const auto sol = solve_merton(u, 0.5, T, MertonMethod::DualQuadrature, cfg.merton);
            for (double x : xs) {
                for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
                    if (!(sol.value(ts[k], x) > sol.value(ts[k + 1], x))) ++violations;
                }
            }
        }
        return row("merton.decreasing_in_time", static_cast<double>(violations), 0.0,
                   "points with M(t1,x) <= M(t2,x) for t1 < t2");
    });

    run(rows, "merton.increasing_in_sharpe", [&] {
        std::size_t violations = 0;
        for (const auto& u : utilities) {
            const auto lo = solve_merton(u, 0.3, T, MertonMethod::DualQuadrature, cfg.merton);
            const auto hi = solve_merton(u, 0.6, T, MertonMethod::DualQuadrature, cfg.merton);
            for (double x : xs) {
                if (!(hi.value(0.0, x) > lo.value(0.0, x))) ++violations;
            }
        }
        return row("merton.increasing_in_sharpe", static_cast<double>(violations), 0.0,
                   "points with M(lambda=0.6) <= M(lambda=0.3)");
    });

    run(rows, "merton.risk_tolerance_at_zero", [&] {
        double worst = 0.0;
        for (const auto& u : utilities) {
            const auto sol = solve_merton(u, 0.5, T, MertonMethod::DualQuadrature, cfg.merton);
            for (double t : ts) worst = std::max(worst, sol.risk_tolerance(t, 1e-8));
        }
        return row("merton.risk_tolerance_at_zero", worst, 1e-6, "max_t R(t, 1e-8)");
    });

    run(rows, "merton.closed_form_vs_dual", [&] {
        double worst = 0.0;
        const auto u = make_power_utility(0.5);
        for (double lambda : {0.2, 0.5, 1.0}) {
            const auto cf = solve_merton(u, lambda, T, MertonMethod::ClosedFormPower);
            const auto dual = solve_merton(u, lambda, T, MertonMethod::DualQuadrature, cfg.merton);
            for (double t : ts) {
                for (double x : xs) worst = std::max(worst, rel(dual.value(t, x), cf.value(t, x)));
            }
        }
        return row("merton.closed_form_vs_dual", worst, 1e-6, "max relative error, Power(0.5)");
    });

    run(rows, "merton.dual_vs_finite_difference", [&] {
        const auto dual = solve_merton(mixture, 0.5, T, MertonMethod::DualQuadrature, cfg.merton);
        const auto fd = solve_merton(mixture, 0.5, T, MertonMethod::FiniteDifference, cfg.merton);
        double worst = 0.0;
        for (double t : ts) {
            for (double x : logspace(0.1, 10.0, 25)) {
                worst = std::max(worst, rel(fd.value(t, x), dual.value(t, x)));
            }
        }
        return row("merton.dual_vs_finite_difference", worst, 1e-3,
                   "max relative error, mixture, x in [0.1, 10]");
    });

    run(rows, "merton.power_dk_identity", [&] {
        const double gamma = 0.5;
        const auto sol = solve_merton(make_power_utility(gamma), 0.5, T, MertonMethod::ClosedFormPower);
        const WealthFunction m = [&](double t, double x) { return sol.value(t, x); };
        double worst = 0.0;
        for (int k = 1; k <= 3; ++k) {
            // R^k d^k M / dx^k = gamma (gamma - 1) ... (gamma - k + 1) M / (1 - gamma)^k
            double c = 1.0;
            for (int j = 0; j < k; ++j) c *= (gamma - j) / (1.0 - gamma);
            const auto dk = apply_dk(sol, k, m);
            for (double x : logspace(0.1, 10.0, 11)) {
                worst = std::max(worst, rel(dk(0.0, x), c * sol.value(0.0, x)));
            }
        }
        return row("merton.power_dk_identity", worst, 1e-6, "R^k d^k M / dx^k against the power closed form");
    });

    run(rows, "merton.pde_residual", [&] {
        double worst = 0.0;
        for (const auto& u : utilities) {
            const auto sol = solve_merton(u, 0.5, T, MertonMethod::DualQuadrature, cfg.merton);
            for (double t : {0.0, 0.5}) {
                for (double x : logspace(0.1, 10.0, 9)) {
                    worst = std::max(worst, std::abs(residual_of_pde(sol, t, x)) /
                                                std::max(1.0, std::abs(sol.value(t, x))));
                }
            }
        }
        return row("merton.pde_residual", worst, 1e-6, "max |PDE residual| / max(1, |M|)");
    });

    run(rows, "merton.zero_sharpe", [&] {
        double worst = 0.0;
        for (const auto& u : utilities) {
            for (auto method : {MertonMethod::DualQuadrature, MertonMethod::FiniteDifference}) {
                const auto sol = solve_merton(u, 0.0, T, method, cfg.merton);
                for (double t : ts) {
                    for (double x : xs) {
                        const auto p = sol.evaluate(t, x);
                        worst = std::max({worst, std::abs(p.value - u.value(x)),
                                          std::abs(p.dt), std::abs(p.dx - u.marginal(x))});
                    }
                }
            }
        }
        return row("merton.zero_sharpe", worst, 0.0, "lambda = 0: max |M - U|, |M_t|, |M_x - U'|");
    });

    const double z_lo = cfg.z0 - 0.5, z_hi = cfg.z0 + 0.5;
    const auto zs = linspace(z_lo, z_hi, 5);
    const auto& model = sc.averages->model();

    run(rows, "factors.centering", [&] {
        double worst = 0.0;
        for (double z : zs) {
            worst = std::max(worst, std::abs(PoissonSolution(model, z).centering_error()));
        }
        return row("factors.centering", worst, 1e-10, "|<lambda^2 - lambda_bar^2>|");
    });

    run(rows, "factors.cauchy_schwarz", [&] {
        double worst = -std::numeric_limits<double>::infinity();
        for (double z : zs) {
            const auto a = sc.averages->at(z);
            worst = std::max(worst, std::abs(a.lambda_hat) - a.lambda_bar);
        }
        return row("factors.cauchy_schwarz", worst, 1e-12, "max |lambda_hat| - lambda_bar");
    });

    run(rows, "factors.poisson_equation", [&] {
        // nu^2 theta'' + (m - y) theta' = lambda^2 - lambda_bar^2, checked by differencing theta'.
        const auto& fast = model.fast();
        double worst = 0.0;
        for (double z : zs) {
            const PoissonSolution p(model, z);
            for (double y : linspace(fast.mean - 2.5 * fast.nu, fast.mean + 2.5 * fast.nu, 11)) {
                const double h = 1e-3 * std::max(1.0, fast.nu);
                const double d2 = richardson_derivative([&](double s) { return p.dy(s); }, y, h, 1);
                const double lhs = fast.nu * fast.nu * d2 + fast.drift(y) * p.dy(y);
                const double l = model.sharpe(y, z);
                worst = std::max(worst, std::abs(lhs - (l * l - p.lambda_bar_squared())));
            }
        }
        return row("factors.poisson_equation", worst, 1e-6, "max |L0 theta - (lambda^2 - lambda_bar^2)|");
    });

    run(rows, "factors.ou_linear_oracle", [&] {
        double worst = 0.0;
        for (double nu : {0.3, 0.5, 1.0}) {
            SlowFactor slow{[](double) { return 0.0; }, [](double) { return 0.0; }};
            const MarketModel m(FastFactor{0.0, nu}, slow, [](double y, double) { return y; },
                                [](double, double) { return 1.0; }, Correlations{}, Scales{0.1, 0.1});
            const auto a = compute_averages(m, 0.0);
            worst = std::max({worst, rel(a.B, -std::sqrt(2.0) * nu * nu * nu), rel(a.lambda_bar, nu)});
        }
        return row("factors.ou_linear_oracle", worst, 1e-8,
                   "lambda = y: B vs -sqrt(2) nu^3 and lambda_bar vs nu");
    });

    run(rows, "asymptotics.terminal_flattening", [&] {
        double worst = 0.0;
        for (double z : zs) {
            for (double x : xs) {
                worst = std::max({worst, std::abs(sc.bundle->fast_correction(cfg.horizon, x, z)),
                                  std::abs(sc.bundle->slow_correction(cfg.horizon, x, z))});
            }
        }
        return row("asymptotics.terminal_flattening", worst, 0.0, "max |v10(T)|, |v01(T)|");
    });

    run(rows, "asymptotics.q_terminal", [&] {
        double worst = 0.0;
        for (double z : zs) {
            for (double x : xs) {
                worst = std::max(worst, rel(sc.bundle->q(cfg.horizon, x, z), sc.utility.value(x)));
            }
        }
        return row("asymptotics.q_terminal", worst, 1e-14, "max |Q(T,x,z) - U(x)| / U(x)");
    });

    run(rows, "asymptotics.q_zero_scales", [&] {
        double worst = 0.0;
        for (double z : zs) {
            for (double x : xs) {
                worst = std::max(worst, std::abs(sc.bundle->q(0.0, x, z, 0.0, 0.0) -
                                                 sc.bundle->leading_order(0.0, x, z)));
            }
        }
        return row("asymptotics.q_zero_scales", worst, 0.0, "max |Q(eps=delta=0) - v0|");
    });

    if (sc.utility.kind() == UtilityKind::Power) {
        run(rows, "asymptotics.power_proportionality", [&] {
            double worst = 0.0;
            for (double z : zs) {
                for (double t : {0.0, 0.5 * cfg.horizon}) {
                    double lo10 = INFINITY, hi10 = -INFINITY, lo01 = INFINITY, hi01 = -INFINITY;
                    for (double x : logspace(0.1, 10.0, 11)) {
                        const double v0 = sc.bundle->leading_order(t, x, z);
                        const double r10 = sc.bundle->fast_correction(t, x, z) / v0;
                        const double r01 = sc.bundle->slow_correction(t, x, z) / v0;
                        lo10 = std::min(lo10, r10);
                        hi10 = std::max(hi10, r10);
                        lo01 = std::min(lo01, r01);
                        hi01 = std::max(hi01, r01);
                    }
                    worst = std::max(worst, (hi10 - lo10) / std::max(1e-300, std::abs(hi10)));
                    if (hi01 != 0.0) worst = std::max(worst, (hi01 - lo01) / std::abs(hi01));
                }
            }
            return row("asymptotics.power_proportionality", worst, 1e-8,
                       "relative spread of v10/v0 and v01/v0 across x");
        });
    }

    run(rows, "asymptotics.vega_gamma", [&] {
        double worst = 0.0;
        for (double z : zs) {
            for (double t : {0.0, 0.5 * cfg.horizon}) {
                for (double x : logspace(0.1, 10.0, 7)) {
                    worst = std::max(worst, sc.bundle->vega_gamma_check(t, x, z));
                }
            }
        }
        const double tol = sc.utility.kind() == UtilityKind::Power ? 1e-6 : 1e-3;
        return row("asymptotics.vega_gamma", worst, tol, "max vega-gamma residual");
    });

    run(rows, "model.correlation_rejection", [&] {
        auto bad = cfg;
        bad.rho = Correlations{0.9, 0.9, -0.9};
        const double det = correlation_determinant(bad.rho);
        bool rejected = false;
        try {
            (void)build_model(bad, Scales{0.1, 0.1});
        } catch (const std::invalid_argument&) {
            rejected = true;
        }
        std::ostringstream os;
        os << "rho = (0.9, 0.9, -0.9), determinant " << det << (rejected ? ", rejected" : ", accepted");
        return row("model.correlation_rejection", rejected ? 0.0 : 1.0, 0.0, os.str());
    });

    run(rows, "experiments.slope_fit_recovery", [&] {
        double worst = 0.0;
        const std::vector<double> eps{0.4, 0.2, 0.1, 0.05};
        for (double p : {0.5, 1.0, 2.0}) {
            std::vector<double> scale, res;
            for (double e : eps) {
                scale.push_back(2.0 * e);
                res.push_back(0.37 * std::pow(e, p));
            }
            worst = std::max(worst, std::abs(fit_loglog_slope(scale, res).slope - p));
        }
        return row("experiments.slope_fit_recovery", worst, 1e-10, "synthetic c eps^p, p in {0.5, 1, 2}");
    });

    SimConfig small = cfg.sim_config(400, false);
    const auto cell = sc.model_at(cfg.epsilons.front(), cfg.deltas.front());

    run(rows, "simulate.zero_strategy", [&] {
        const auto ens = simulate_paths(cell, StrategySpec::zero(), *sc.bundle, small);
        double worst = 0.0;
        for (const auto& p : ens.paths) worst = std::max(worst, std::abs(p.x_T - cfg.x0));
        const auto est = estimate_value(ens);
        worst = std::max({worst, std::abs(est.mean - sc.utility.value(cfg.x0)), est.standard_error});
        return row("simulate.zero_strategy", worst, 0.0, "max |X_T - x0|, |mean - U(x0)|, SE");
    });

    run(rows, "simulate.worker_determinism", [&] {
        auto a_cfg = small, b_cfg = small;
        a_cfg.workers = 1;
        b_cfg.workers = 3;
        const auto a = simulate_paths(cell, StrategySpec::pi_zero(), *sc.bundle, a_cfg);
        const auto b = simulate_paths(cell, StrategySpec::pi_zero(), *sc.bundle, b_cfg);
        std::size_t mismatches = a.paths.size() == b.paths.size() ? 0 : 1;
        for (std::size_t i = 0; i < std::min(a.paths.size(), b.paths.size()); ++i) {
            if (a.paths[i].x_T != b.paths[i].x_T || a.paths[i].control != b.paths[i].control) ++mismatches;
        }
        return row("simulate.worker_determinism", static_cast<double>(mismatches), 0.0,
                   "paths differing between 1 and 3 workers");
    });

    run(rows, "simulate.nhat_pi_zero", [&] {
        const auto ens = simulate_paths(cell, StrategySpec::pi_zero(), *sc.bundle, small);
        double worst = 0.0;
        for (const auto& p : ens.paths) worst = std::max(worst, std::abs(p.nhat));
        return row("simulate.nhat_pi_zero", worst, 0.0, "pi = pi0: max |N^_T|");
    });

    return rows;
}

}  // namespace msp
