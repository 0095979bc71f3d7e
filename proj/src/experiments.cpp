#include "msp/experiments.hpp"

#include "msp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace msp {

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "PASS";
        case Verdict::Fail: return "FAIL";
        case Verdict::Unresolved: return "UNRESOLVED";
    }
    return "FAIL";
}

MarketModel Scenario::model_at(double epsilon, double delta) const {
    return build_model(config, Scales{epsilon, delta});
}

Scenario build_scenario(const RunConfig& cfg) {
    validate_config(cfg);
    Scenario s;
    s.config = cfg;
    s.utility = build_utility(cfg);
    const auto model = build_model(cfg, Scales{cfg.epsilons.front(), cfg.deltas.front()});
    s.averages = std::make_shared<const FactorAverages>(model, cfg.factors);
    ExpansionOptions opt;
    opt.method = resolve_merton_method(cfg, s.utility);
    opt.merton = cfg.merton;
    s.bundle = std::make_shared<const ExpansionBundle>(s.averages, s.utility, cfg.horizon, opt);
    return s;
}

SlopeFit fit_loglog_slope(std::span<const double> scale, std::span<const double> residual,
                          std::span<const double> weights) {
    const std::size_t n = scale.size();
    if (n < 2 || residual.size() != n || (!weights.empty() && weights.size() != n)) {
        throw std::invalid_argument("fit_loglog_slope: need >= 2 aligned points");
    }
    std::vector<double> x(n), y(n), w(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(scale[i] > 0.0) || residual[i] == 0.0) {
            throw std::invalid_argument("fit_loglog_slope: scales must be > 0 and residuals nonzero");
        }
        x[i] = std::log(scale[i]);
        y[i] = std::log(std::abs(residual[i]));
        if (!weights.empty()) w[i] = weights[i];
    }
    const double sw = std::accumulate(w.begin(), w.end(), 0.0);
    double xm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        xm += w[i] * x[i];
        ym += w[i] * y[i];
    }
    xm /= sw;
    ym /= sw;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += w[i] * (x[i] - xm) * (x[i] - xm);
        sxy += w[i] * (x[i] - xm) * (y[i] - ym);
        syy += w[i] * (y[i] - ym) * (y[i] - ym);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("fit_loglog_slope: scales are not distinct");
    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = ym - fit.slope * xm;
    double chi2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - fit.intercept - fit.slope * x[i];
        chi2 += w[i] * r * r;
    }
    const double dispersion = n > 2 ? std::max(1.0, chi2 / static_cast<double>(n - 2)) : 1.0;
    fit.slope_se = std::sqrt(dispersion / sxx);
    fit.r2 = syy > 0.0 ? 1.0 - chi2 / syy : 1.0;
    return fit;
}

ResidualStudy residual_order_study(const Scenario& sc) {
    const auto& cfg = sc.config;
    std::vector<double> sums;
    for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
        const double s = cfg.epsilons[i] + cfg.deltas[i];
        if (std::none_of(sums.begin(), sums.end(), [&](double v) { return v == s; })) sums.push_back(s);
    }
    if (sums.size() < 3) {
        throw std::invalid_argument("residual study: need >= 3 distinct (epsilon, delta) grid points");
    }
    ResidualStudy study;
    const auto strategy = StrategySpec::pi_zero();
    for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
        ResidualRow row;
        row.epsilon = cfg.epsilons[i];
        row.delta = cfg.deltas[i];
        const auto model = sc.model_at(row.epsilon, row.delta);
        const auto est = estimate_value(
            model, strategy, *sc.bundle, cfg.sim_config(cfg.paths, cfg.residual_control_variate));
        row.v0 = sc.bundle->leading_order(0.0, cfg.x0, cfg.z0);
        row.q = sc.bundle->q(0.0, cfg.x0, cfg.z0, row.epsilon, row.delta);
        row.v_hat = est.mean;
        row.se = est.standard_error;
        row.residual = row.v_hat - row.q;
        row.resolved = std::abs(row.residual) > cfg.tolerances.resolution_sigmas * row.se;
        row.floor_hits = est.floor_hits;
        study.rows.push_back(row);
    }
    const bool all_resolved =
        std::all_of(study.rows.begin(), study.rows.end(), [](const auto& r) { return r.resolved; });
    if (!all_resolved) {
        study.verdict = Verdict::Unresolved;
        bool nonzero = std::all_of(study.rows.begin(), study.rows.end(),
                                   [](const auto& r) { return r.residual != 0.0 && r.se > 0.0; });
        if (!nonzero) return study;
    }
    std::vector<double> scale, res, w;
    for (const auto& r : study.rows) {
        scale.push_back(r.epsilon + r.delta);
        res.push_back(r.residual);
        w.push_back(r.se > 0.0 ? (r.residual / r.se) * (r.residual / r.se) : 1.0);
    }
    study.fit = fit_loglog_slope(scale, res, w);
    if (all_resolved) {
        const bool in_band = study.fit.slope >= cfg.tolerances.slope_min &&
                             study.fit.slope <= cfg.tolerances.slope_max;
        study.verdict = in_band ? Verdict::Pass : Verdict::Fail;
    }
    return study;
}

StrategySpec make_strategy(const std::string& name, const RunConfig& cfg) {
    if (name == "pi_zero") return StrategySpec::pi_zero();
    if (name == "zero") return StrategySpec::zero();
    if (name == "scaled") return StrategySpec::scaled(StrategySpec::pi_zero(), cfg.scale_factor);
    if (name == "perturbed") {
        auto s = StrategySpec::perturbed(StrategySpec::pi_zero(), default_fast_bump(cfg.fast_bump),
                                         default_slow_bump(cfg.slow_bump), cfg.alpha, cfg.beta);
        return s;
    }
    throw std::invalid_argument("unknown strategy '" + name + "'");
}

bool decreases_or_stabilizes(std::span<const double> ell, std::span<const double> se,
                             double k_sigma, double rel) {
    for (std::size_t k = 0; k + 1 < ell.size(); ++k) {
        const double slack = k_sigma * std::hypot(se[k], se[k + 1]) + rel * std::abs(ell[k]);
        if (ell[k + 1] > ell[k] + slack) return false;
    }
    return true;
}

namespace {

void merge(MonotonicityVerdict& into, const MonotonicityVerdict& v) {
    into.paths += v.paths;
    into.violating_paths += v.violating_paths;
    into.positive_increments += v.positive_increments;
    into.flat_increments += v.flat_increments;
    into.max_total = into.paths == v.paths ? v.max_total : std::max(into.max_total, v.max_total);
    into.pass = into.violating_paths == 0;
}

}  // namespace

OptimalityStudy optimality_study(const Scenario& sc) {
    const auto& cfg = sc.config;
    const auto& roster = cfg.roster;
    auto has = [&](const char* n) { return std::find(roster.begin(), roster.end(), n) != roster.end(); };
    if (!has("pi_zero") || !has("perturbed") || !(has("scaled") || has("zero"))) {
        throw std::invalid_argument(
            "optimality study: roster needs pi_zero, perturbed and one of scaled or zero");
    }
    OptimalityStudy study;
    for (const auto& name : roster) {
        ChallengerSummary s;
        s.challenger = name;
        study.challengers.push_back(s);
    }
    // Cells ordered toward small scales so the trend test reads left to right.
    std::vector<std::size_t> order(cfg.epsilons.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return cfg.epsilons[a] + cfg.deltas[a] > cfg.epsilons[b] + cfg.deltas[b];
    });

    const auto sim = cfg.sim_config(cfg.optimality_paths, cfg.optimality_control_variate);
    const auto base_strategy = StrategySpec::pi_zero();
    for (std::size_t idx : order) {
        const double eps = cfg.epsilons[idx], delta = cfg.deltas[idx];
        const auto model = sc.model_at(eps, delta);
        const auto base = simulate_paths(model, base_strategy, *sc.bundle, sim);
        const auto base_est = estimate_value(base);
        const double norm = std::sqrt(eps) + std::sqrt(delta);
        for (std::size_t c = 0; c < roster.size(); ++c) {
            auto& summary = study.challengers[c];
            OptimalityRow row;
            row.epsilon = eps;
            row.delta = delta;
            row.challenger = roster[c];
            row.v_pi0 = base_est.mean;
            row.se_pi0 = base_est.standard_error;
            if (roster[c] == "pi_zero") {
                // Identical strategy and random numbers: the difference is exactly zero.
                row.v_hat = base_est.mean;
                row.se = base_est.standard_error;
                summary.ntilde_available = false;
                merge(summary.nhat, nhat_diagnostic(base));
            } else {
                const auto strategy = make_strategy(roster[c], cfg);
                const auto ens = simulate_paths(model, strategy, *sc.bundle, sim);
                const auto est = estimate_value(ens);
                const auto diff = paired_difference(ens, base);
                row.v_hat = est.mean;
                row.se = est.standard_error;
                row.ell_hat = diff.mean / norm;
                row.ell_se = diff.standard_error / norm;
                merge(summary.nhat, nhat_diagnostic(ens));
                if (ens.ntilde_available) {
                    summary.ntilde_available = true;
                    merge(summary.ntilde, ntilde_diagnostic(ens));
                }
            }
            const bool finite = std::isfinite(row.ell_hat) && std::isfinite(row.ell_se);
            if (!finite) row.verdict = Verdict::Unresolved;
            else row.verdict = row.ell_hat <= cfg.tolerances.optimality_sigmas * row.ell_se
                                   ? Verdict::Pass : Verdict::Fail;
            study.rows.push_back(row);
        }
    }
    bool any_fail = false, any_unresolved = false;
    for (auto& s : study.challengers) {
        std::vector<double> ell, se;
        bool fail = false, unresolved = false;
        for (const auto& r : study.rows) {
            if (r.challenger != s.challenger) continue;
            ell.push_back(r.ell_hat);
            se.push_back(r.ell_se);
            fail |= r.verdict == Verdict::Fail;
            unresolved |= r.verdict == Verdict::Unresolved;
        }
        s.trend_ok = decreases_or_stabilizes(ell, se, cfg.tolerances.optimality_sigmas,
                                             cfg.tolerances.stabilize_relative);
        bool signs = s.nhat.pass && (!s.ntilde_available || s.ntilde.pass);
        if (fail || !s.trend_ok || !signs) s.verdict = Verdict::Fail;
        else if (unresolved) s.verdict = Verdict::Unresolved;
        else s.verdict = Verdict::Pass;
        any_fail |= s.verdict == Verdict::Fail;
        any_unresolved |= s.verdict == Verdict::Unresolved;
    }
    study.verdict = any_fail ? Verdict::Fail : any_unresolved ? Verdict::Unresolved : Verdict::Pass;
    return study;
}

}  // namespace msp
