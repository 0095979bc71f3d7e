#include "msp/simulate.hpp"

#include "msp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>
#include <thread>

namespace msp {

StrategySpec StrategySpec::pi_zero() { return StrategySpec{}; }

StrategySpec StrategySpec::zero() {
    StrategySpec s;
    s.kind = StrategyKind::Zero;
    s.label = "zero";
    return s;
}

StrategySpec StrategySpec::scaled(StrategySpec base, double factor) {
    StrategySpec s;
    s.kind = StrategyKind::Scaled;
    s.label = "scaled(" + base.label + "," + std::to_string(factor) + ")";
    s.base = std::make_shared<const StrategySpec>(std::move(base));
    s.factor = factor;
    return s;
}

StrategySpec StrategySpec::perturbed(StrategySpec base, BumpFunction fast_bump,
                                     BumpFunction slow_bump, double alpha, double beta) {
    if (!(alpha > 0.0) || !(beta > 0.0)) {
        throw std::invalid_argument("perturbed strategy: alpha and beta must be positive");
    }
    StrategySpec s;
    s.kind = StrategyKind::Perturbed;
    s.label = "perturbed(" + base.label + ")";
    s.base = std::make_shared<const StrategySpec>(std::move(base));
    s.fast_bump = std::move(fast_bump);
    s.slow_bump = std::move(slow_bump);
    s.alpha = alpha;
    s.beta = beta;
    return s;
}

double StrategySpec::bump(const StepContext& ctx) const {
    if (kind != StrategyKind::Perturbed) return 0.0;
    double out = 0.0;
    if (fast_bump) out += std::pow(ctx.epsilon, alpha) * fast_bump(ctx);
    if (slow_bump) out += std::pow(ctx.delta, beta) * slow_bump(ctx);
    return out;
}

double StrategySpec::position(const StepContext& ctx) const {
    switch (kind) {
        case StrategyKind::PiZero: return ctx.pi0;
        case StrategyKind::Zero: return 0.0;
        case StrategyKind::Scaled: return factor * base->position(ctx);
        case StrategyKind::Perturbed: return base->position(ctx) + bump(ctx);
    }
    return 0.0;
}

BumpFunction default_fast_bump(double c) {
    return [c](const StepContext& ctx) { return c * std::min(1.0 + std::abs(ctx.y), ctx.x); };
}

BumpFunction default_slow_bump(double c) {
    return [c](const StepContext& ctx) { return c * ctx.v0.risk_tolerance; };
}

double resolve_time_step(const SimConfig& cfg, const Scales& scales) {
    const double resolution = std::min(scales.epsilon, scales.delta);
    if (cfg.dt > 0.0) {
        if (cfg.dt > resolution / 20.0 * (1.0 + 1e-12)) {
            throw std::invalid_argument("simulation: dt=" + std::to_string(cfg.dt) +
                                        " exceeds min(eps, delta)/20");
        }
        return cfg.horizon / std::ceil(cfg.horizon / cfg.dt - 1e-9);
    }
    if (!(cfg.dt_fraction > 0.0) || cfg.dt_fraction > 0.05) {
        throw std::invalid_argument("simulation: dt_fraction must lie in (0, 0.05]");
    }
    return cfg.horizon / std::ceil(cfg.horizon / (cfg.dt_fraction * resolution) - 1e-9);
}

namespace {

struct PathState {
    double x, log_s, y, z;
    bool absorbed = false;
};

class PairSimulator {
public:
    PairSimulator(const MarketModel& model, const StrategySpec& strategy,
                  const ExpansionBundle& bundle, const SimConfig& cfg, double dt, std::size_t steps,
                  bool ntilde)
        : model_(model), strategy_(strategy), bundle_(bundle), cfg_(cfg), dt_(dt), steps_(steps),
          ntilde_(ntilde), eps_(model.scales().epsilon), delta_(model.scales().delta),
          sqrt_dt_(std::sqrt(dt)), decay_(std::exp(-dt / eps_)),
          ou_sd_(model.fast().nu * std::sqrt(-std::expm1(-2.0 * dt / eps_))),
          chol_(model.cholesky()), utility_(bundle.utility()) {}

    void run(std::size_t pair, PathRecord* out, std::size_t count) const {
        std::seed_seq seq{static_cast<std::uint32_t>(cfg_.seed), static_cast<std::uint32_t>(cfg_.seed >> 32),
                          static_cast<std::uint32_t>(pair), static_cast<std::uint32_t>(pair >> 32)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> normal;

        PathState st[2];
        for (std::size_t k = 0; k < count; ++k) {
            st[k] = {cfg_.x0, std::log(cfg_.s0), cfg_.y0, cfg_.z0};
            out[k] = PathRecord{};
            out[k].index = pair * count + k;
        }
        for (std::size_t n = 0; n < steps_; ++n) {
            const double t = dt_ * static_cast<double>(n);
            const double g1 = normal(rng), g2 = normal(rng), g3 = normal(rng);
            for (std::size_t k = 0; k < count; ++k) {
                if (out[k].failed) continue;
                const double sign = k == 0 ? 1.0 : -1.0;
                step(t, sign * g1, sign * g2, sign * g3, st[k], out[k]);
            }
        }
        for (std::size_t k = 0; k < count; ++k) {
            auto& r = out[k];
            r.x_T = st[k].x;
            r.s_T = std::exp(st[k].log_s);
            r.y_T = st[k].y;
            r.z_T = st[k].z;
            if (r.failed) continue;
            r.utility = st[k].x > 0.0 ? utility_.value(st[k].x) : 0.0;
            if (!std::isfinite(r.utility)) r.failed = true;
        }
    }

private:
    void step(double t, double g1, double g2, double g3, PathState& s, PathRecord& rec) const {
        const auto& L = chol_;
        const double dw = sqrt_dt_ * g1;
        const double dwy = sqrt_dt_ * (L[3] * g1 + L[4] * g2);
        const double dwz = sqrt_dt_ * (L[6] * g1 + L[7] * g2 + L[8] * g3);

        const double lambda = model_.sharpe(s.y, s.z);
        const double sigma = model_.volatility(s.y, s.z);
        const double mu = lambda * sigma;

        double pi = 0.0;
        if (!s.absorbed) {
            StepContext ctx;
            ctx.t = t;
            ctx.x = s.x;
            ctx.y = s.y;
            ctx.z = s.z;
            ctx.epsilon = eps_;
            ctx.delta = delta_;
            ctx.v0 = bundle_.v0_point(t, s.x, s.z);
            ctx.pi0 = lambda / sigma * ctx.v0.risk_tolerance;
            pi = strategy_.position(ctx);

            const double half_var = 0.5 * sigma * sigma * ctx.v0.dxx * dt_;
            const double gap = pi - ctx.pi0;
            const double dnhat = half_var * gap * gap;
            rec.nhat += dnhat;
            if (dnhat > 0.0 || std::isnan(dnhat)) ++rec.nhat_positive;
            else if (dnhat == 0.0 && gap != 0.0) ++rec.nhat_flat;
            if (ntilde_) {
                const double b = strategy_.bump(ctx);
                const double dntilde = half_var * b * b;
                rec.ntilde += dntilde;
                if (dntilde > 0.0 || std::isnan(dntilde)) ++rec.ntilde_positive;
                else if (dntilde == 0.0 && b != 0.0) ++rec.ntilde_flat;
            }
            if (cfg_.control_variate) rec.control += control_increment(t, s, ctx, pi, sigma, dw, dwy, dwz);
        }

        // Self-financing Euler step for wealth; floor at 0 and absorb.
        if (!s.absorbed) {
            const double x_next = s.x + pi * (mu * dt_ + sigma * dw);
            if (x_next <= 0.0) {
                s.x = 0.0;
                s.absorbed = true;
                rec.floor_hit = true;
            } else {
                s.x = x_next;
            }
        }
        s.log_s += (mu - 0.5 * sigma * sigma) * dt_ + sigma * dw;
        // Exact OU transition at rate 1/eps, driven by the W^Y increment.
        const double m = model_.fast().mean;
        s.y = m + (s.y - m) * decay_ + ou_sd_ * (dwy / sqrt_dt_);
        s.z += delta_ * model_.slow().drift(s.z) * dt_ +
               std::sqrt(delta_) * model_.slow().diffusion(s.z) * dwz;
        if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.z) ||
            !std::isfinite(s.log_s)) {
            rec.failed = true;
        }
    }

    // Zero-mean increment of the approximate value martingale: the wealth,
    // slow-factor and fast-factor diffusion terms of Q plus eps v(2,0), with
    // the Ito correction of the wealth term.
    double control_increment(double t, const PathState& s, const StepContext& ctx, double pi,
                             double sigma, double dw, double dwy, double dwz) const {
        const auto& v0 = ctx.v0;
        const double tau = bundle_.horizon() - t;
        const auto avg = bundle_.averages().at(s.z);
        const auto& rho = model_.correlations();
        const double g = model_.slow().diffusion(s.z);
        const double d1 = v0.d1();
        const double d2 = v0.d1_squared();
        const double v10 = -0.5 * tau * rho.rho1 * avg.B * d2;
        const double v01 = 0.5 * tau * tau * rho.rho2 * avg.lambda_hat * avg.lambda_bar *
                           avg.lambda_bar_prime * g * d2;
        const double scale = 1.0 + (std::sqrt(eps_) * v10 + std::sqrt(delta_) * v01) / v0.value;
        const double wealth = scale * (v0.dx * pi * sigma * dw +
                                       0.5 * v0.dxx * pi * pi * sigma * sigma * (dw * dw - dt_));
        const double slow = std::sqrt(delta_) * g * tau * avg.lambda_bar * avg.lambda_bar_prime * d1 * dwz;
        const double fast = -0.5 * std::sqrt(eps_) * model_.fast().diffusion() *
                            bundle_.averages().theta_y_fast(s.y, s.z) * d1 * dwy;
        return wealth + slow + fast;
    }

    const MarketModel& model_;
    const StrategySpec& strategy_;
    const ExpansionBundle& bundle_;
    const SimConfig& cfg_;
    double dt_;
    std::size_t steps_;
    bool ntilde_;
    double eps_, delta_;
    double sqrt_dt_, decay_, ou_sd_;
    std::array<double, 9> chol_;
    const UtilitySpec& utility_;
};

bool is_perturbed_pi_zero(const StrategySpec& s) {
    return s.kind == StrategyKind::Perturbed && s.base && s.base->kind == StrategyKind::PiZero;
}

}  // namespace

PathEnsemble simulate_paths(const MarketModel& model, const StrategySpec& strategy,
                            const ExpansionBundle& bundle, const SimConfig& cfg) {
    if (cfg.paths < 1 || (cfg.antithetic && (cfg.paths < 2 || cfg.paths % 2 != 0))) {
        throw std::invalid_argument("simulation: antithetic runs need an even path count >= 2");
    }
    if (!(cfg.horizon > 0.0) || std::abs(cfg.horizon - bundle.horizon()) > 1e-12) {
        throw std::invalid_argument("simulation: horizon must be positive and match the expansion");
    }
    if (!(cfg.x0 > 0.0) || !(cfg.s0 > 0.0)) {
        throw std::invalid_argument("simulation: x0 and s0 must be positive");
    }
    const double dt = resolve_time_step(cfg, model.scales());
    const auto steps = static_cast<std::size_t>(std::llround(cfg.horizon / dt));

    PathEnsemble ens;
    ens.steps = steps;
    ens.dt = dt;
    ens.antithetic = cfg.antithetic;
    ens.control_variate = cfg.control_variate;
    ens.ntilde_available = is_perturbed_pi_zero(strategy);
    ens.strategy = strategy.label;
    ens.paths.resize(cfg.paths);

    const std::size_t per = cfg.antithetic ? 2 : 1;
    const std::size_t groups = cfg.paths / per;
    const PairSimulator sim(model, strategy, bundle, cfg, dt, steps, ens.ntilde_available);

    const unsigned workers = std::max(1u, std::min<unsigned>(cfg.workers, static_cast<unsigned>(groups)));
    auto work = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t g = lo; g < hi; ++g) sim.run(g, &ens.paths[g * per], per);
    };
    if (workers == 1) {
        work(0, groups);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (groups + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            const std::size_t lo = std::min(groups, w * chunk);
            const std::size_t hi = std::min(groups, lo + chunk);
            pool.emplace_back(work, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    return ens;
}

std::vector<double> sample_values(const PathEnsemble& ens, bool use_control) {
    const std::size_t per = ens.antithetic ? 2 : 1;
    std::vector<double> out(ens.paths.size() / per);
    for (std::size_t i = 0; i < out.size(); ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < per; ++k) {
            const auto& r = ens.paths[i * per + k];
            s += use_control ? r.utility - r.control : r.utility;
        }
        out[i] = s / static_cast<double>(per);
    }
    return out;
}

ValueEstimate estimate_value(const PathEnsemble& ens) {
    ValueEstimate v;
    v.n = ens.paths.size();
    for (const auto& r : ens.paths) {
        v.failures += r.failed ? 1 : 0;
        v.floor_hits += r.floor_hit ? 1 : 0;
    }
    if (v.failures > 0) {
        throw std::runtime_error("simulation: " + std::to_string(v.failures) +
                                 " path(s) produced a non-finite state");
    }
    const auto raw = sample_stats(sample_values(ens, false));
    v.raw_mean = raw.mean;
    v.raw_standard_error = raw.standard_error;
    v.effective_n = raw.count;
    if (ens.control_variate) {
        const auto adj = sample_stats(sample_values(ens, true));
        v.mean = adj.mean;
        v.standard_error = adj.standard_error;
    } else {
        v.mean = raw.mean;
        v.standard_error = raw.standard_error;
    }
    std::vector<double> powers(ens.paths.size());
    for (int k = 1; k <= 4; ++k) {
        for (std::size_t i = 0; i < powers.size(); ++i) {
            powers[i] = std::pow(std::abs(ens.paths[i].utility), k);
        }
        v.moments[k - 1] = pairwise_sum(powers) / static_cast<double>(powers.size());
    }
    return v;
}

ValueEstimate estimate_value(const MarketModel& model, const StrategySpec& strategy,
                             const ExpansionBundle& bundle, const SimConfig& cfg) {
    return estimate_value(simulate_paths(model, strategy, bundle, cfg));
}

SampleStats paired_difference(const PathEnsemble& a, const PathEnsemble& b) {
    if (a.paths.size() != b.paths.size() || a.antithetic != b.antithetic || a.dt != b.dt) {
        throw std::invalid_argument("paired_difference: ensembles are not aligned");
    }
    for (const auto* e : {&a, &b}) {
        for (const auto& r : e->paths) {
            if (r.failed) throw std::runtime_error("paired_difference: failed path in ensemble");
        }
    }
    const auto va = sample_values(a, a.control_variate);
    const auto vb = sample_values(b, b.control_variate);
    std::vector<double> d(va.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = va[i] - vb[i];
    return sample_stats(d);
}

namespace {

MonotonicityVerdict summarize(const PathEnsemble& ens, bool tilde) {
    MonotonicityVerdict v;
    v.paths = ens.paths.size();
    v.max_total = -INFINITY;
    for (const auto& r : ens.paths) {
        const auto pos = tilde ? r.ntilde_positive : r.nhat_positive;
        const auto flat = tilde ? r.ntilde_flat : r.nhat_flat;
        const double total = tilde ? r.ntilde : r.nhat;
        v.positive_increments += pos;
        v.flat_increments += flat;
        if (pos > 0 || flat > 0 || r.failed) ++v.violating_paths;
        v.max_total = std::max(v.max_total, total);
    }
    v.pass = v.violating_paths == 0;
    return v;
}

}  // namespace

MonotonicityVerdict ntilde_diagnostic(const PathEnsemble& ens) {
    if (!ens.ntilde_available) {
        throw std::invalid_argument(
            "ntilde_diagnostic: requires a Perturbed strategy over PiZero; use nhat_diagnostic");
    }
    return summarize(ens, true);
}

MonotonicityVerdict nhat_diagnostic(const PathEnsemble& ens) { return summarize(ens, false); }

void write_path_csv(const PathEnsemble& ens, const std::string& file) {
    std::ofstream os(file);
    if (!os) throw std::runtime_error("cannot open " + file + " for writing");
    os << "path,x_T,utility,floor_hit\n";
    char buf[128];
    for (const auto& r : ens.paths) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%d\n", r.index, r.x_T, r.utility,
                      r.floor_hit ? 1 : 0);
        os << buf;
    }
}

}  // namespace msp
