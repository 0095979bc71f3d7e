#include "msp/simulate.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>

using namespace msp;

namespace {

struct World {
    std::shared_ptr<const FactorAverages> averages;
    std::shared_ptr<const ExpansionBundle> bundle;
    const MarketModel& model() const { return averages->model(); }
};

World make_world(FieldFunction sharpe, Correlations rho, Scales scales) {
    const MarketModel m(FastFactor{0.0, 1.0},
                        SlowFactor{[](double z) { return -z; }, [](double) { return 0.5; }},
                        std::move(sharpe), [](double, double) { return 0.25; }, rho, scales);
    World w;
    w.averages = std::make_shared<const FactorAverages>(m);
    w.bundle = std::make_shared<const ExpansionBundle>(
        w.averages, make_power_utility(0.5), 1.0, ExpansionOptions{MertonMethod::ClosedFormPower, {}});
    return w;
}

World constant_world(Scales s = {0.4, 0.4}) {
    return make_world([](double, double) { return 0.5; }, Correlations{-0.5, -0.4, 0.3}, s);
}

World reference_world(Scales s = {0.4, 0.4}) {
    return make_world([](double y, double z) { return 0.5 + 0.3 * z + 0.3 * std::tanh(y); },
                      Correlations{-0.5, -0.4, 0.3}, s);
}

SimConfig small(std::size_t paths, double dt = 0.0) {
    SimConfig c;
    c.paths = paths;
    c.dt = dt;
    c.seed = 99;
    return c;
}

double merton_half(double lambda, double x) { return 2.0 * std::sqrt(x) * std::exp(0.5 * lambda * lambda); }

}  // namespace

TEST(Simulate, ZeroStrategyKeepsWealth) {
    const auto w = reference_world();
    const auto ens = simulate_paths(w.model(), StrategySpec::zero(), *w.bundle, small(200));
    for (const auto& p : ens.paths) EXPECT_EQ(p.x_T, 1.0);
    const auto est = estimate_value(ens);
    EXPECT_EQ(est.mean, 2.0);
    EXPECT_EQ(est.standard_error, 0.0);
    EXPECT_EQ(est.effective_n, 100u);
}

TEST(Simulate, ConstantModelMatchesMerton) {
    const auto w = constant_world({0.1, 0.1});
    const auto est = estimate_value(w.model(), StrategySpec::pi_zero(), *w.bundle, small(20000, 0.005));
    EXPECT_LE(std::abs(est.mean - merton_half(0.5, 1.0)), 3.0 * est.standard_error)
        << est.mean << " +- " << est.standard_error;
    EXPECT_EQ(est.floor_hits, 0u);
    EXPECT_EQ(est.failures, 0u);
}

TEST(Simulate, WeakConvergenceUnderStepHalving) {
    const auto w = constant_world({0.1, 0.1});
    const auto a = estimate_value(w.model(), StrategySpec::pi_zero(), *w.bundle, small(10000, 0.005));
    const auto b = estimate_value(w.model(), StrategySpec::pi_zero(), *w.bundle, small(10000, 0.0025));
    EXPECT_LT(std::abs(a.mean - b.mean), 2.0 * std::hypot(a.standard_error, b.standard_error));
}

TEST(Simulate, ControlVariateIsUnbiasedAndReducesVariance) {
    const auto w = reference_world();
    auto cfg = small(8000);
    const auto raw = estimate_value(w.model(), StrategySpec::pi_zero(), *w.bundle, cfg);
    cfg.control_variate = true;
    const auto cv = estimate_value(w.model(), StrategySpec::pi_zero(), *w.bundle, cfg);
    EXPECT_EQ(cv.raw_mean, raw.mean);
    EXPECT_LT(cv.standard_error, 0.2 * raw.standard_error);
    EXPECT_LE(std::abs(cv.mean - raw.mean), 3.0 * raw.standard_error);
}

TEST(Simulate, SquareRootLaw) {
    const auto w = reference_world();
    const auto a = estimate_value(w.model(), StrategySpec::pi_zero(), *w.bundle, small(4000));
    auto cfg = small(16000);
    cfg.seed = 1234;
    const auto b = estimate_value(w.model(), StrategySpec::pi_zero(), *w.bundle, cfg);
    EXPECT_NEAR(b.standard_error / a.standard_error, 0.5, 0.1);
}

TEST(Simulate, DeterministicAcrossWorkers) {
    const auto w = reference_world();
    auto cfg = small(600);
    cfg.control_variate = true;
    const auto s = StrategySpec::perturbed(StrategySpec::pi_zero(), default_fast_bump(0.1),
                                           default_slow_bump(0.1), 0.25, 0.25);
    const auto a = simulate_paths(w.model(), s, *w.bundle, cfg);
    cfg.workers = 4;
    const auto b = simulate_paths(w.model(), s, *w.bundle, cfg);
    ASSERT_EQ(a.paths.size(), b.paths.size());
    for (std::size_t i = 0; i < a.paths.size(); ++i) {
        EXPECT_EQ(a.paths[i].x_T, b.paths[i].x_T);
        EXPECT_EQ(a.paths[i].control, b.paths[i].control);
        EXPECT_EQ(a.paths[i].ntilde, b.paths[i].ntilde);
    }
    EXPECT_EQ(estimate_value(a).mean, estimate_value(b).mean);
}

TEST(Simulate, FactorCorrelationFollowsRho12) {
    for (double rho12 : {0.0, 0.6}) {
        const auto w = make_world([](double, double) { return 0.5; }, Correlations{0.0, 0.0, rho12}, {0.4, 0.4});
        auto cfg = small(20000);
        cfg.antithetic = false;
        cfg.dt = 0.02;
        const auto ens = simulate_paths(w.model(), StrategySpec::zero(), *w.bundle, cfg);
        double sy = 0, sz = 0, syy = 0, szz = 0, syz = 0;
        const double n = static_cast<double>(ens.paths.size());
        for (const auto& p : ens.paths) {
            sy += p.y_T;
            sz += p.z_T;
            syy += p.y_T * p.y_T;
            szz += p.z_T * p.z_T;
            syz += p.y_T * p.z_T;
        }
        const double cov = syz / n - sy / n * sz / n;
        const double corr = cov / std::sqrt((syy / n - sy / n * sy / n) * (szz / n - sz / n * sz / n));
        // Independent drivers leave Y and Z independent; a positive rho12 couples them.
        if (rho12 == 0.0) EXPECT_NEAR(corr, 0.0, 3.0 / std::sqrt(n));
        else EXPECT_GT(corr, 0.1);
    }
}

TEST(Simulate, AbsorptionAtZeroWealth) {
    const auto w = reference_world();
    const auto s = StrategySpec::scaled(StrategySpec::pi_zero(), 40.0);
    const auto ens = simulate_paths(w.model(), s, *w.bundle, small(2000));
    const auto est = estimate_value(ens);
    EXPECT_GT(est.floor_hits, 0u);
    for (const auto& p : ens.paths) {
        if (p.floor_hit) {
            EXPECT_EQ(p.x_T, 0.0);
            EXPECT_EQ(p.utility, 0.0);
        }
        EXPECT_GE(p.x_T, 0.0);
    }
}

TEST(Diagnostics, SignTestsForChallengers) {
    const auto w = reference_world();
    const auto cfg = small(400);
    const auto base = simulate_paths(w.model(), StrategySpec::pi_zero(), *w.bundle, cfg);
    for (const auto& p : base.paths) EXPECT_EQ(p.nhat, 0.0);
    EXPECT_TRUE(nhat_diagnostic(base).pass);
    EXPECT_THROW(ntilde_diagnostic(base), std::invalid_argument);

    const auto scaled = simulate_paths(w.model(), StrategySpec::scaled(StrategySpec::pi_zero(), 0.5),
                                       *w.bundle, cfg);
    const auto v = nhat_diagnostic(scaled);
    EXPECT_TRUE(v.pass);
    EXPECT_EQ(v.positive_increments, 0u);
    EXPECT_EQ(v.flat_increments, 0u);
    EXPECT_LT(v.max_total, 0.0);

    const auto zero = simulate_paths(w.model(), StrategySpec::zero(), *w.bundle, cfg);
    EXPECT_TRUE(nhat_diagnostic(zero).pass);
    EXPECT_LT(nhat_diagnostic(zero).max_total, 0.0);

    const auto pert = simulate_paths(
        w.model(),
        StrategySpec::perturbed(StrategySpec::pi_zero(), default_fast_bump(0.1), default_slow_bump(0.1), 0.25, 0.25),
        *w.bundle, cfg);
    const auto nt = ntilde_diagnostic(pert);
    EXPECT_TRUE(nt.pass);
    EXPECT_EQ(nt.positive_increments, 0u);
    EXPECT_TRUE(nhat_diagnostic(pert).pass);

    const auto flat = simulate_paths(
        w.model(),
        StrategySpec::perturbed(StrategySpec::pi_zero(), [](const StepContext&) { return 0.0; },
                                [](const StepContext&) { return 0.0; }, 0.25, 0.25),
        *w.bundle, cfg);
    for (const auto& p : flat.paths) EXPECT_EQ(p.ntilde, 0.0);
    EXPECT_TRUE(ntilde_diagnostic(flat).pass);
}

TEST(Simulate, PairedDifferenceOfIdenticalEnsemblesIsZero) {
    const auto w = reference_world();
    const auto a = simulate_paths(w.model(), StrategySpec::pi_zero(), *w.bundle, small(200));
    const auto d = paired_difference(a, a);
    EXPECT_EQ(d.mean, 0.0);
    EXPECT_EQ(d.standard_error, 0.0);
}

TEST(Simulate, TimeStepResolution) {
    SimConfig c;
    EXPECT_NEAR(resolve_time_step(c, Scales{0.4, 0.1}), 0.005, 1e-15);
    EXPECT_NEAR(resolve_time_step(c, Scales{0.05, 0.05}), 1.0 / 400.0, 1e-15);
    c.dt = 0.01;
    EXPECT_THROW(resolve_time_step(c, Scales{0.1, 0.1}), std::invalid_argument);
    EXPECT_NEAR(resolve_time_step(c, Scales{0.2, 0.4}), 0.01, 1e-15);
}

TEST(Simulate, PathCsvHeader) {
    const auto w = reference_world();
    const auto ens = simulate_paths(w.model(), StrategySpec::pi_zero(), *w.bundle, small(4));
    const auto file = std::filesystem::temp_directory_path() / "msp_paths_test.csv";
    write_path_csv(ens, file.string());
    std::ifstream in(file);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "path,x_T,utility,floor_hit");
    int lines = 0;
    for (std::string l; std::getline(in, l);) ++lines;
    EXPECT_EQ(lines, 4);
    std::filesystem::remove(file);
}
