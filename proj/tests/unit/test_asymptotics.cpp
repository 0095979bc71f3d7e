#include "msp/asymptotics.hpp"

#include "msp/numerics.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <memory>
#include <stdexcept>

using namespace msp;

namespace {

double merton_half(double lambda, double tau, double x) {
    return 2.0 * std::sqrt(x) * std::exp(0.5 * lambda * lambda * tau);
}

std::shared_ptr<const FactorAverages> averages(FieldFunction sharpe, FieldFunction vol, Correlations rho,
                                               double nu = 1.0, double g = 0.5, double z_min = -1.0,
                                               double z_max = 1.0) {
    const MarketModel m(FastFactor{0.0, nu},
                        SlowFactor{[](double z) { return -z; }, [g](double) { return g; }},
                        std::move(sharpe), std::move(vol), rho, Scales{0.1, 0.2});
    FactorOptions o;
    o.z_min = z_min;
    o.z_max = z_max;
    return std::make_shared<const FactorAverages>(m, o);
}

ExpansionBundle power_bundle(std::shared_ptr<const FactorAverages> a, double horizon = 1.0) {
    return ExpansionBundle(std::move(a), make_power_utility(0.5), horizon,
                           ExpansionOptions{MertonMethod::ClosedFormPower, {}});
}

}  // namespace

TEST(Expansion, ConstantSharpeIsMertonWithNoCorrections) {
    const auto b = power_bundle(averages([](double, double) { return 0.4; }, [](double, double) { return 0.2; },
                                         Correlations{-0.5, -0.4, 0.3}));
    for (double x : {0.5, 1.0, 3.0}) {
        EXPECT_NEAR(b.leading_order(0.0, x, 0.2), merton_half(0.4, 1.0, x), 1e-13);
        EXPECT_NEAR(b.fast_correction(0.0, x, 0.2), 0.0, 1e-12);
        EXPECT_NEAR(b.slow_correction(0.0, x, 0.2), 0.0, 1e-12);
        EXPECT_NEAR(b.second_order_fast_diag(0.0, x, 0.7, 0.2), 0.0, 1e-12);
        EXPECT_NEAR(b.pi_zero(0.0, x, 0.3, 0.0), 0.4 / 0.2 * 2.0 * x, 1e-13);
    }
}

TEST(Expansion, HandValue) {
    // lambda_bar(z) = 1 everywhere: v0(0, 1) = 2 e^{1/2}
    const auto b = power_bundle(averages([](double, double) { return 1.0; }, [](double, double) { return 1.0; },
                                         Correlations{}));
    EXPECT_NEAR(b.leading_order(0.0, 1.0, 0.0), 2.0 * std::exp(0.5), 1e-14);
    EXPECT_NEAR(b.pi_zero(0.0, 1.5, 0.0, 0.0), 3.0, 1e-14);
    EXPECT_EQ(b.pi_zero(0.0, 0.0, 0.0, 0.0), 0.0);
}

TEST(Expansion, FastCorrectionLinearSharpe) {
    // lambda = y on OU(0, nu): B = -sqrt(2) nu^3, theta = (nu^2 - y^2) / 2, D1 M = D1^2 M = M.
    const double nu = 0.5, rho1 = -0.4;
    const auto b = power_bundle(averages([](double y, double) { return y; }, [](double, double) { return 0.3; },
                                         Correlations{rho1, 0.0, 0.0}, nu));
    for (double t : {0.0, 0.6}) {
        for (double x : {0.3, 2.0}) {
            const double tau = 1.0 - t;
            const double m = merton_half(nu, tau, x);
            EXPECT_NEAR(b.leading_order(t, x, 0.0) / m, 1.0, 1e-12);
            const double v10 = -0.5 * tau * rho1 * (-std::sqrt(2.0) * nu * nu * nu) * m;
            EXPECT_NEAR(b.fast_correction(t, x, 0.0) / v10, 1.0, 1e-8);
            EXPECT_NEAR(b.slow_correction(t, x, 0.0), 0.0, 1e-10);
            for (double y : {-1.0, 0.2}) {
                EXPECT_NEAR(b.second_order_fast_diag(t, x, y, 0.0), 0.25 * (y * y - nu * nu) * m, 1e-7);
            }
        }
    }
}

TEST(Expansion, SlowCorrectionLinearZ) {
    // lambda = z: lambda_bar = lambda_hat = z, lambda_bar' = 1 for z > 0.
    const double rho2 = 0.35, g = 0.5;
    const auto b = power_bundle(averages([](double, double z) { return z; }, [](double, double) { return 0.3; },
                                         Correlations{0.0, rho2, 0.0}, 1.0, g, 0.4, 1.6));
    for (double z : {0.6, 1.0, 1.4}) {
        for (double t : {0.0, 0.5}) {
            const double tau = 1.0 - t;
            const double m = merton_half(z, tau, 1.7);
            const double v01 = 0.5 * tau * tau * rho2 * z * z * 1.0 * g * m;
            EXPECT_NEAR(b.slow_correction(t, 1.7, z) / v01, 1.0, 1e-7);
            EXPECT_NEAR(b.fast_correction(t, 1.7, z), 0.0, 1e-10);
        }
        EXPECT_LE(b.vega_gamma_check(0.0, 1.0, z), 1e-6);
    }
    EXPECT_LE(b.vega_gamma_check(0.0, 1.0, 1.0), 1e-6);
}

TEST(Expansion, TerminalConditionsAreExact) {
    const auto b = power_bundle(averages([](double y, double z) { return 0.5 + 0.3 * z + 0.3 * std::tanh(y); },
                                         [](double, double) { return 0.25; }, Correlations{-0.5, -0.4, 0.3}));
    const auto u = make_power_utility(0.5);
    for (double z : {-0.5, 0.0, 0.7}) {
        for (double x : {0.1, 1.0, 10.0}) {
            EXPECT_EQ(b.fast_correction(1.0, x, z), 0.0);
            EXPECT_EQ(b.slow_correction(1.0, x, z), 0.0);
            EXPECT_EQ(b.q(1.0, x, z), u.value(x));
            EXPECT_EQ(b.q(0.3, x, z, 0.0, 0.0), b.leading_order(0.3, x, z));
            EXPECT_EQ(b.vega_gamma_check(1.0, x, z), 0.0);
        }
    }
}

TEST(Expansion, PowerProportionality) {
    const auto b = power_bundle(averages([](double y, double z) { return 0.5 + 0.3 * z + 0.3 * std::tanh(y); },
                                         [](double, double) { return 0.25; }, Correlations{-0.5, -0.4, 0.3}));
    const double r10 = b.fast_correction(0.2, 1.0, 0.1) / b.leading_order(0.2, 1.0, 0.1);
    const double r01 = b.slow_correction(0.2, 1.0, 0.1) / b.leading_order(0.2, 1.0, 0.1);
    for (double x : logspace(0.1, 10.0, 9)) {
        EXPECT_NEAR(b.fast_correction(0.2, x, 0.1) / b.leading_order(0.2, x, 0.1) / r10, 1.0, 1e-8);
        EXPECT_NEAR(b.slow_correction(0.2, x, 0.1) / b.leading_order(0.2, x, 0.1) / r01, 1.0, 1e-8);
    }
    // rho1 B > 0 and D1^2 v0 > 0 force v10 <= 0
    const double B = b.averages().B(0.1);
    EXPECT_GT(-0.5 * B, 0.0);
    EXPECT_LT(r10, 0.0);
}

TEST(Expansion, VegaGammaOnCriterionGrid) {
    const auto a = averages([](double y, double z) { return 0.5 + 0.3 * z + 0.3 * std::tanh(y); },
                            [](double, double) { return 0.25; }, Correlations{-0.5, -0.4, 0.3});
    const auto xs = logspace(0.1, 10.0, 25);
    const auto t0 = std::chrono::steady_clock::now();
    double worst_power = 0.0, worst_mix = 0.0;
    for (double gamma : {0.25, 0.5, 0.75}) {
        const ExpansionBundle b(a, make_power_utility(gamma), 1.0, {MertonMethod::ClosedFormPower, {}});
        for (double tau : {0.1, 0.5, 1.0}) {
            for (double x : xs) worst_power = std::max(worst_power, b.vega_gamma_check(1.0 - tau, x, 0.3));
        }
    }
    const ExpansionBundle mix(a, make_power_mixture({1, 1}, {0.5, 0.25}), 1.0);
    for (double tau : {0.1, 0.5, 1.0}) {
        for (double x : xs) worst_mix = std::max(worst_mix, mix.vega_gamma_check(1.0 - tau, x, 0.3));
    }
    EXPECT_LE(worst_power, 1e-6);
    EXPECT_LE(worst_mix, 1e-3);
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 30.0);
}

TEST(Expansion, DualAndClosedFormBundlesAgree) {
    const auto a = averages([](double y, double z) { return 0.5 + 0.3 * z + 0.3 * std::tanh(y); },
                            [](double, double) { return 0.25; }, Correlations{-0.5, -0.4, 0.3});
    const ExpansionBundle cf(a, make_power_utility(0.5), 1.0, {MertonMethod::ClosedFormPower, {}});
    const ExpansionBundle dual(a, make_power_utility(0.5), 1.0, {MertonMethod::DualQuadrature, {}});
    for (double x : {0.4, 1.0, 2.5}) {
        EXPECT_NEAR(dual.q(0.0, x, 0.2, 0.1, 0.1) / cf.q(0.0, x, 0.2, 0.1, 0.1), 1.0, 1e-7);
        EXPECT_NEAR(dual.pi_zero(0.0, x, 0.5, 0.2) / cf.pi_zero(0.0, x, 0.5, 0.2), 1.0, 1e-7);
    }
}

TEST(Expansion, RejectsFiniteDifferenceAndNonPowerClosedForm) {
    const auto a = averages([](double, double) { return 0.4; }, [](double, double) { return 0.2; }, Correlations{});
    EXPECT_THROW(ExpansionBundle(a, make_power_utility(0.5), 1.0, {MertonMethod::FiniteDifference, {}}),
                 std::invalid_argument);
    EXPECT_THROW(ExpansionBundle(a, make_power_mixture({1, 1}, {0.5, 0.25}), 1.0,
                                 {MertonMethod::ClosedFormPower, {}}),
                 std::logic_error);
    EXPECT_EQ(default_merton_method(make_power_utility(0.3)), MertonMethod::ClosedFormPower);
    EXPECT_EQ(default_merton_method(make_power_mixture({1, 1}, {0.5, 0.25})), MertonMethod::DualQuadrature);
}
