#include "msp/factors.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <stdexcept>

using namespace msp;

namespace {

SlowFactor flat_slow() { return {[](double) { return 0.0; }, [](double) { return 0.0; }}; }

MarketModel linear_y_model(double nu, double m = 0.0) {
    return MarketModel(FastFactor{m, nu}, flat_slow(), [](double y, double) { return y; },
                       [](double, double) { return 0.3; }, Correlations{}, Scales{0.1, 0.1});
}

MarketModel reference_model() {
    return MarketModel(FastFactor{0.0, 1.0},
                       SlowFactor{make_slow_drift({"ou", {{"kappa", 1.0}, {"mean", 0.0}}}),
                                  make_slow_diffusion({"constant", {{"value", 0.5}}})},
                       make_sharpe_function({"affine_tanh", {{"l0", 0.5}, {"l1", 0.3}, {"eta", 0.3}}}),
                       make_volatility_function({"constant", {{"value", 0.25}}}),
                       Correlations{-0.5, -0.4, 0.3}, Scales{0.1, 0.1});
}

}  // namespace

TEST(InvariantAverage, GaussianMoments) {
    const FastFactor f{0.7, 0.4};
    EXPECT_NEAR(invariant_average(f, [](double y) { return y; }), 0.7, 1e-14);
    EXPECT_NEAR(invariant_average(f, [](double y) { return y * y; }), 0.49 + 0.16, 1e-14);
    EXPECT_NEAR(invariant_average(f, [](double y) { return std::exp(y); }), std::exp(0.7 + 0.08), 1e-12);
    EXPECT_THROW(invariant_average(f, [](double) { return NAN; }), std::runtime_error);
}

TEST(Averages, LinearSharpeOracle) {
    const auto t0 = std::chrono::steady_clock::now();
    for (double nu : {0.3, 0.5, 1.0}) {
        const auto m = linear_y_model(nu);
        const auto a = compute_averages(m, 0.2);
        EXPECT_NEAR(a.B / (-std::sqrt(2.0) * nu * nu * nu), 1.0, 1e-8) << nu;
        EXPECT_NEAR(a.lambda_bar / nu, 1.0, 1e-10) << nu;
        EXPECT_NEAR(a.lambda_hat, 0.0, 1e-14);
        EXPECT_NEAR(a.lambda_bar_prime, 0.0, 1e-10);
        EXPECT_NEAR(compute_B(m, 0.0) / (-std::sqrt(2.0) * nu * nu * nu), 1.0, 1e-8);
    }
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 1.0);
}

TEST(Poisson, LinearSharpeClosedForm) {
    // L0 theta = y^2 - nu^2 with <theta> = 0 gives theta = (nu^2 - y^2) / 2.
    for (double nu : {0.5, 1.0}) {
        const auto m = linear_y_model(nu);
        const auto p = solve_poisson(m, 0.0);
        EXPECT_NEAR(p.lambda_bar_squared(), nu * nu, 1e-12);
        EXPECT_LT(std::abs(p.centering_error()), 1e-12);
        EXPECT_NEAR(p.dy(1.0), -1.0, 1e-10);
        for (double y : {-2.0, -0.5, 0.0, 0.7, 2.5}) {
            EXPECT_NEAR(p.dy(y), -y, 1e-9) << y;
            EXPECT_NEAR(p.value(y), 0.5 * (nu * nu - y * y), 1e-8) << y;
        }
    }
}

TEST(Poisson, GeneralSourceSatisfiesEquation) {
    const auto m = reference_model();
    const auto p = solve_poisson(m, 0.3);
    for (double y : {-2.0, -0.3, 0.0, 1.1, 2.4}) {
        const double h = 1e-3;
        const double d2 = (p.dy(y + h) - p.dy(y - h)) / (2 * h);
        const double lhs = d2 + (0.0 - y) * p.dy(y);
        const double l = m.sharpe(y, 0.3);
        EXPECT_NEAR(lhs, l * l - p.lambda_bar_squared(), 1e-6) << y;
    }
    EXPECT_NEAR(invariant_average(m.fast(), [&](double y) { return p.value(y); }), 0.0, 1e-8);
}

TEST(Averages, YIndependentSharpe) {
    const MarketModel m(FastFactor{0.0, 1.0}, flat_slow(), [](double, double z) { return z; },
                        [](double, double) { return 0.2; }, Correlations{}, Scales{0.1, 0.1});
    for (double z : {-0.6, 0.4}) {
        const auto a = compute_averages(m, z);
        EXPECT_NEAR(a.lambda_bar, std::abs(z), 1e-14);
        EXPECT_NEAR(a.lambda_hat, z, 1e-14);
        EXPECT_NEAR(a.B, 0.0, 1e-12);
        EXPECT_NEAR(a.lambda_bar_prime, z > 0 ? 1.0 : -1.0, 1e-8);
    }
}

TEST(Averages, CacheMatchesDirectComputation) {
    const auto m = reference_model();
    const FactorAverages cache(m);
    for (double z : {-0.9, -0.25, 0.0, 0.33, 0.95, 1.5}) {
        const auto d = compute_averages(m, z);
        EXPECT_NEAR(cache.lambda_bar(z), d.lambda_bar, 1e-9) << z;
        EXPECT_NEAR(cache.lambda_hat(z), d.lambda_hat, 1e-9) << z;
        EXPECT_NEAR(cache.lambda_bar_prime(z), d.lambda_bar_prime, 1e-7) << z;
        EXPECT_NEAR(cache.B(z), d.B, 1e-9) << z;
        EXPECT_LE(std::abs(d.lambda_hat), d.lambda_bar + 1e-14);
    }
    for (double y : {-1.0, 0.5}) {
        EXPECT_NEAR(cache.theta_y_fast(y, 0.1), cache.theta_y(y, 0.1), 1e-3);
    }
}

TEST(MarketModel, CholeskyReproducesCorrelations) {
    const auto m = reference_model();
    const auto& L = m.cholesky();
    auto dot = [&](int i, int j) { return L[3 * i] * L[3 * j] + L[3 * i + 1] * L[3 * j + 1] + L[3 * i + 2] * L[3 * j + 2]; };
    EXPECT_NEAR(dot(0, 0), 1.0, 1e-15);
    EXPECT_NEAR(dot(1, 1), 1.0, 1e-15);
    EXPECT_NEAR(dot(2, 2), 1.0, 1e-15);
    EXPECT_NEAR(dot(0, 1), -0.5, 1e-15);
    EXPECT_NEAR(dot(0, 2), -0.4, 1e-15);
    EXPECT_NEAR(dot(1, 2), 0.3, 1e-15);
    EXPECT_EQ(L[1], 0.0);
    EXPECT_EQ(L[2], 0.0);
    EXPECT_EQ(L[5], 0.0);
}

TEST(MarketModel, RejectsIndefiniteCorrelation) {
    const Correlations bad{0.9, 0.9, -0.9};
    EXPECT_LT(correlation_determinant(bad), 0.0);
    EXPECT_NEAR(correlation_determinant(bad), 1.0 - 1.458 - 3 * 0.81, 1e-12);
    EXPECT_THROW(MarketModel(FastFactor{}, flat_slow(), [](double, double) { return 0.5; },
                             [](double, double) { return 0.2; }, bad, Scales{}),
                 std::invalid_argument);
    EXPECT_THROW(MarketModel(FastFactor{}, flat_slow(), [](double, double) { return 0.5; },
                             [](double, double) { return 0.2; }, Correlations{1.0, 0, 0}, Scales{}),
                 std::invalid_argument);
    EXPECT_THROW(MarketModel(FastFactor{}, flat_slow(), [](double, double) { return 0.5; },
                             [](double, double) { return 0.2; }, Correlations{}, Scales{0.0, 0.1}),
                 std::invalid_argument);
    EXPECT_THROW(MarketModel(FastFactor{}, flat_slow(), [](double, double) { return 0.5; },
                             [](double y, double) { return y; }, Correlations{}, Scales{}),
                 std::invalid_argument);
}

TEST(Registry, FormsAndErrors) {
    const auto s = make_sharpe_function({"affine_tanh", {{"l0", 0.5}, {"l1", 0.3}, {"eta", 0.3}}});
    EXPECT_NEAR(s(1.0, 2.0), 0.5 + 0.6 + 0.3 * std::tanh(1.0), 1e-15);
    const auto v = make_volatility_function({"exp_tanh", {{"base", 0.2}, {"k", 0.5}}});
    EXPECT_NEAR(v(0.4, 0.0), 0.2 * std::exp(0.5 * std::tanh(0.4)), 1e-15);
    EXPECT_NEAR(make_slow_drift({"ou", {{"kappa", 2.0}, {"mean", 0.1}}})(0.6), -1.0, 1e-15);
    EXPECT_EQ(make_slow_drift({"zero", {}})(3.0), 0.0);
    EXPECT_THROW(make_sharpe_function({"quadratic", {}}), std::invalid_argument);
    EXPECT_THROW(make_sharpe_function({"affine", {{"l0", 0.5}}}), std::invalid_argument);
    EXPECT_THROW(make_sharpe_function({"constant", {{"value", 0.5}, {"typo", 1.0}}}), std::invalid_argument);
    EXPECT_FALSE(coefficient_parameters("sharpe", "affine_tanh").empty());
}
