#include "msp/utility.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

using namespace msp;

TEST(PowerUtility, HandComputedValues) {
    const auto u = make_power_utility(0.5);
    EXPECT_DOUBLE_EQ(u.value(4.0), 4.0);          // 2 sqrt(4)
    EXPECT_DOUBLE_EQ(u.marginal(4.0), 0.5);
    EXPECT_DOUBLE_EQ(u.risk_tolerance(4.0), 8.0);  // x / (1 - gamma)
    EXPECT_DOUBLE_EQ(u.risk_tolerance_dx(4.0), 2.0);
    EXPECT_NEAR(u.inverse_marginal(0.5), 4.0, 1e-14);
    EXPECT_NEAR(u.inverse_marginal(1.0), 1.0, 1e-14);
    EXPECT_NEAR(u.inverse_marginal(0.25), 16.0, 1e-13);
    EXPECT_EQ(u.asymptotic_elasticity(), 0.5);
    EXPECT_EQ(u.power_exponent(), 0.5);
}

TEST(PowerMixture, HandComputedValues) {
    // U = 2 sqrt(x) + 4 x^{1/4}; at x = 1: U' = 2, U'' = -1/2 - 3/4, R = 1.6
    const auto u = make_power_mixture({1.0, 1.0}, {0.5, 0.25});
    EXPECT_DOUBLE_EQ(u.value(1.0), 6.0);
    EXPECT_DOUBLE_EQ(u.marginal(1.0), 2.0);
    EXPECT_DOUBLE_EQ(u.curvature(1.0), -1.25);
    EXPECT_NEAR(u.risk_tolerance(1.0), 1.6, 1e-15);
    EXPECT_NEAR(u.inverse_marginal(2.0), 1.0, 1e-13);
    EXPECT_EQ(u.asymptotic_elasticity(), 0.5);
    EXPECT_THROW(u.power_exponent(), std::logic_error);
}

TEST(Utility, RejectsInvalidParameters) {
    EXPECT_THROW(make_power_utility(1.0), std::invalid_argument);
    EXPECT_THROW(make_power_utility(0.0), std::invalid_argument);
    EXPECT_THROW(make_power_mixture({1.0, -1.0}, {0.5, 0.25}), std::invalid_argument);
    EXPECT_THROW(make_power_mixture({1.0}, {0.5, 0.25}), std::invalid_argument);
    EXPECT_THROW(make_utility(UtilityKind::Power, {}, {0.5, 0.25}), std::invalid_argument);
}

class UtilityProperties : public ::testing::TestWithParam<int> {
protected:
    UtilitySpec u() const {
        switch (GetParam()) {
            case 0: return make_power_utility(0.25);
            case 1: return make_power_utility(0.75);
            default: return make_power_mixture({1.0, 2.0, 0.5}, {0.2, 0.5, 0.9});
        }
    }
};

TEST_P(UtilityProperties, IncreasingConcaveWithIncreasingRiskTolerance) {
    const auto v = u();
    EXPECT_TRUE(validate_assumptions(v).empty());
    double prev_r = 0.0;
    for (double x = 1e-3; x < 1e3; x *= 1.3) {
        EXPECT_GT(v.marginal(x), 0.0);
        EXPECT_LT(v.curvature(x), 0.0);
        const double r = v.risk_tolerance(x);
        EXPECT_GT(r, prev_r);
        prev_r = r;
    }
    EXPECT_LT(v.risk_tolerance(1e-12), 1e-10);
}

TEST_P(UtilityProperties, InverseMarginalRoundTrip) {
    const auto v = u();
    for (double x = 1e-3; x < 1e3; x *= 1.7) {
        EXPECT_NEAR(v.inverse_marginal(v.marginal(x)) / x, 1.0, 1e-10) << x;
        EXPECT_NEAR(inverse_marginal(v, v.marginal(x)) / x, 1.0, 1e-10) << x;
    }
}

TEST_P(UtilityProperties, ConjugateDerivativesMatchFiniteDifferences) {
    const auto v = u();
    for (double y : {0.3, 1.0, 2.5}) {
        // U~'(y) = -I(y)
        EXPECT_NEAR(v.conjugate_d1(y), -v.inverse_marginal(y), 1e-10 * v.inverse_marginal(y));
        const double h = 1e-4 * y;
        const double d1 = (v.conjugate(y + h) - v.conjugate(y - h)) / (2 * h);
        const double d2 = (v.conjugate_d1(y + h) - v.conjugate_d1(y - h)) / (2 * h);
        const double d3 = (v.conjugate_d2(y + h) - v.conjugate_d2(y - h)) / (2 * h);
        EXPECT_NEAR(d1 / v.conjugate_d1(y), 1.0, 1e-6);
        EXPECT_NEAR(d2 / v.conjugate_d2(y), 1.0, 1e-6);
        EXPECT_NEAR(d3 / v.conjugate_d3(y), 1.0, 1e-6);
        // Fenchel: U~(y) >= U(x) - x y for all x, with equality at I(y)
        for (double x : {0.1, 1.0, 10.0}) EXPECT_GE(v.conjugate(y) + 1e-12, v.value(x) - x * y);
    }
}

TEST_P(UtilityProperties, RiskToleranceDerivativeMatchesDifference) {
    const auto v = u();
    for (double x : {0.05, 1.0, 20.0}) {
        const double h = 1e-5 * x;
        const double fd = (v.risk_tolerance(x + h) - v.risk_tolerance(x - h)) / (2 * h);
        EXPECT_NEAR(v.risk_tolerance_dx(x), fd, 1e-6 * std::max(1.0, std::abs(fd)));
        const double fd3 = (v.curvature(x + h) - v.curvature(x - h)) / (2 * h);
        EXPECT_NEAR(v.third(x) / fd3, 1.0, 1e-6);
    }
}

INSTANTIATE_TEST_SUITE_P(Kinds, UtilityProperties, ::testing::Values(0, 1, 2));
