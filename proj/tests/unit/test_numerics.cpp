#include "msp/numerics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>

using namespace msp;

TEST(GaussHermite, NormalMomentsAreExact) {
    for (int n : {1, 2, 5, 20, 96}) {
        const auto rule = gauss_hermite_rule(n);
        ASSERT_EQ(rule.nodes.size(), static_cast<std::size_t>(n));
        double m0 = 0, m2 = 0, m4 = 0, m6 = 0;
        for (int i = 0; i < n; ++i) {
            const double x = rule.nodes[i], w = rule.weights[i];
            m0 += w;
            m2 += w * x * x;
            m4 += w * std::pow(x, 4);
            m6 += w * std::pow(x, 6);
        }
        EXPECT_NEAR(m0, 1.0, 1e-13) << n;
        if (n >= 2) EXPECT_NEAR(m2, 1.0, 1e-12) << n;
        if (n >= 3) EXPECT_NEAR(m4, 3.0, 1e-11) << n;
        if (n >= 4) EXPECT_NEAR(m6, 15.0, 1e-10) << n;
    }
}

TEST(GaussHermite, NodesSortedAndSymmetric) {
    const auto rule = gauss_hermite_rule(96);
    EXPECT_TRUE(std::is_sorted(rule.nodes.begin(), rule.nodes.end()));
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        EXPECT_NEAR(rule.nodes[i], -rule.nodes[rule.nodes.size() - 1 - i], 1e-12);
    }
}

TEST(GaussHermite, LognormalMean) {
    // E[exp(s xi)] = exp(s^2 / 2)
    const auto rule = gauss_hermite_rule(96);
    for (double s : {0.1, 0.5, 1.0, 2.0}) {
        double e = 0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) e += rule.weights[i] * std::exp(s * rule.nodes[i]);
        EXPECT_NEAR(e / std::exp(0.5 * s * s), 1.0, 1e-12) << s;
    }
}

TEST(GaussHermite, RejectsNonPositiveCount) { EXPECT_THROW(gauss_hermite_rule(0), std::invalid_argument); }

TEST(SampleStats, MatchesDirectFormulas) {
    std::vector<double> v{1.0, 2.0, 4.0, 8.0};
    const auto s = sample_stats(v);
    EXPECT_DOUBLE_EQ(s.mean, 3.75);
    const double var = ((1 - 3.75) * (1 - 3.75) + (2 - 3.75) * (2 - 3.75) + (4 - 3.75) * (4 - 3.75) +
                        (8 - 3.75) * (8 - 3.75)) / 3.0;
    EXPECT_NEAR(s.variance, var, 1e-14);
    EXPECT_NEAR(s.standard_error, std::sqrt(var / 4.0), 1e-14);
    EXPECT_EQ(s.count, 4u);
}

TEST(PairwiseSum, IsAccurateOnManySmallTerms) {
    std::vector<double> v(1 << 20, 0.1);
    EXPECT_NEAR(pairwise_sum(v), 0.1 * (1 << 20), 1e-8);
}

TEST(Tridiagonal, SolvesKnownSystem) {
    // [2 1 0; 1 2 1; 0 1 2] x = [4 8 8] -> x = [1 2 3]
    std::vector<double> lo{0, 1, 1}, d{2, 2, 2}, up{1, 1, 0}, rhs{4, 8, 8};
    const auto x = solve_tridiagonal(lo, d, up, rhs);
    EXPECT_NEAR(x[0], 1.0, 1e-14);
    EXPECT_NEAR(x[1], 2.0, 1e-14);
    EXPECT_NEAR(x[2], 3.0, 1e-14);
}

TEST(Richardson, DerivativesOfExponential) {
    auto f = [](double x) { return std::exp(2.0 * x); };
    for (int k = 1; k <= 4; ++k) {
        const double exact = std::pow(2.0, k) * std::exp(1.0);
        EXPECT_NEAR(richardson_derivative(f, 0.5, 1e-2, k) / exact, 1.0, 1e-6) << k;
    }
}

TEST(Spline, ReproducesSmoothFunctionAndThrowsOutside) {
    std::vector<double> vals;
    for (int i = 0; i <= 100; ++i) vals.push_back(std::sin(0.05 * i));
    UniformCubicSpline s(0.0, 0.05, vals);
    EXPECT_NEAR(s(1.2345), std::sin(1.2345), 1e-6);
    EXPECT_NEAR(s.derivative(2.0), std::cos(2.0), 1e-4);
    EXPECT_TRUE(s.contains(5.0));
    EXPECT_FALSE(s.contains(5.01));
    EXPECT_THROW(s(5.5), std::domain_error);
    UniformCubicSpline copy = s;
    EXPECT_EQ(copy(1.0), s(1.0));
}

TEST(Grids, EndpointsAreExact) {
    const auto a = linspace(-1.0, 1.0, 5);
    EXPECT_EQ(a.front(), -1.0);
    EXPECT_EQ(a.back(), 1.0);
    EXPECT_DOUBLE_EQ(a[2], 0.0);
    const auto b = logspace(0.1, 10.0, 25);
    EXPECT_NEAR(b.front(), 0.1, 1e-15);
    EXPECT_NEAR(b.back(), 10.0, 1e-13);
    EXPECT_NEAR(b[12], 1.0, 1e-14);
}
