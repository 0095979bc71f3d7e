#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace msp {

/// Quadrature rule for expectations against the standard normal law:
/// E[f(xi)] ~= sum_i weights[i] * f(nodes[i]), with sum(weights) == 1.
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Probabilists' Gauss-Hermite rule with n nodes (n >= 1). Nodes are sorted
/// ascending. Exact for polynomials of degree <= 2n - 1.
GaussHermiteRule gauss_hermite_rule(int n);

/// Pairwise (cascade) summation; result is independent of thread layout.
double pairwise_sum(std::span<const double> values);

struct SampleStats {
    double mean = 0.0;
    double variance = 0.0;        // unbiased
    double standard_error = 0.0;  // sqrt(variance / n)
    std::size_t count = 0;
};

/// Mean, unbiased variance and standard error, both passes pairwise-summed.
SampleStats sample_stats(std::span<const double> values);

/// Thomas algorithm for a tridiagonal system. lower[0] and upper[n-1] are
/// ignored. Throws std::runtime_error on a zero pivot.
std::vector<double> solve_tridiagonal(std::span<const double> lower,
                                      std::span<const double> diag,
                                      std::span<const double> upper,
                                      std::span<const double> rhs);

/// Central finite-difference derivative of order 1..4 with one Richardson
/// extrapolation (steps h and h/2).
double richardson_derivative(const std::function<double(double)>& f, double x,
                             double h, int order);

/// Cubic B-spline interpolant on a uniform grid (thin wrapper over
/// boost::math). Evaluation outside [front(), back()] throws
/// std::domain_error; callers fall back to direct evaluation.
class UniformCubicSpline {
public:
    UniformCubicSpline() = default;
    UniformCubicSpline(double x0, double step, const std::vector<double>& values);

    double operator()(double x) const;
    double derivative(double x) const;
    double front() const { return x0_; }
    double back() const { return x1_; }
    bool contains(double x) const { return impl_ && x >= x0_ && x <= x1_; }

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
    double x0_ = 0.0;
    double x1_ = 0.0;
};

std::vector<double> linspace(double lo, double hi, std::size_t n);
std::vector<double> logspace(double lo, double hi, std::size_t n);

}  // namespace msp
