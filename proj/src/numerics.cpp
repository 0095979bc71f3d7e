#include "msp/numerics.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace msp {

GaussHermiteRule gauss_hermite_rule(int n) {
    if (n < 1) {
        throw std::invalid_argument("gauss_hermite_rule: n must be >= 1");
    }
    // Physicists' Hermite roots by Newton iteration on the orthonormal
    // recurrence, then rescaled to the standard normal weight.
    const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
    std::vector<double> x(n), w(n);
    const int m = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
        } else if (i == 1) {
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * x[0];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * x[1];
        } else {
            z = 2.0 * z - x[i - 2];
        }
        double pp = 0.0;
        int its = 0;
        for (; its < 200; ++its) {
            double p1 = pim4;
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 - std::sqrt(j / (j + 1.0)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        if (its == 200) {
            throw std::runtime_error("gauss_hermite_rule: root iteration failed");
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if (n % 2 == 1) x[m - 1] = 0.0;

    GaussHermiteRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
    // x is descending; store ascending.
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = std::numbers::sqrt2 * x[n - 1 - i];
        rule.weights[i] = w[n - 1 - i] * inv_sqrt_pi;
    }
    return rule;
}

double pairwise_sum(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n <= 16) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

SampleStats sample_stats(std::span<const double> values) {
    SampleStats out;
    out.count = values.size();
    if (values.empty()) return out;
    const double n = static_cast<double>(values.size());
    out.mean = pairwise_sum(values) / n;
    if (values.size() < 2) return out;
    std::vector<double> sq(values.size());
    std::transform(values.begin(), values.end(), sq.begin(), [&](double v) {
        const double d = v - out.mean;
        return d * d;
    });
    out.variance = pairwise_sum(sq) / (n - 1.0);
    out.standard_error = std::sqrt(out.variance / n);
    return out;
}

std::vector<double> solve_tridiagonal(std::span<const double> lower,
                                      std::span<const double> diag,
                                      std::span<const double> upper,
                                      std::span<const double> rhs) {
    const std::size_t n = diag.size();
    if (lower.size() != n || upper.size() != n || rhs.size() != n || n == 0) {
        throw std::invalid_argument("solve_tridiagonal: size mismatch");
    }
    std::vector<double> c(n), d(n);
    double pivot = diag[0];
    if (pivot == 0.0) throw std::runtime_error("solve_tridiagonal: zero pivot at row 0");
    c[0] = upper[0] / pivot;
    d[0] = rhs[0] / pivot;
    for (std::size_t i = 1; i < n; ++i) {
        pivot = diag[i] - lower[i] * c[i - 1];
        if (pivot == 0.0) {
            throw std::runtime_error("solve_tridiagonal: zero pivot at row " + std::to_string(i));
        }
        c[i] = upper[i] / pivot;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / pivot;
    }
    std::vector<double> x(n);
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    return x;
}

namespace {

double central_difference(const std::function<double(double)>& f, double x, double h,
                          int order) {
    switch (order) {
        case 1:
            return (f(x + h) - f(x - h)) / (2.0 * h);
        case 2:
            return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        case 3:
            return (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) /
                   (2.0 * h * h * h);
        case 4:
            return (f(x + 2.0 * h) - 4.0 * f(x + h) + 6.0 * f(x) - 4.0 * f(x - h) +
                    f(x - 2.0 * h)) /
                   (h * h * h * h);
        default:
            throw std::invalid_argument("central_difference: order must be in 1..4");
    }
}

}  // namespace

double richardson_derivative(const std::function<double(double)>& f, double x, double h,
                             int order) {
    const double coarse = central_difference(f, x, h, order);
    const double fine = central_difference(f, x, 0.5 * h, order);
    return (4.0 * fine - coarse) / 3.0;
}

struct UniformCubicSpline::Impl {
    boost::math::interpolators::cardinal_cubic_b_spline<double> spline;
};

UniformCubicSpline::UniformCubicSpline(double x0, double step, const std::vector<double>& values)
    : x0_(x0), x1_(x0 + step * static_cast<double>(values.size() - 1)) {
    if (values.size() < 4 || !(step > 0.0)) {
        throw std::invalid_argument("UniformCubicSpline: need >= 4 nodes and positive step");
    }
    impl_ = std::make_shared<const Impl>(
        Impl{boost::math::interpolators::cardinal_cubic_b_spline<double>(
            values.begin(), values.end(), x0, step)});
}

double UniformCubicSpline::operator()(double x) const {
    if (!contains(x)) throw std::domain_error("UniformCubicSpline: outside grid");
    return impl_->spline(x);
}

double UniformCubicSpline::derivative(double x) const {
    if (!contains(x)) throw std::domain_error("UniformCubicSpline: outside grid");
    return impl_->spline.prime(x);
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return v;
}

std::vector<double> logspace(double lo, double hi, std::size_t n) {
    auto v = linspace(std::log(lo), std::log(hi), n);
    for (auto& e : v) e = std::exp(e);
    return v;
}

}  // namespace msp
