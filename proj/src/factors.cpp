#include "msp/factors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace msp {

namespace {

// Depth is capped: the Poisson integrals nearly cancel close to the mean, so
// a relative tolerance alone would never terminate there.
template <class F>
double integrate(F&& f, double lo, double hi, unsigned max_depth = 4) {
    using boost::math::quadrature::gauss_kronrod;
    return gauss_kronrod<double, 61>::integrate(std::forward<F>(f), lo, hi, max_depth, 1e-14);
}

const GaussHermiteRule& cached_rule(int nodes) {
    static const GaussHermiteRule rule96 = gauss_hermite_rule(96);
    if (nodes == 96) return rule96;
    thread_local GaussHermiteRule other;
    if (static_cast<int>(other.nodes.size()) != nodes) other = gauss_hermite_rule(nodes);
    return other;
}

}  // namespace

double correlation_determinant(const Correlations& c) {
    return 1.0 + 2.0 * c.rho1 * c.rho2 * c.rho12 - c.rho1 * c.rho1 - c.rho2 * c.rho2 -
           c.rho12 * c.rho12;
}

MarketModel::MarketModel(FastFactor fast, SlowFactor slow, FieldFunction sharpe,
                         FieldFunction volatility, Correlations rho, Scales scales)
    : fast_(fast), slow_(std::move(slow)), sharpe_(std::move(sharpe)),
      volatility_(std::move(volatility)), rho_(rho), scales_(scales) {
    if (!sharpe_ || !volatility_ || !slow_.drift || !slow_.diffusion) {
        throw std::invalid_argument("market model: every coefficient function must be set");
    }
    if (!(fast_.nu >= 0.0) || !std::isfinite(fast_.mean)) {
        throw std::invalid_argument("market model: fast factor needs nu >= 0 and finite mean");
    }
    for (double r : {rho_.rho1, rho_.rho2, rho_.rho12}) {
        if (!(std::abs(r) < 1.0)) {
            throw std::invalid_argument("market model: correlations must lie in (-1, 1)");
        }
    }
    const double det = correlation_determinant(rho_);
    if (!(det > 0.0)) {
        throw std::invalid_argument(
            "market model: correlation matrix not positive definite (determinant " +
            std::to_string(det) + ")");
    }
    if (!(scales_.epsilon > 0.0) || !(scales_.delta > 0.0)) {
        throw std::invalid_argument("market model: epsilon and delta must be positive");
    }
    for (int i = -4; i <= 4; ++i) {
        for (int j = -4; j <= 4; ++j) {
            const double y = fast_.mean + fast_.nu * i;
            const double z = 0.5 * j;
            if (!(volatility_(y, z) > 0.0)) {
                throw std::invalid_argument("market model: sigma not positive at (y, z) = (" +
                                            std::to_string(y) + ", " + std::to_string(z) + ")");
            }
        }
    }
    const double l11 = std::sqrt(1.0 - rho_.rho1 * rho_.rho1);
    const double l21 = (rho_.rho12 - rho_.rho1 * rho_.rho2) / l11;
    const double l22 = std::sqrt(1.0 - rho_.rho2 * rho_.rho2 - l21 * l21);
    cholesky_ = {1.0, 0.0, 0.0, rho_.rho1, l11, 0.0, rho_.rho2, l21, l22};
}

MarketModel MarketModel::with_scales(Scales s) const {
    return MarketModel(fast_, slow_, sharpe_, volatility_, rho_, s);
}

double invariant_average(const FastFactor& fast, const std::function<double(double)>& f,
                         int nodes) {
    if (fast.nu == 0.0) {
        const double v = f(fast.mean);
        if (!std::isfinite(v)) {
            throw std::runtime_error("invariant_average: non-finite integrand at y=" +
                                     std::to_string(fast.mean));
        }
        return v;
    }
    const auto& rule = cached_rule(nodes);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        if (rule.weights[i] == 0.0) continue;
        const double y = fast.mean + fast.nu * rule.nodes[i];
        const double v = f(y);
        if (!std::isfinite(v)) {
            throw std::runtime_error("invariant_average: non-finite integrand at y=" +
                                     std::to_string(y));
        }
        sum += rule.weights[i] * v;
    }
    return sum;
}

double invariant_average(const MarketModel& model, const FieldFunction& f, double z, int nodes) {
    return invariant_average(model.fast(), [&](double y) { return f(y, z); }, nodes);
}

PoissonSolution::PoissonSolution(const MarketModel& model, double z, int nodes,
                                 double centering_tolerance)
    : fast_(model.fast()), sharpe_(model.sharpe_function()), z_(z), nodes_(nodes) {
    lambda_bar_sq_ = invariant_average(
        fast_, [&](double y) { const double l = sharpe_(y, z_); return l * l; }, nodes_);
    if (lambda_bar_sq_ < 0.0) {
        throw std::runtime_error("Poisson: negative <lambda^2>, quadrature corrupted");
    }
    centering_error_ = invariant_average(fast_, [&](double y) { return source(y); }, nodes_);
    if (std::abs(centering_error_) > centering_tolerance * std::max(1.0, lambda_bar_sq_)) {
        throw std::runtime_error("Poisson: source fails the centering check (" +
                                 std::to_string(centering_error_) + ")");
    }
}

double PoissonSolution::source(double y) const {
    const double l = sharpe_(y, z_);
    return l * l - lambda_bar_sq_;
}

// Both branches divide out Phi(y) analytically. Below the mean, with u = y - s,
//   Phi(y - s) / Phi(y) = exp(s (2 (y - m) - s) / (2 nu^2)),
// and above it the centering lets us integrate the right tail instead.
double PoissonSolution::dy(double y) const {
    const double nu = fast_.nu;
    if (nu == 0.0) return 0.0;
    const double d = y - fast_.mean;
    const double two_nu2 = 2.0 * nu * nu;
    // Truncate where the Gaussian ratio drops below e^-40.
    const double cutoff = -std::abs(d) + std::sqrt(d * d + 80.0 * nu * nu);
    double integral = 0.0;
    if (d <= 0.0) {
        integral = integrate(
            [&](double s) { return source(y - s) * std::exp(s * (2.0 * d - s) / two_nu2); }, 0.0,
            cutoff);
    } else {
        integral = -integrate(
            [&](double s) { return source(y + s) * std::exp(-s * (2.0 * d + s) / two_nu2); }, 0.0,
            cutoff);
    }
    // 2 / a^2 = 1 / nu^2 for a = nu sqrt(2)
    return integral / (nu * nu);
}

double PoissonSolution::primitive(double y) const {
    if (y == fast_.mean) return 0.0;
    return integrate([&](double u) { return dy(u); }, fast_.mean, y, 2);
}

double PoissonSolution::value(double y) const {
    if (fast_.nu == 0.0) return 0.0;
    // <int_m^Y theta_y> by parts: int_m^inf theta_y P(Y > u) du - int_-inf^m theta_y P(Y < u) du
    const double m = fast_.mean, nu = fast_.nu;
    auto upper_tail = [&](double u) { return 0.5 * std::erfc((u - m) / (nu * std::sqrt(2.0))); };
    const double span = 12.0 * nu;
    const double above = integrate([&](double u) { return dy(u) * upper_tail(u); }, m, m + span, 2);
    const double below =
        integrate([&](double u) { return dy(u) * upper_tail(2.0 * m - u); }, m - span, m, 2);
    return primitive(y) - (above - below);
}

PoissonSolution solve_poisson(const MarketModel& model, double z, int nodes) {
    return PoissonSolution(model, z, nodes);
}

double compute_B(const MarketModel& model, double z, int nodes) {
    const PoissonSolution theta(model, z, nodes);
    const double a = model.fast().diffusion();
    return invariant_average(
        model.fast(), [&](double y) { return model.sharpe(y, z) * a * theta.dy(y); }, nodes);
}

namespace {

double lambda_bar_direct(const MarketModel& model, double z, int nodes) {
    const double m2 = invariant_average(
        model.fast(), [&](double y) { const double l = model.sharpe(y, z); return l * l; }, nodes);
    if (m2 < 0.0) throw std::runtime_error("averaged_sharpe: negative <lambda^2>");
    return std::sqrt(m2);
}

}  // namespace

AveragesPoint compute_averages(const MarketModel& model, double z, int nodes) {
    AveragesPoint p;
    p.lambda_bar = lambda_bar_direct(model, z, nodes);
    p.lambda_hat = invariant_average(model.fast(), [&](double y) { return model.sharpe(y, z); },
                                     nodes);
    const double h = 1e-4 * std::max(1.0, std::abs(z));
    p.lambda_bar_prime = richardson_derivative(
        [&](double s) { return lambda_bar_direct(model, s, nodes); }, z, h, 1);
    p.B = compute_B(model, z, nodes);
    return p;
}

FactorAverages::FactorAverages(const MarketModel& model, FactorOptions options)
    : model_(std::make_shared<const MarketModel>(model)), options_(options) {
    if (options_.z_nodes < 4 || !(options_.z_max > options_.z_min) || options_.padding < 0.0) {
        throw std::invalid_argument("factor averages: invalid z-grid options");
    }
    const double span = options_.z_max - options_.z_min;
    grid_lo_ = options_.z_min - options_.padding * span;
    grid_hi_ = options_.z_max + options_.padding * span;
    const auto n = static_cast<std::size_t>(options_.z_nodes);
    const double step = (grid_hi_ - grid_lo_) / static_cast<double>(n - 1);
    std::vector<double> bar(n), hat(n), prime(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = compute_averages(*model_, grid_lo_ + step * static_cast<double>(i),
                                        options_.quadrature_nodes);
        bar[i] = p.lambda_bar;
        hat[i] = p.lambda_hat;
        prime[i] = p.lambda_bar_prime;
        b[i] = p.B;
    }
    bar_ = UniformCubicSpline(grid_lo_, step, bar);
    hat_ = UniformCubicSpline(grid_lo_, step, hat);
    bar_prime_ = UniformCubicSpline(grid_lo_, step, prime);
    b_ = UniformCubicSpline(grid_lo_, step, b);

    ty_n_ = std::max(options_.theta_y_nodes, 2);
    tz_n_ = std::max(options_.theta_z_nodes, 2);
    const double nu = model_->fast().nu;
    const double half = options_.theta_y_halfwidth * std::max(nu, 1e-12);
    ty_lo_ = model_->fast().mean - half;
    ty_step_ = 2.0 * half / (ty_n_ - 1);
    tz_lo_ = grid_lo_;
    tz_step_ = (grid_hi_ - grid_lo_) / (tz_n_ - 1);
    theta_table_.assign(static_cast<std::size_t>(ty_n_ * tz_n_), 0.0);
    if (nu > 0.0) {
        for (int j = 0; j < tz_n_; ++j) {
            const PoissonSolution theta(*model_, tz_lo_ + tz_step_ * j, options_.quadrature_nodes);
            for (int i = 0; i < ty_n_; ++i) {
                theta_table_[static_cast<std::size_t>(j * ty_n_ + i)] =
                    theta.dy(ty_lo_ + ty_step_ * i);
            }
        }
    }
}

double FactorAverages::lambda_bar(double z) const {
    if (bar_.contains(z)) return bar_(z);
    return lambda_bar_direct(*model_, z, options_.quadrature_nodes);
}

double FactorAverages::lambda_hat(double z) const {
    if (hat_.contains(z)) return hat_(z);
    return invariant_average(*model_, model_->sharpe_function(), z, options_.quadrature_nodes);
}

double FactorAverages::lambda_bar_prime(double z) const {
    if (bar_prime_.contains(z)) return bar_prime_(z);
    return compute_averages(*model_, z, options_.quadrature_nodes).lambda_bar_prime;
}

double FactorAverages::B(double z) const {
    if (b_.contains(z)) return b_(z);
    return compute_B(*model_, z, options_.quadrature_nodes);
}

AveragesPoint FactorAverages::at(double z) const {
    if (bar_.contains(z)) return {bar_(z), hat_(z), bar_prime_(z), b_(z)};
    return compute_averages(*model_, z, options_.quadrature_nodes);
}

double FactorAverages::theta(double y, double z) const {
    return PoissonSolution(*model_, z, options_.quadrature_nodes).value(y);
}

double FactorAverages::theta_y(double y, double z) const {
    return PoissonSolution(*model_, z, options_.quadrature_nodes).dy(y);
}

double FactorAverages::theta_y_fast(double y, double z) const {
    const double fy = std::clamp((y - ty_lo_) / ty_step_, 0.0, static_cast<double>(ty_n_ - 1));
    const double fz = std::clamp((z - tz_lo_) / tz_step_, 0.0, static_cast<double>(tz_n_ - 1));
    const int i = std::min(static_cast<int>(fy), ty_n_ - 2);
    const int j = std::min(static_cast<int>(fz), tz_n_ - 2);
    const double wy = fy - i, wz = fz - j;
    auto at = [&](int ii, int jj) { return theta_table_[static_cast<std::size_t>(jj * ty_n_ + ii)]; };
    return (1.0 - wz) * ((1.0 - wy) * at(i, j) + wy * at(i + 1, j)) +
           wz * ((1.0 - wy) * at(i, j + 1) + wy * at(i + 1, j + 1));
}

FactorAverages averaged_sharpe(const MarketModel& model, FactorOptions options) {
    return FactorAverages(model, options);
}

}  // namespace msp
