#include "msp/utility.hpp"

#include "msp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace msp {

UtilitySpec::UtilitySpec(UtilityKind kind, std::vector<PowerTerm> terms)
    : kind_(kind), terms_(std::move(terms)), asymptotic_elasticity_(0.0) {
    if (terms_.empty()) {
        throw std::invalid_argument("utility: at least one component is required");
    }
    for (const auto& t : terms_) {
        if (!(t.exponent > 0.0 && t.exponent < 1.0)) {
            throw std::invalid_argument(
                "utility: exponents must lie in the open interval (0,1), got " +
                std::to_string(t.exponent));
        }
        if (!(t.weight > 0.0) || !std::isfinite(t.weight)) {
            throw std::invalid_argument("utility: mixture weights must be strictly positive");
        }
        asymptotic_elasticity_ = std::max(asymptotic_elasticity_, t.exponent);
    }
}

UtilitySpec make_power_utility(double gamma) {
    return UtilitySpec(UtilityKind::Power, {PowerTerm{1.0, gamma}});
}

UtilitySpec make_power_mixture(std::vector<double> weights, std::vector<double> exponents) {
    if (weights.size() != exponents.size()) {
        throw std::invalid_argument("utility: weights and exponents differ in length");
    }
    std::vector<PowerTerm> terms;
    terms.reserve(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        terms.push_back({weights[i], exponents[i]});
    }
    return UtilitySpec(UtilityKind::PowerMixture, std::move(terms));
}

UtilitySpec make_utility(UtilityKind kind, std::vector<double> weights,
                         std::vector<double> exponents) {
    if (kind == UtilityKind::Power) {
        if (exponents.size() != 1) {
            throw std::invalid_argument("utility: power utility takes exactly one exponent");
        }
        return make_power_utility(exponents.front());
    }
    return make_power_mixture(std::move(weights), std::move(exponents));
}

double UtilitySpec::power_exponent() const {
    if (kind_ != UtilityKind::Power) {
        throw std::logic_error("utility: power_exponent requested on a mixture");
    }
    return terms_.front().exponent;
}

double UtilitySpec::value(double x) const {
    double s = 0.0;
    for (const auto& t : terms_) s += t.weight * std::pow(x, t.exponent) / t.exponent;
    return s;
}

double UtilitySpec::marginal(double x) const {
    double s = 0.0;
    for (const auto& t : terms_) s += t.weight * std::pow(x, t.exponent - 1.0);
    return s;
}

double UtilitySpec::curvature(double x) const {
    double s = 0.0;
    for (const auto& t : terms_) {
        s += t.weight * (t.exponent - 1.0) * std::pow(x, t.exponent - 2.0);
    }
    return s;
}

double UtilitySpec::third(double x) const {
    double s = 0.0;
    for (const auto& t : terms_) {
        s += t.weight * (t.exponent - 1.0) * (t.exponent - 2.0) * std::pow(x, t.exponent - 3.0);
    }
    return s;
}

double UtilitySpec::risk_tolerance(double x) const {
    if (kind_ == UtilityKind::Power) return x / (1.0 - terms_.front().exponent);
    return -marginal(x) / curvature(x);
}

double UtilitySpec::risk_tolerance_dx(double x) const {
    if (kind_ == UtilityKind::Power) return 1.0 / (1.0 - terms_.front().exponent);
    // R = -U'/U''  =>  R' = -1 + U' U''' / U''^2
    const double u2 = curvature(x);
    return -1.0 + marginal(x) * third(x) / (u2 * u2);
}

double UtilitySpec::inverse_marginal(double y) const {
    if (!(y > 0.0)) throw std::invalid_argument("inverse_marginal: y must be positive");
    if (kind_ == UtilityKind::Power) {
        const auto& t = terms_.front();
        return std::pow(y / t.weight, 1.0 / (t.exponent - 1.0));
    }
    // Solve g(s) = log U'(e^s) - log y = 0; g is smooth, strictly decreasing
    // with slope in [gamma_min - 1, gamma_max - 1].
    const double log_y = std::log(y);
    auto g = [&](double s) { return std::log(marginal(std::exp(s))) - log_y; };
    auto g_prime = [&](double s) {
        const double x = std::exp(s);
        return x * curvature(x) / marginal(x);
    };
    double weight_sum = 0.0, mean_exp = 0.0;
    for (const auto& t : terms_) {
        weight_sum += t.weight;
        mean_exp += t.weight * t.exponent;
    }
    mean_exp /= weight_sum;
    double s = (log_y - std::log(weight_sum)) / (mean_exp - 1.0);

    double lo = s - 1.0, hi = s + 1.0;
    while (g(lo) < 0.0) lo -= 2.0 * (hi - lo);
    while (g(hi) > 0.0) hi += 2.0 * (hi - lo);

    for (int it = 0; it < 200; ++it) {
        const double gs = g(s);
        if (gs == 0.0) return std::exp(s);
        if (gs > 0.0) lo = s; else hi = s;
        double next = s - gs / g_prime(s);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - s) <= 1e-15 * std::max(1.0, std::abs(s))) return std::exp(next);
        s = next;
        if (hi - lo <= 1e-15 * std::max(1.0, std::abs(s))) return std::exp(s);
    }
    throw std::runtime_error("inverse_marginal: iteration did not converge");
}

double UtilitySpec::conjugate(double y) const {
    const double x = inverse_marginal(y);
    return value(x) - y * x;
}

double UtilitySpec::conjugate_d1(double y) const { return -inverse_marginal(y); }

double UtilitySpec::conjugate_d2(double y) const {
    return -1.0 / curvature(inverse_marginal(y));
}

double UtilitySpec::conjugate_d3(double y) const {
    const double x = inverse_marginal(y);
    const double u2 = curvature(x);
    return third(x) / (u2 * u2 * u2);
}

std::string UtilitySpec::describe() const {
    std::ostringstream os;
    if (kind_ == UtilityKind::Power) {
        os << "Power(gamma=" << terms_.front().exponent << ")";
        return os.str();
    }
    os << "PowerMixture(";
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        if (i) os << ", ";
        os << terms_[i].weight << "*x^" << terms_[i].exponent;
    }
    os << ")";
    return os.str();
}

double inverse_marginal(const UtilitySpec& u, double y) { return u.inverse_marginal(y); }

std::vector<std::string> validate_assumptions(const UtilitySpec& u, double x_lo, double x_hi,
                                              int samples) {
    std::vector<std::string> warnings;
    const auto grid = logspace(x_lo, x_hi, static_cast<std::size_t>(samples));
    double prev_r = 0.0;
    double max_r2_curv = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid[i];
        if (!(u.marginal(x) > 0.0)) warnings.push_back("U' not positive at x=" + std::to_string(x));
        if (!(u.curvature(x) < 0.0)) warnings.push_back("U'' not negative at x=" + std::to_string(x));
        const double r = u.risk_tolerance(x);
        if (!(r > 0.0)) warnings.push_back("R not positive at x=" + std::to_string(x));
        if (i > 0 && !(r > prev_r)) {
            warnings.push_back("R not strictly increasing near x=" + std::to_string(x));
        }
        prev_r = r;
        if (!std::isfinite(u.risk_tolerance_dx(x))) {
            warnings.push_back("R' not finite at x=" + std::to_string(x));
        }
        // (R^2)'' = 2 R'^2 + 2 R R''
        const double h = 1e-3 * x;
        const double r_xx = richardson_derivative(
            [&](double s) { return u.risk_tolerance(s); }, x, h, 2);
        const double rp = u.risk_tolerance_dx(x);
        max_r2_curv = std::max(max_r2_curv, std::abs(2.0 * rp * rp + 2.0 * r * r_xx));
    }
    if (u.risk_tolerance(x_lo) > 10.0 * x_lo / (1.0 - u.asymptotic_elasticity()) + 1e-12) {
        warnings.push_back("R(0+) does not appear to vanish");
    }
    if (!std::isfinite(max_r2_curv)) warnings.push_back("(R^2)'' unbounded on sampled grid");
    return warnings;
}

}  // namespace msp
