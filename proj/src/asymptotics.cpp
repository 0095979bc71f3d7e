#include "msp/asymptotics.hpp"

#include "msp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace msp {

MertonMethod default_merton_method(const UtilitySpec& u) {
    return u.kind() == UtilityKind::Power ? MertonMethod::ClosedFormPower
                                          : MertonMethod::DualQuadrature;
}

ExpansionBundle::ExpansionBundle(std::shared_ptr<const FactorAverages> averages,
                                 UtilitySpec utility, double horizon, ExpansionOptions options)
    : averages_(std::move(averages)), utility_(std::move(utility)), horizon_(horizon),
      options_(options) {
    if (!averages_) throw std::invalid_argument("expansion: factor averages are required");
    if (!(horizon_ > 0.0)) throw std::invalid_argument("expansion: horizon must be > 0");
    if (options_.method == MertonMethod::FiniteDifference) {
        throw std::invalid_argument(
            "expansion: finite-difference Merton cannot be re-solved per z; use dual or closed_form");
    }
    if (options_.method == MertonMethod::ClosedFormPower) {
        gamma_ = utility_.power_exponent();
    }
}

MertonSolution ExpansionBundle::merton_at(double z) const {
    return solve_merton(utility_, averages_->lambda_bar(z), horizon_, options_.method,
                        options_.merton);
}

MertonPoint ExpansionBundle::merton_point(double t, double x, double lambda) const {
    if (options_.method == MertonMethod::ClosedFormPower) {
        if (!(x > 0.0)) throw std::domain_error("expansion: wealth must be positive");
        return power_merton_point(gamma_, lambda, std::max(horizon_ - t, 0.0), x);
    }
    return solve_merton(utility_, lambda, horizon_, options_.method, options_.merton).evaluate(t, x);
}

MertonPoint ExpansionBundle::v0_point(double t, double x, double z) const {
    return merton_point(t, x, averages_->lambda_bar(z));
}

double ExpansionBundle::leading_order(double t, double x, double z) const {
    return v0_point(t, x, z).value;
}

double ExpansionBundle::fast_correction(double t, double x, double z) const {
    const double tau = horizon_ - t;
    const double rho1 = model().correlations().rho1;
    if (tau <= 0.0 || rho1 == 0.0) return 0.0;
    return -0.5 * tau * rho1 * averages_->B(z) * v0_point(t, x, z).d1_squared();
}

double ExpansionBundle::slow_correction(double t, double x, double z) const {
    const double tau = horizon_ - t;
    const double rho2 = model().correlations().rho2;
    if (tau <= 0.0 || rho2 == 0.0) return 0.0;
    const auto a = averages_->at(z);
    const double g = model().slow().diffusion(z);
    return 0.5 * tau * tau * rho2 * a.lambda_hat * a.lambda_bar * a.lambda_bar_prime * g *
           v0_point(t, x, z).d1_squared();
}

double ExpansionBundle::vega_gamma_check(double t, double x, double z, double h_z) const {
    const double tau = horizon_ - t;
    const int nodes = averages_->options().quadrature_nodes;
    const auto direct = compute_averages(model(), z, nodes);
    const auto v0 = merton_point(t, x, direct.lambda_bar);
    auto v0_of_z = [&](double s) {
        const double lb = std::sqrt(invariant_average(
            model().fast(), [&](double y) { const double l = model().sharpe(y, s); return l * l; },
            nodes));
        return merton_point(t, x, lb).value;
    };
    const double lhs = richardson_derivative(v0_of_z, z, h_z, 1);
    const double rhs = tau * direct.lambda_bar * direct.lambda_bar_prime * v0.d1();
    return std::abs(lhs - rhs) / (1.0 + std::abs(v0.value));
}

double ExpansionBundle::pi_zero(double t, double x, double y, double z) const {
    if (!(x > 0.0)) return 0.0;
    const double lambda = model().sharpe(y, z);
    if (lambda == 0.0) return 0.0;
    const double sigma = model().volatility(y, z);
    if (!(sigma > 0.0)) throw std::domain_error("pi_zero: sigma must be positive");
    return lambda / sigma * v0_point(t, x, z).risk_tolerance;
}

double ExpansionBundle::second_order_fast_diag(double t, double x, double y, double z) const {
    if (!(x > 0.0)) return 0.0;
    const double theta = averages_->theta(y, z);
    if (theta == 0.0) return 0.0;
    return -0.5 * theta * v0_point(t, x, z).d1();
}

double ExpansionBundle::q(double t, double x, double z) const {
    const auto& s = model().scales();
    return q(t, x, z, s.epsilon, s.delta);
}

double ExpansionBundle::q(double t, double x, double z, double epsilon, double delta) const {
    double out = leading_order(t, x, z);
    if (epsilon > 0.0) out += std::sqrt(epsilon) * fast_correction(t, x, z);
    if (delta > 0.0) out += std::sqrt(delta) * slow_correction(t, x, z);
    return out;
}

}  // namespace msp
