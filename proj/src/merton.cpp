#include "merton_impl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace msp {

std::string to_string(MertonMethod m) {
    switch (m) {
        case MertonMethod::ClosedFormPower: return "closed_form";
        case MertonMethod::DualQuadrature: return "dual";
        case MertonMethod::FiniteDifference: return "finite_difference";
    }
    return "unknown";
}

MertonMethod merton_method_from_string(const std::string& s) {
    if (s == "closed_form") return MertonMethod::ClosedFormPower;
    if (s == "dual") return MertonMethod::DualQuadrature;
    if (s == "finite_difference") return MertonMethod::FiniteDifference;
    throw std::invalid_argument("unknown Merton method '" + s +
                                "' (expected closed_form, dual or finite_difference)");
}

namespace detail {

MertonPoint MertonImpl::terminal(double x) const {
    MertonPoint p;
    p.value = utility.value(x);
    p.dx = utility.marginal(x);
    p.dxx = utility.curvature(x);
    p.risk_tolerance = utility.risk_tolerance(x);
    p.risk_tolerance_dx = utility.risk_tolerance_dx(x);
    p.dt = 0.5 * sharpe * sharpe * p.dx * p.dx / p.dxx;
    return p;
}

namespace {

// lambda = 0: the PDE degenerates to M_t = 0.
class TrivialImpl final : public MertonImpl {
public:
    using MertonImpl::MertonImpl;
    MertonPoint evaluate(double, double x) const override {
        auto p = terminal(x);
        p.dt = 0.0;
        return p;
    }
};

class ClosedFormImpl final : public MertonImpl {
public:
    ClosedFormImpl(UtilitySpec u, double sharpe, double horizon)
        : MertonImpl(std::move(u), sharpe, horizon, MertonMethod::ClosedFormPower),
          gamma_(utility.power_exponent()) {}

    MertonPoint evaluate(double t, double x) const override {
        return power_merton_point(gamma_, sharpe, std::max(horizon - t, 0.0), x);
    }

private:
    double gamma_;
};

// Dual route: V~(t, y) = E[U~(y H)], H = exp(-lambda^2 tau / 2 + lambda sqrt(tau) xi),
// solves the linear dual PDE exactly; M is recovered by Legendre inversion
// x = -V~_y(t, y*), M = V~(t, y*) + x y*.
class DualImpl final : public MertonImpl {
public:
    DualImpl(UtilitySpec u, double sharpe, double horizon, const MertonOptions& options)
        : MertonImpl(std::move(u), sharpe, horizon, MertonMethod::DualQuadrature),
          rule_(gauss_hermite_rule(options.quadrature_nodes)),
          max_iterations_(std::max(options.max_newton_iterations, 50)) {}

    MertonPoint evaluate(double t, double x) const override {
        const double tau = horizon - t;
        if (tau <= 0.0) return terminal(x);
        const std::size_t n = rule_.nodes.size();
        std::vector<double> h(n);
        const double vol = sharpe * std::sqrt(tau);
        for (std::size_t i = 0; i < n; ++i) {
            h[i] = std::exp(-0.5 * vol * vol + vol * rule_.nodes[i]);
        }
        const double y = solve_dual_point(h, x);

        double v = 0.0, v_yy = 0.0, v_yyy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = rule_.weights[i];
            if (w == 0.0) continue;
            const double arg = y * h[i];
            const double xi = utility.inverse_marginal(arg);
            const double u2 = utility.curvature(xi);
            const double hi = h[i];
            v += w * (utility.value(xi) - arg * xi);
            v_yy += w * hi * hi * (-1.0 / u2);
            v_yyy += w * hi * hi * hi * utility.third(xi) / (u2 * u2 * u2);
        }
        MertonPoint p;
        p.value = v + x * y;
        p.dx = y;
        p.dxx = -1.0 / v_yy;
        p.risk_tolerance = y * v_yy;
        p.risk_tolerance_dx = -1.0 - y * v_yyy / v_yy;
        p.dt = -0.5 * sharpe * sharpe * p.risk_tolerance * p.dx;
        return p;
    }

private:
    // Solves E[H I(y H)] = x for y by safeguarded Newton in log y.
    double solve_dual_point(const std::vector<double>& h, double x) const {
        const double log_x = std::log(x);
        auto eval = [&](double log_y, double& slope) {
            const double y = std::exp(log_y);
            double mean = 0.0, dmean = 0.0;
            for (std::size_t i = 0; i < h.size(); ++i) {
                const double w = rule_.weights[i];
                if (w == 0.0) continue;
                const double arg = y * h[i];
                const double xi = utility.inverse_marginal(arg);
                mean += w * h[i] * xi;
                dmean += w * h[i] * arg / utility.curvature(xi);
            }
            slope = dmean / mean;
            return std::log(mean) - log_x;
        };
        double s = std::log(utility.marginal(x));
        double slope = 0.0;
        double f = eval(s, slope);
        double lo = -INFINITY, hi = INFINITY;
        for (int it = 0; it < max_iterations_; ++it) {
            if (f > 0.0) lo = s; else hi = s;
            double next = s - f / slope;
            if (!(next > lo && next < hi) || !std::isfinite(next)) {
                if (std::isfinite(lo) && std::isfinite(hi)) {
                    next = 0.5 * (lo + hi);
                } else {
                    next = std::isfinite(lo) ? lo + 1.0 : hi - 1.0;
                }
            }
            if (std::abs(next - s) <= 1e-14 * std::max(1.0, std::abs(s))) return std::exp(next);
            s = next;
            f = eval(s, slope);
            if (std::abs(f) <= 1e-15) return std::exp(s);
        }
        throw std::runtime_error("Merton dual inversion did not converge at x=" +
                                 std::to_string(x));
    }

    GaussHermiteRule rule_;
    int max_iterations_;
};

}  // namespace
}  // namespace detail

MertonSolution::MertonSolution(std::shared_ptr<const detail::MertonImpl> impl)
    : impl_(std::move(impl)) {}

MertonPoint MertonSolution::evaluate(double t, double x) const {
    if (!(x > 0.0)) throw std::domain_error("MertonSolution: wealth must be positive");
    if (t > impl_->horizon) throw std::domain_error("MertonSolution: t beyond horizon");
    return impl_->evaluate(t, x);
}

const UtilitySpec& MertonSolution::utility() const { return impl_->utility; }
double MertonSolution::sharpe() const { return impl_->sharpe; }
double MertonSolution::horizon() const { return impl_->horizon; }
MertonMethod MertonSolution::method() const { return impl_->method; }

MertonSolution solve_merton(const UtilitySpec& u, double sharpe, double horizon,
                            MertonMethod method, const MertonOptions& options) {
    if (!(sharpe >= 0.0) || !std::isfinite(sharpe)) {
        throw std::invalid_argument("solve_merton: Sharpe ratio must be >= 0");
    }
    if (!(horizon > 0.0)) throw std::invalid_argument("solve_merton: horizon must be > 0");
    if (method == MertonMethod::ClosedFormPower && u.kind() != UtilityKind::Power) {
        throw std::invalid_argument("solve_merton: closed form requires a power utility");
    }
    if (sharpe == 0.0) {
        return MertonSolution(std::make_shared<const detail::TrivialImpl>(u, 0.0, horizon, method));
    }
    switch (method) {
        case MertonMethod::ClosedFormPower:
            return MertonSolution(std::make_shared<const detail::ClosedFormImpl>(u, sharpe, horizon));
        case MertonMethod::DualQuadrature:
            return MertonSolution(
                std::make_shared<const detail::DualImpl>(u, sharpe, horizon, options));
        case MertonMethod::FiniteDifference:
            return MertonSolution(detail::make_finite_difference_impl(u, sharpe, horizon, options));
    }
    throw std::invalid_argument("solve_merton: unknown method");
}

double risk_tolerance(const MertonSolution& sol, double t, double x) {
    return sol.risk_tolerance(t, x);
}

WealthFunction apply_dk(const MertonSolution& sol, int k, WealthFunction f) {
    if (k < 1 || k > 4) throw std::invalid_argument("apply_dk: k must be in {1,2,3,4}");
    // Step grows with the order to balance truncation against round-off.
    static constexpr double kRelativeStep[] = {0.0, 1e-3, 2e-3, 5e-3, 1e-2};
    return [sol, k, f = std::move(f)](double t, double x) {
        const double h = kRelativeStep[k] * x;
        const double deriv =
            richardson_derivative([&](double s) { return f(t, s); }, x, h, k);
        if (deriv == 0.0) return 0.0;
        return std::pow(sol.risk_tolerance(t, x), k) * deriv;
    };
}

double merton_strategy(const MertonSolution& sol, double t, double x, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("merton_strategy: sigma must be > 0");
    if (sol.sharpe() == 0.0 || x <= 0.0) return 0.0;
    return sol.sharpe() / sigma * sol.risk_tolerance(t, x);
}

double residual_of_pde(const MertonSolution& sol, double t, double x) {
    const double lambda = sol.sharpe();
    const double horizon = sol.horizon();
    auto m_of_x = [&](double s) { return sol.value(t, s); };
    auto m_of_t = [&](double s) { return sol.value(s, x); };

    // Time step: centred where possible, otherwise backward to stay in [0, T].
    const double ht = 1e-4 * std::max(horizon, 1e-8);
    double m_t = 0.0;
    if (t + ht <= horizon) {
        m_t = richardson_derivative(m_of_t, t, ht, 1);
    } else {
        const double a = m_of_t(t), b = m_of_t(t - ht), c = m_of_t(t - 2.0 * ht);
        m_t = (3.0 * a - 4.0 * b + c) / (2.0 * ht);
    }
    const double m_x = richardson_derivative(m_of_x, x, 1e-4 * x, 1);
    const double m_xx = richardson_derivative(m_of_x, x, 2e-3 * x, 2);
    if (lambda == 0.0) return m_t;
    const double r = -m_x / m_xx;
    return m_t + 0.5 * lambda * lambda * r * r * m_xx + lambda * lambda * r * m_x;
}

MertonPoint power_merton_point(double gamma, double sharpe, double tau, double x) {
    const double rate = 0.5 * sharpe * sharpe * gamma / (1.0 - gamma);
    const double growth = std::exp(rate * tau);
    const double xg = std::pow(x, gamma);
    MertonPoint p;
    p.value = xg / gamma * growth;
    p.dx = xg / x * growth;
    p.dxx = (gamma - 1.0) * p.dx / x;
    p.dt = -rate * p.value;
    p.risk_tolerance = x / (1.0 - gamma);
    p.risk_tolerance_dx = 1.0 / (1.0 - gamma);
    return p;
}

double constant_fraction_value(double gamma, double sharpe, double fraction, double tau,
                               double x) {
    // dX / X = k lambda^2 / (1-gamma) dt + k lambda / (1-gamma) dW
    const double a = fraction * sharpe * sharpe / (1.0 - gamma);
    const double b = fraction * sharpe / (1.0 - gamma);
    const double exponent = gamma * (a - 0.5 * b * b) * tau + 0.5 * gamma * gamma * b * b * tau;
    return std::pow(x, gamma) / gamma * std::exp(exponent);
}

}  // namespace msp
