#include "merton_impl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace msp::detail {
namespace {

// Backward-in-time solve of the Merton HJB in s = log x. With the control
// written as the fraction q = R / x the Hamiltonian becomes
//   sup_q { 1/2 lambda^2 q^2 (M_ss - M_s) + lambda^2 q M_s },
// maximized at q = M_s / (M_s - M_ss). Each implicit step is solved by policy
// iteration; every iterate is a tridiagonal linear solve.
class FiniteDifferenceImpl final : public MertonImpl {
public:
    FiniteDifferenceImpl(const UtilitySpec& u, double sharpe, double horizon,
                         const MertonOptions& opt)
        : MertonImpl(u, sharpe, horizon, MertonMethod::FiniteDifference),
          nodes_(static_cast<std::size_t>(opt.fd_nodes)),
          steps_(static_cast<std::size_t>(opt.fd_steps)),
          s_min_(std::log(opt.fd_x_min)),
          ds_((std::log(opt.fd_x_max) - s_min_) / static_cast<double>(nodes_ - 1)),
          dtau_(horizon / static_cast<double>(steps_)) {
        if (opt.fd_nodes < 8 || opt.fd_steps < 1 || !(opt.fd_x_min > 0.0) ||
            !(opt.fd_x_max > opt.fd_x_min)) {
            throw std::invalid_argument("finite-difference Merton: invalid grid options");
        }
        solve(opt.max_newton_iterations);
    }

    MertonPoint evaluate(double t, double x) const override {
        const double tau = horizon - t;
        if (tau <= 0.0) return terminal(x);
        const double s = std::log(x);
        if (s < s_min_ || s > s_min_ + ds_ * static_cast<double>(nodes_ - 1)) {
            throw std::domain_error("finite-difference Merton: x=" + std::to_string(x) +
                                    " outside the solved grid");
        }
        const double pos = std::min(tau / dtau_, static_cast<double>(steps_));
        const std::size_t n = std::min(static_cast<std::size_t>(pos), steps_ - 1);
        const double w = pos - static_cast<double>(n);

        double d[4];
        for (int k = 0; k < 4; ++k) {
            d[k] = (1.0 - w) * interpolate(levels_[k][n], s) + w * interpolate(levels_[k][n + 1], s);
        }
        const double m = d[0], m_s = d[1], m_ss = d[2], m_sss = d[3];
        MertonPoint p;
        p.value = m;
        p.dx = m_s / x;
        p.dxx = (m_ss - m_s) / (x * x);
        const double m_xxx = (m_sss - 3.0 * m_ss + 2.0 * m_s) / (x * x * x);
        p.risk_tolerance = -p.dx / p.dxx;
        p.risk_tolerance_dx = -1.0 + p.dx * m_xxx / (p.dxx * p.dxx);
        p.dt = -0.5 * sharpe * sharpe * p.risk_tolerance * p.dx;
        return p;
    }

private:
    using Level = std::vector<double>;

    double node(std::size_t i) const { return s_min_ + ds_ * static_cast<double>(i); }

    // Four-point Lagrange interpolation on the uniform s grid.
    double interpolate(const Level& f, double s) const {
        const double pos = (s - s_min_) / ds_;
        const auto last = static_cast<std::ptrdiff_t>(nodes_) - 1;
        std::ptrdiff_t i0 = static_cast<std::ptrdiff_t>(std::floor(pos)) - 1;
        i0 = std::clamp<std::ptrdiff_t>(i0, 0, last - 3);
        const double u = pos - static_cast<double>(i0);
        double out = 0.0;
        for (int j = 0; j < 4; ++j) {
            double basis = 1.0;
            for (int k = 0; k < 4; ++k) {
                if (k != j) basis *= (u - k) / static_cast<double>(j - k);
            }
            out += basis * f[static_cast<std::size_t>(i0 + j)];
        }
        return out;
    }

    void store(const Level& m) {
        const std::size_t n = nodes_;
        Level d1(n), d2(n), d3(n);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            d1[i] = (m[i + 1] - m[i - 1]) / (2.0 * ds_);
            d2[i] = (m[i + 1] - 2.0 * m[i] + m[i - 1]) / (ds_ * ds_);
        }
        d1[0] = (-3.0 * m[0] + 4.0 * m[1] - m[2]) / (2.0 * ds_);
        d1[n - 1] = (3.0 * m[n - 1] - 4.0 * m[n - 2] + m[n - 3]) / (2.0 * ds_);
        d2[0] = 2.0 * d2[1] - d2[2];
        d2[n - 1] = 2.0 * d2[n - 2] - d2[n - 3];
        for (std::size_t i = 1; i + 1 < n; ++i) d3[i] = (d2[i + 1] - d2[i - 1]) / (2.0 * ds_);
        d3[0] = 2.0 * d3[1] - d3[2];
        d3[n - 1] = 2.0 * d3[n - 2] - d3[n - 3];
        levels_[0].push_back(m);
        levels_[1].push_back(std::move(d1));
        levels_[2].push_back(std::move(d2));
        levels_[3].push_back(std::move(d3));
    }

    void solve(int max_iterations) {
        const std::size_t n = nodes_;
        const double l2 = sharpe * sharpe;
        Level m(n), q(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = std::exp(node(i));
            m[i] = utility.value(x);
            q[i] = utility.risk_tolerance(x) / x;
        }
        for (auto& lv : levels_) lv.reserve(steps_ + 1);
        store(m);
        const double lower = m[0];

        Level sub(n), diag(n), sup(n), rhs(n), next(n);
        for (std::size_t step = 1; step <= steps_; ++step) {
            const double ratio = m[n - 1] / m[n - 2];
            bool converged = false;
            for (int it = 0; it < max_iterations; ++it) {
                diag[0] = 1.0; sup[0] = 0.0; sub[0] = 0.0; rhs[0] = lower;
                for (std::size_t i = 1; i + 1 < n; ++i) {
                    // L_q M = a (M_ss - M_s) + b M_s with a = lambda^2 q^2 / 2, b = lambda^2 q
                    const double a = 0.5 * l2 * q[i] * q[i];
                    const double b = l2 * q[i];
                    const double c2 = a / (ds_ * ds_);
                    const double c1 = (b - a) / (2.0 * ds_);
                    sub[i] = -dtau_ * (c2 - c1);
                    diag[i] = 1.0 + dtau_ * 2.0 * c2;
                    sup[i] = -dtau_ * (c2 + c1);
                    rhs[i] = m[i];
                }
                // Lagged log-linear extrapolation at x_max.
                sub[n - 1] = -ratio; diag[n - 1] = 1.0; sup[n - 1] = 0.0; rhs[n - 1] = 0.0;
                next = solve_tridiagonal(sub, diag, sup, rhs);

                double change = 0.0;
                for (std::size_t i = 1; i + 1 < n; ++i) {
                    const double m_s = (next[i + 1] - next[i - 1]) / (2.0 * ds_);
                    const double m_ss = (next[i + 1] - 2.0 * next[i] + next[i - 1]) / (ds_ * ds_);
                    if (!(m_s > 0.0) || !(m_ss - m_s < 0.0)) {
                        throw std::runtime_error(
                            "finite-difference Merton: concavity lost at x=" +
                            std::to_string(std::exp(node(i))) + ", step " + std::to_string(step));
                    }
                    const double q_new = m_s / (m_s - m_ss);
                    change = std::max(change, std::abs(q_new - q[i]) / q_new);
                    q[i] = q_new;
                }
                if (change < 1e-10) {
                    converged = true;
                    break;
                }
            }
            if (!converged) {
                throw std::runtime_error("finite-difference Merton: policy iteration stalled at step " +
                                         std::to_string(step));
            }
            m.swap(next);
            store(m);
        }
    }

    std::size_t nodes_;
    std::size_t steps_;
    double s_min_;
    double ds_;
    double dtau_;
    // levels_[k][n] holds d^k M / ds^k at tau = n * dtau.
    std::vector<std::vector<Level>> levels_ = std::vector<std::vector<Level>>(4);
};

}  // namespace

std::shared_ptr<const MertonImpl> make_finite_difference_impl(const UtilitySpec& u, double sharpe,
                                                              double horizon,
                                                              const MertonOptions& options) {
    return std::make_shared<const FiniteDifferenceImpl>(u, sharpe, horizon, options);
}

}  // namespace msp::detail
