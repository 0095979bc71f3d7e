#pragma once

#include "msp/utility.hpp"

#include <functional>
#include <memory>
#include <string>

namespace msp {

enum class MertonMethod { ClosedFormPower, DualQuadrature, FiniteDifference };

std::string to_string(MertonMethod m);
MertonMethod merton_method_from_string(const std::string& s);

struct MertonOptions {
    int quadrature_nodes = 96;
    int fd_nodes = 800;
    int fd_steps = 400;
    double fd_x_min = 1e-3;
    double fd_x_max = 1e3;
    int max_newton_iterations = 50;
};

/// Value and wealth sensitivities of M(t, x; lambda) at one point.
struct MertonPoint {
    double value = 0.0;
    double dx = 0.0;                  // M_x
    double dxx = 0.0;                 // M_xx
    double dt = 0.0;                  // M_t
    double risk_tolerance = 0.0;      // R = -M_x / M_xx
    double risk_tolerance_dx = 0.0;   // R_x

    /// D1 M = R M_x.
    double d1() const { return risk_tolerance * dx; }
    /// D1^2 M = R d/dx(R M_x) = R M_x (R_x - 1).
    double d1_squared() const { return risk_tolerance * dx * (risk_tolerance_dx - 1.0); }
    /// d/dx (D1 M) = M_x (R_x - 1).
    double d1_dx() const { return dx * (risk_tolerance_dx - 1.0); }
};

namespace detail {
class MertonImpl;
}

/// Solution of the constant-Sharpe-ratio Merton problem
///   M_t - (1/2) lambda^2 M_x^2 / M_xx = 0,  M(T, x) = U(x)
/// for a general utility. Cheap to copy, immutable, and safe for concurrent
/// evaluation.
class MertonSolution {
public:
    MertonPoint evaluate(double t, double x) const;
    double value(double t, double x) const { return evaluate(t, x).value; }
    double risk_tolerance(double t, double x) const { return evaluate(t, x).risk_tolerance; }

    const UtilitySpec& utility() const;
    double sharpe() const;
    double horizon() const;
    MertonMethod method() const;

private:
    friend MertonSolution solve_merton(const UtilitySpec&, double, double, MertonMethod,
                                       const MertonOptions&);
    explicit MertonSolution(std::shared_ptr<const detail::MertonImpl> impl);
    std::shared_ptr<const detail::MertonImpl> impl_;
};

/// Builds a solution object. ClosedFormPower requires a Power utility.
/// FiniteDifference runs the full backward solve here and throws
/// std::runtime_error if policy iteration stalls or concavity is lost.
/// A zero Sharpe ratio bypasses every method and returns M = U.
MertonSolution solve_merton(const UtilitySpec& u, double sharpe, double horizon,
                            MertonMethod method, const MertonOptions& options = {});

double risk_tolerance(const MertonSolution& sol, double t, double x);

using WealthFunction = std::function<double(double t, double x)>;

/// (t, x) -> R(t, x; lambda)^k d^k f / dx^k, k in {1, 2, 3, 4}; the wealth
/// derivative is taken by Richardson-extrapolated central differences.
WealthFunction apply_dk(const MertonSolution& sol, int k, WealthFunction f);

/// pi* = (lambda / sigma) R(t, x; lambda).
double merton_strategy(const MertonSolution& sol, double t, double x, double sigma);

/// M_t + (1/2) lambda^2 D2 M + lambda^2 D1 M with every derivative taken
/// numerically from M's values; a solver-quality diagnostic.
double residual_of_pde(const MertonSolution& sol, double t, double x);

/// Closed-form M and sensitivities for U = x^gamma / gamma at time-to-go
/// tau; the allocation-free path used inside simulation loops.
MertonPoint power_merton_point(double gamma, double sharpe, double tau, double x);

/// Expected power utility of holding k times the Merton position under
/// constant coefficients: the wealth is geometric Brownian motion, so
/// E[U(X_T)] is explicit.
double constant_fraction_value(double gamma, double sharpe, double fraction, double tau,
                               double x);

}  // namespace msp
