#pragma once

#include "msp/numerics.hpp"

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace msp {

using FieldFunction = std::function<double(double y, double z)>;
using SlowFunction = std::function<double(double z)>;

/// Ornstein-Uhlenbeck fast factor: b(y) = m - y, a(y) = nu sqrt(2), so
/// L0 = nu^2 d^2/dy^2 + (m - y) d/dy with invariant law Normal(m, nu^2).
/// nu = 0 is accepted and means a point-mass invariant law at m.
struct FastFactor {
    double mean = 0.0;
    double nu = 1.0;

    double drift(double y) const { return mean - y; }
    double diffusion() const { return nu * 1.4142135623730951; }
};

struct SlowFactor {
    SlowFunction drift;      // c(z)
    SlowFunction diffusion;  // g(z)
};

struct Correlations {
    double rho1 = 0.0;   // <W, W^Y>
    double rho2 = 0.0;   // <W, W^Z>
    double rho12 = 0.0;  // <W^Y, W^Z>
};

/// 1 + 2 rho1 rho2 rho12 - rho1^2 - rho2^2 - rho12^2.
double correlation_determinant(const Correlations& c);

struct Scales {
    double epsilon = 0.1;
    double delta = 0.1;
};

/// Market with a fast OU factor Y, a slow factor Z and coefficient functions
/// lambda(y, z), sigma(y, z); the drift is mu = lambda sigma.
class MarketModel {
public:
    /// Throws std::invalid_argument unless every |rho| < 1, the correlation
    /// matrix is positive definite, scales are positive and sigma > 0 on a
    /// sampled compact of (y, z).
    MarketModel(FastFactor fast, SlowFactor slow, FieldFunction sharpe, FieldFunction volatility,
                Correlations rho, Scales scales);

    const FastFactor& fast() const { return fast_; }
    const SlowFactor& slow() const { return slow_; }
    const Correlations& correlations() const { return rho_; }
    const Scales& scales() const { return scales_; }

    double sharpe(double y, double z) const { return sharpe_(y, z); }
    double volatility(double y, double z) const { return volatility_(y, z); }
    double drift(double y, double z) const { return sharpe_(y, z) * volatility_(y, z); }
    const FieldFunction& sharpe_function() const { return sharpe_; }

    /// Lower-triangular factor of the (W, W^Y, W^Z) correlation matrix,
    /// row-major.
    const std::array<double, 9>& cholesky() const { return cholesky_; }

    MarketModel with_scales(Scales s) const;

private:
    FastFactor fast_;
    SlowFactor slow_;
    FieldFunction sharpe_;
    FieldFunction volatility_;
    Correlations rho_;
    Scales scales_;
    std::array<double, 9> cholesky_{};
};

/// Named coefficient forms selectable from configuration files.
struct CoefficientSpec {
    std::string name;
    std::map<std::string, double> params;
};

/// sharpe: constant{value}, affine{l0, l1} = l0 + l1 z,
///         affine_tanh{l0, l1, eta} = l0 + l1 z + eta tanh(y), linear_y{scale} = scale y
FieldFunction make_sharpe_function(const CoefficientSpec& spec);
/// volatility: constant{value}, exp_tanh{base, k} = base exp(k tanh(y))
FieldFunction make_volatility_function(const CoefficientSpec& spec);
/// slow drift: ou{kappa, mean} = kappa (mean - z), zero
SlowFunction make_slow_drift(const CoefficientSpec& spec);
/// slow diffusion: constant{value}
SlowFunction make_slow_diffusion(const CoefficientSpec& spec);

/// Parameter names each registry entry accepts, for config validation.
std::vector<std::string> coefficient_parameters(const std::string& family, const std::string& name);

/// <f> against Normal(m, nu^2) by Gauss-Hermite quadrature. Throws
/// std::runtime_error if f is non-finite at a node.
double invariant_average(const FastFactor& fast, const std::function<double(double)>& f,
                         int nodes = 96);
double invariant_average(const MarketModel& model, const FieldFunction& f, double z,
                         int nodes = 96);

/// Solution of L0 theta = lambda^2(., z) - lambda_bar^2(z) at fixed z with
/// <theta> = 0.
class PoissonSolution {
public:
    PoissonSolution(const MarketModel& model, double z, int nodes = 96,
                    double centering_tolerance = 1e-10);

    /// d theta / dy from the integral representation
    /// (2 / (a^2 Phi(y))) int_{-inf}^y (lambda^2 - lambda_bar^2) Phi.
    double dy(double y) const;
    /// theta(y), normalized so that <theta> = 0. Costs a nested quadrature.
    double value(double y) const;
    double lambda_bar_squared() const { return lambda_bar_sq_; }
    /// <lambda^2 - lambda_bar^2> as computed; zero up to round-off.
    double centering_error() const { return centering_error_; }

private:
    double source(double y) const;
    double primitive(double y) const;  // int_m^y dy

    FastFactor fast_;
    FieldFunction sharpe_;
    double z_;
    double lambda_bar_sq_;
    double centering_error_;
    int nodes_;
};

PoissonSolution solve_poisson(const MarketModel& model, double z, int nodes = 96);

/// B(z) = < lambda a d theta / dy >.
double compute_B(const MarketModel& model, double z, int nodes = 96);

struct FactorOptions {
    int quadrature_nodes = 96;
    int z_nodes = 201;
    double z_min = -1.0;
    double z_max = 1.0;
    double padding = 0.2;
    // theta_y lookup table used by the simulator's control variate
    int theta_y_nodes = 161;
    int theta_z_nodes = 21;
    double theta_y_halfwidth = 8.0;  // in units of nu
};

/// Pointwise averaged quantities at one z.
struct AveragesPoint {
    double lambda_bar = 0.0;
    double lambda_hat = 0.0;
    double lambda_bar_prime = 0.0;
    double B = 0.0;
};

/// Computes lambda_bar, lambda_hat, lambda_bar' and B at z without caching.
AveragesPoint compute_averages(const MarketModel& model, double z, int nodes = 96);

/// z-indexed averages cached on a padded uniform grid with cubic splines;
/// points outside the grid fall back to direct computation. Immutable after
/// construction.
class FactorAverages {
public:
    FactorAverages(const MarketModel& model, FactorOptions options = {});

    double lambda_bar(double z) const;
    double lambda_hat(double z) const;
    double lambda_bar_prime(double z) const;
    double B(double z) const;
    AveragesPoint at(double z) const;

    double theta(double y, double z) const;
    double theta_y(double y, double z) const;
    /// Bilinear lookup of d theta / dy on a precomputed (y, z) table, clamped
    /// at the edges. Approximate; used where speed matters more than accuracy.
    double theta_y_fast(double y, double z) const;

    const MarketModel& model() const { return *model_; }
    const FactorOptions& options() const { return options_; }

private:
    std::shared_ptr<const MarketModel> model_;
    FactorOptions options_;
    double grid_lo_ = 0.0;
    double grid_hi_ = 0.0;
    UniformCubicSpline bar_, hat_, bar_prime_, b_;
    std::vector<double> theta_table_;
    double ty_lo_ = 0.0, ty_step_ = 1.0, tz_lo_ = 0.0, tz_step_ = 1.0;
    int ty_n_ = 0, tz_n_ = 0;
};

FactorAverages averaged_sharpe(const MarketModel& model, FactorOptions options = {});

}  // namespace msp
