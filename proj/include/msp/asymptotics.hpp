#pragma once

#include "msp/factors.hpp"
#include "msp/merton.hpp"
#include "msp/utility.hpp"

#include <memory>

namespace msp {

struct ExpansionOptions {
    /// Merton method for v0. ClosedFormPower requires a power utility;
    /// FiniteDifference is rejected because v0 is re-solved at every lambda_bar(z).
    MertonMethod method = MertonMethod::DualQuadrature;
    MertonOptions merton;
};

/// Default method for a utility: closed form for Power, dual quadrature otherwise.
MertonMethod default_merton_method(const UtilitySpec& u);

/// Everything needed to evaluate the first-order expansion
///   Q = v0 + sqrt(eps) v10 + sqrt(delta) v01
/// and the zeroth-order strategy pi0. Immutable; safe for concurrent use.
class ExpansionBundle {
public:
    ExpansionBundle(std::shared_ptr<const FactorAverages> averages, UtilitySpec utility,
                    double horizon, ExpansionOptions options = {});

    const MarketModel& model() const { return averages_->model(); }
    const FactorAverages& averages() const { return *averages_; }
    const UtilitySpec& utility() const { return utility_; }
    double horizon() const { return horizon_; }
    MertonMethod method() const { return options_.method; }

    /// M(., .; lambda_bar(z)) as a standalone solution object.
    MertonSolution merton_at(double z) const;
    /// v0 and its wealth sensitivities at (t, x, z).
    MertonPoint v0_point(double t, double x, double z) const;
    /// M(t, x; lambda) for an arbitrary Sharpe ratio, using the bundle's method.
    MertonPoint merton_point(double t, double x, double lambda) const;

    double leading_order(double t, double x, double z) const;
    /// v10 = -1/2 (T - t) rho1 B(z) D1^2 v0
    double fast_correction(double t, double x, double z) const;
    /// v01 = 1/2 (T - t)^2 rho2 lambda_hat lambda_bar lambda_bar' g D1^2 v0
    double slow_correction(double t, double x, double z) const;
    /// |FD_z v0 - (T - t) lambda_bar lambda_bar' D1 v0| / (1 + |v0|), with
    /// FD_z re-solving Merton at lambda_bar(z +- h_z).
    double vega_gamma_check(double t, double x, double z, double h_z = 1e-4) const;
    /// pi0 = lambda(y, z) / sigma(y, z) R(t, x; lambda_bar(z)); zero for x <= 0.
    double pi_zero(double t, double x, double y, double z) const;
    /// -1/2 theta(y, z) D1 v0, a diagnostic only.
    double second_order_fast_diag(double t, double x, double y, double z) const;
    /// Q at the model's scales.
    double q(double t, double x, double z) const;
    double q(double t, double x, double z, double epsilon, double delta) const;

private:
    std::shared_ptr<const FactorAverages> averages_;
    UtilitySpec utility_;
    double horizon_;
    ExpansionOptions options_;
    double gamma_ = 0.0;  // set for the closed-form fast path
};

}  // namespace msp
