#pragma once

#include <span>
#include <string>
#include <vector>

namespace msp {

enum class UtilityKind { Power, PowerMixture };

/// One term c * x^gamma / gamma of a power-type utility.
struct PowerTerm {
    double weight;
    double exponent;
};

/// A utility U(x) = sum_i c_i x^{gamma_i} / gamma_i on (0, inf) with every
/// gamma_i in (0, 1) and c_i > 0. A single term is the power (CRRA) case.
///
/// Members satisfy the standing assumptions used throughout the library:
/// U(0+) = 0, Inada conditions, AE[U] = max gamma_i < 1 and a risk tolerance
/// R(x) = -U'(x)/U''(x) that vanishes at 0 and is strictly increasing.
///
/// Immutable; safe to share across threads.
class UtilitySpec {
public:
    UtilityKind kind() const { return kind_; }
    std::span<const PowerTerm> terms() const { return terms_; }
    double asymptotic_elasticity() const { return asymptotic_elasticity_; }
    /// Exponent of the single term; throws unless kind() == Power.
    double power_exponent() const;

    double value(double x) const;
    double marginal(double x) const;    // U'
    double curvature(double x) const;   // U''
    double third(double x) const;       // U'''
    double risk_tolerance(double x) const;
    double risk_tolerance_dx(double x) const;

    /// I(y) = (U')^{-1}(y). Closed form for Power; safeguarded Newton in
    /// log-wealth with a bisection fallback for mixtures.
    double inverse_marginal(double y) const;

    /// Convex conjugate U~(y) = sup_x {U(x) - xy} = U(I(y)) - y I(y) and its
    /// first three derivatives.
    double conjugate(double y) const;
    double conjugate_d1(double y) const;
    double conjugate_d2(double y) const;
    double conjugate_d3(double y) const;

    std::string describe() const;

private:
    friend UtilitySpec make_power_utility(double gamma);
    friend UtilitySpec make_power_mixture(std::vector<double> weights,
                                          std::vector<double> exponents);
    UtilitySpec(UtilityKind kind, std::vector<PowerTerm> terms);

    UtilityKind kind_;
    std::vector<PowerTerm> terms_;
    double asymptotic_elasticity_;
};

UtilitySpec make_power_utility(double gamma);
UtilitySpec make_power_mixture(std::vector<double> weights, std::vector<double> exponents);

/// Generic constructor: for Power, `weights` is ignored and `exponents` must
/// have exactly one entry.
UtilitySpec make_utility(UtilityKind kind, std::vector<double> weights,
                         std::vector<double> exponents);

double inverse_marginal(const UtilitySpec& u, double y);

/// Sampled check of the standing assumptions on x in logspace(x_lo, x_hi).
/// Returns human-readable warnings; an empty result means every sampled
/// check held.
std::vector<std::string> validate_assumptions(const UtilitySpec& u, double x_lo = 1e-3,
                                              double x_hi = 1e3, int samples = 121);

}  // namespace msp
