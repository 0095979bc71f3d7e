#pragma once

#include "msp/asymptotics.hpp"
#include "msp/config.hpp"
#include "msp/simulate.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace msp {

enum class Verdict { Pass, Fail, Unresolved };
std::string to_string(Verdict v);

/// Utility, factor averages and expansion shared by every (eps, delta) cell
/// of a configuration; the averages do not depend on the scales.
struct Scenario {
    RunConfig config;
    UtilitySpec utility = make_power_utility(0.5);
    std::shared_ptr<const FactorAverages> averages;
    std::shared_ptr<const ExpansionBundle> bundle;

    MarketModel model_at(double epsilon, double delta) const;
};

Scenario build_scenario(const RunConfig& cfg);

// ---- residual order -------------------------------------------------------

struct SlopeFit {
    double slope = 0.0;
    double slope_se = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Weighted least squares of log|residual| on log(scale). Weights default to
/// 1; the slope standard error is sqrt(max(1, chi2 / (n - 2)) / Sxx).
SlopeFit fit_loglog_slope(std::span<const double> scale, std::span<const double> residual,
                          std::span<const double> weights = {});

struct ResidualRow {
    double epsilon = 0.0;
    double delta = 0.0;
    double v0 = 0.0;
    double q = 0.0;
    double v_hat = 0.0;
    double se = 0.0;
    double residual = 0.0;
    bool resolved = false;
    std::size_t floor_hits = 0;
};

struct ResidualStudy {
    std::vector<ResidualRow> rows;
    SlopeFit fit;
    Verdict verdict = Verdict::Unresolved;
};

/// E(eps) = V^pi0 - Q at (0, x0, y0, z0) for every grid cell, then a
/// log-log fit against eps + delta weighted by (E / SE)^2.
ResidualStudy residual_order_study(const Scenario& scenario);

// ---- asymptotic optimality -----------------------------------------------

StrategySpec make_strategy(const std::string& name, const RunConfig& cfg);

struct OptimalityRow {
    double epsilon = 0.0;
    double delta = 0.0;
    std::string challenger;
    double v_hat = 0.0;
    double se = 0.0;
    double ell_hat = 0.0;
    double ell_se = 0.0;
    Verdict verdict = Verdict::Unresolved;
    double v_pi0 = 0.0;
    double se_pi0 = 0.0;
};

struct ChallengerSummary {
    std::string challenger;
    Verdict verdict = Verdict::Unresolved;
    bool trend_ok = true;
    bool ntilde_available = false;
    MonotonicityVerdict ntilde;
    MonotonicityVerdict nhat;
};

struct OptimalityStudy {
    std::vector<OptimalityRow> rows;
    std::vector<ChallengerSummary> challengers;
    Verdict verdict = Verdict::Unresolved;
};

/// ell = (V~ - V^pi0) / (sqrt(eps) + sqrt(delta)) with common random numbers
/// for every challenger in the roster. The roster must contain pi_zero,
/// perturbed and at least one of scaled or zero.
OptimalityStudy optimality_study(const Scenario& scenario);

/// "Decreases or stabilizes": along cells ordered by decreasing eps + delta,
/// ell_{k+1} <= ell_k + k_sigma sqrt(se_k^2 + se_{k+1}^2) + rel |ell_k|.
bool decreases_or_stabilizes(std::span<const double> ell, std::span<const double> se,
                             double k_sigma, double rel);

// ---- invariants -----------------------------------------------------------

struct InvariantRow {
    std::string name;
    double measured = 0.0;
    double tolerance = 0.0;
    Verdict verdict = Verdict::Fail;
    std::string detail;
};

/// Runs the module-level invariants; one row per property.
std::vector<InvariantRow> invariant_suite(const Scenario& scenario);

// ---- reports --------------------------------------------------------------

void write_residual_csv(const ResidualStudy& study, const std::string& file);
void write_optimality_csv(const OptimalityStudy& study, const std::string& file);
void write_invariants_csv(const std::vector<InvariantRow>& rows, const std::string& file);
/// Residual CSV text, "epsilon,delta,v0,q,v_hat,se,residual,resolved" rows
/// plus a summary row.
std::string residual_csv(const ResidualStudy& study);
std::string optimality_csv(const OptimalityStudy& study);
std::string invariants_csv(const std::vector<InvariantRow>& rows);

/// Structured verdict summary; any section may be null.
std::string summary_json(const RunConfig& cfg, const ResidualStudy* residual,
                         const OptimalityStudy* optimality,
                         const std::vector<InvariantRow>* invariants);
void write_text(const std::string& text, const std::string& file);
/// %.17g, the round-trip representation used in every report.
std::string format_number(double v);

/// Entry point of the `msp` tool. Exit codes: 0 success (UNRESOLVED only
/// warns), 1 runtime failure, 2 bad configuration, 3 a FAIL verdict (or
/// UNRESOLVED under --strict).
int run_cli(int argc, const char* const* argv);

}  // namespace msp
