#pragma once

#include "msp/asymptotics.hpp"
#include "msp/factors.hpp"
#include "msp/merton.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace msp {

/// State seen by a strategy at the start of a time step. v0 and pi0 are
/// evaluated once per step and shared by every strategy component.
struct StepContext {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    MertonPoint v0;     // v0 and wealth sensitivities at (t, x, z)
    double pi0 = 0.0;   // zeroth-order position at the current state
    double epsilon = 0.0;
    double delta = 0.0;
};

using BumpFunction = std::function<double(const StepContext&)>;

enum class StrategyKind { PiZero, Perturbed, Scaled, Zero };

/// pi = pi0, 0, factor * base, or base + eps^alpha fast_bump + delta^beta slow_bump.
struct StrategySpec {
    StrategyKind kind = StrategyKind::PiZero;
    std::shared_ptr<const StrategySpec> base;
    BumpFunction fast_bump;
    BumpFunction slow_bump;
    double alpha = 0.0;
    double beta = 0.0;
    double factor = 1.0;
    std::string label = "pi_zero";

    static StrategySpec pi_zero();
    static StrategySpec zero();
    static StrategySpec scaled(StrategySpec base, double factor);
    static StrategySpec perturbed(StrategySpec base, BumpFunction fast_bump,
                                  BumpFunction slow_bump, double alpha, double beta);

    double position(const StepContext& ctx) const;
    /// eps^alpha fast + delta^beta slow for Perturbed; 0 otherwise.
    double bump(const StepContext& ctx) const;
};

/// c min(1 + |Y|, X): bounded in Y, capped by current wealth.
BumpFunction default_fast_bump(double c);
/// c R(t, X; lambda_bar(Z)).
BumpFunction default_slow_bump(double c);

struct SimConfig {
    std::size_t paths = 20000;   // total paths; pairs when antithetic
    double dt = 0.0;             // 0 selects dt_fraction * min(eps, delta), rounded to divide T
    double dt_fraction = 0.05;
    double horizon = 1.0;
    double x0 = 1.0;
    double y0 = 0.0;
    double z0 = 0.0;
    double s0 = 1.0;
    std::uint64_t seed = 20240601;
    bool antithetic = true;
    bool control_variate = false;
    unsigned workers = 1;
};

/// Time step actually used for a configuration and scales.
double resolve_time_step(const SimConfig& cfg, const Scales& scales);

struct PathRecord {
    std::size_t index = 0;
    double x_T = 0.0;
    double s_T = 0.0;
    double y_T = 0.0;
    double z_T = 0.0;
    double utility = 0.0;          // U(X_T)
    double control = 0.0;          // sum of control-variate martingale increments
    bool floor_hit = false;
    bool failed = false;
    double ntilde = 0.0;           // accumulated N~ increments
    double nhat = 0.0;             // accumulated N^ increments
    std::uint32_t ntilde_positive = 0;  // increments > 0 (sign violations)
    std::uint32_t ntilde_flat = 0;      // increments == 0 with a nonzero bump
    std::uint32_t nhat_positive = 0;
    std::uint32_t nhat_flat = 0;        // increments == 0 with pi != pi0
};

struct PathEnsemble {
    std::vector<PathRecord> paths;
    std::size_t steps = 0;
    double dt = 0.0;
    bool antithetic = true;
    bool control_variate = false;
    bool ntilde_available = false;  // strategy is Perturbed over PiZero
    std::string strategy;
};

/// Simulates (S, Y, Z, X) with exact OU steps for Y, Euler for Z and X and
/// log-Euler for S. Each antithetic pair draws from its own mt19937_64
/// stream seeded by (seed, pair index), so the ensemble does not depend on
/// the worker count. Wealth is floored at 0 and absorbed.
PathEnsemble simulate_paths(const MarketModel& model, const StrategySpec& strategy,
                            const ExpansionBundle& bundle, const SimConfig& cfg);

struct ValueEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
    std::size_t n = 0;            // paths
    std::size_t effective_n = 0;  // independent samples (pairs when antithetic)
    std::size_t floor_hits = 0;
    std::size_t failures = 0;
    double raw_mean = 0.0;        // without control variate
    double raw_standard_error = 0.0;
    double moments[4] = {0, 0, 0, 0};  // E|U(X_T)|^k, k = 1..4
};

/// Per-sample values fed to the estimator: U(X_T) minus the control when the
/// ensemble carries one, averaged within antithetic pairs.
std::vector<double> sample_values(const PathEnsemble& ens, bool use_control);

/// Throws std::runtime_error if any path failed.
ValueEstimate estimate_value(const PathEnsemble& ens);
ValueEstimate estimate_value(const MarketModel& model, const StrategySpec& strategy,
                             const ExpansionBundle& bundle, const SimConfig& cfg);

/// Paired estimate of E[a] - E[b] for ensembles simulated with common random
/// numbers (same seed, same step); returns mean and standard error.
SampleStats paired_difference(const PathEnsemble& a, const PathEnsemble& b);

struct MonotonicityVerdict {
    bool pass = true;
    std::size_t paths = 0;
    std::size_t violating_paths = 0;
    std::size_t positive_increments = 0;
    std::size_t flat_increments = 0;
    double max_total = 0.0;  // largest accumulated value (should be <= 0)
};

/// Sign test on dN~ = 1/2 (eps^a bump10 + delta^b bump01)^2 sigma^2 v0_xx dt.
/// Throws std::invalid_argument unless the ensemble came from Perturbed(PiZero).
MonotonicityVerdict ntilde_diagnostic(const PathEnsemble& ens);
/// Sign test on dN^ = 1/2 (pi - pi0)^2 sigma^2 v0_xx dt.
MonotonicityVerdict nhat_diagnostic(const PathEnsemble& ens);

/// Writes "path,x_T,utility,floor_hit" rows.
void write_path_csv(const PathEnsemble& ens, const std::string& file);

}  // namespace msp
