#pragma once

#include "msp/factors.hpp"
#include "msp/merton.hpp"
#include "msp/simulate.hpp"
#include "msp/utility.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace msp {

/// Malformed or inconsistent configuration. `line` is 0 when the problem is
/// a cross-field validation rather than a specific input line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string source, int line, std::string field, const std::string& message);
    const std::string& source() const { return source_; }
    int line() const { return line_; }
    const std::string& field() const { return field_; }

private:
    std::string source_;
    int line_;
    std::string field_;
};

struct UtilityConfig {
    UtilityKind kind = UtilityKind::Power;
    std::vector<double> weights{1.0};
    std::vector<double> exponents{0.5};
};

struct Tolerances {
    double slope_min = 0.7;
    double slope_max = 1.4;
    double resolution_sigmas = 2.0;   // |E| > k SE counts as resolved
    double optimality_sigmas = 2.0;   // ell <= k SE
    double value_sigmas = 3.0;        // closed-form value checks
    double stabilize_relative = 0.25; // slack for "decreases or stabilizes"
};

struct RunConfig {
    std::string scenario = "reference";
    double horizon = 1.0;
    double x0 = 1.0;
    double y0 = 0.0;
    double z0 = 0.0;
    double s0 = 1.0;

    UtilityConfig utility;
    FastFactor fast{0.0, 1.0};
    CoefficientSpec sharpe{"affine_tanh", {{"l0", 0.5}, {"l1", 0.3}, {"eta", 0.3}}};
    CoefficientSpec volatility{"constant", {{"value", 0.25}}};
    CoefficientSpec slow_drift{"ou", {{"kappa", 1.0}, {"mean", 0.0}}};
    CoefficientSpec slow_diffusion{"constant", {{"value", 0.5}}};
    Correlations rho{-0.5, -0.4, 0.3};

    std::vector<double> epsilons{0.4, 0.2, 0.1, 0.05};
    std::vector<double> deltas{0.4, 0.2, 0.1, 0.05};

    std::size_t paths = 400000;
    double dt = 0.0;
    double dt_fraction = 0.05;
    std::uint64_t seed = 20240601;
    bool antithetic = true;
    unsigned workers = 1;
    bool residual_control_variate = true;
    bool optimality_control_variate = true;
    std::size_t optimality_paths = 100000;
    std::size_t diagnostic_paths = 10000;

    std::vector<std::string> roster{"pi_zero", "perturbed", "scaled"};
    double fast_bump = 0.1;
    double slow_bump = 0.1;
    double alpha = 0.25;
    double beta = 0.25;
    double scale_factor = 0.5;

    std::string merton_method = "auto";
    MertonOptions merton;
    FactorOptions factors;
    Tolerances tolerances;

    std::string output_dir = "msp_output";
    bool path_csv = false;

    /// Simulation block for one (eps, delta) cell.
    SimConfig sim_config(std::size_t path_count, bool control_variate) const;
};

/// Parses the INI-style format:
///   [section]
///   key = value        # comments start with '#' or ';'
/// Lists are comma separated. Unknown sections or keys are errors.
RunConfig parse_config(const std::string& text, const std::string& source = "<string>");
/// Reads a file; the name "default" returns default_config().
RunConfig load_config(const std::string& path);
/// The built-in reference scenario.
RunConfig default_config();
/// Cross-field checks; throws ConfigError.
void validate_config(const RunConfig& cfg, const std::string& source = "<config>");

UtilitySpec build_utility(const RunConfig& cfg);
MarketModel build_model(const RunConfig& cfg, Scales scales);
MertonMethod resolve_merton_method(const RunConfig& cfg, const UtilitySpec& u);

}  // namespace msp
