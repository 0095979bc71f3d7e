#include "msp/config.hpp"

#include "msp/asymptotics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace msp {

namespace {

std::string format_error(const std::string& source, int line, const std::string& field,
                         const std::string& message) {
    std::ostringstream os;
    os << source;
    if (line > 0) os << ":" << line;
    if (!field.empty()) os << ": [" << field << "]";
    os << ": " << message;
    return os.str();
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& v) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end || !std::isfinite(out)) {
        throw std::invalid_argument("expected a finite number, got '" + v + "'");
    }
    return out;
}

std::uint64_t to_unsigned(const std::string& v) {
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) {
        // accept integral values written in exponent form, e.g. 4e5
        const double d = to_double(v);
        if (d < 0.0 || d != std::floor(d) || d > 1e18) {
            throw std::invalid_argument("expected a non-negative integer, got '" + v + "'");
        }
        return static_cast<std::uint64_t>(d);
    }
    return out;
}

bool to_bool(const std::string& v) {
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw std::invalid_argument("empty list element in '" + v + "'");
        out.push_back(item);
    }
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
}

std::vector<double> to_doubles(const std::string& v) {
    std::vector<double> out;
    for (const auto& s : split_list(v)) out.push_back(to_double(s));
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
    static const std::map<std::string, std::map<std::string, Setter>> table = {
        {"scenario",
         {{"name", [](RunConfig& c, const std::string& v) { c.scenario = v; }},
          {"horizon", [](RunConfig& c, const std::string& v) { c.horizon = to_double(v); }},
          {"x0", [](RunConfig& c, const std::string& v) { c.x0 = to_double(v); }},
          {"y0", [](RunConfig& c, const std::string& v) { c.y0 = to_double(v); }},
          {"z0", [](RunConfig& c, const std::string& v) { c.z0 = to_double(v); }},
          {"s0", [](RunConfig& c, const std::string& v) { c.s0 = to_double(v); }}}},
        {"utility",
         {{"kind",
           [](RunConfig& c, const std::string& v) {
               if (v == "power") c.utility.kind = UtilityKind::Power;
               else if (v == "power_mixture") c.utility.kind = UtilityKind::PowerMixture;
               else throw std::invalid_argument("expected power or power_mixture, got '" + v + "'");
           }},
          {"weights", [](RunConfig& c, const std::string& v) { c.utility.weights = to_doubles(v); }},
          {"exponents",
           [](RunConfig& c, const std::string& v) { c.utility.exponents = to_doubles(v); }}}},
        {"fast_factor",
         {{"mean", [](RunConfig& c, const std::string& v) { c.fast.mean = to_double(v); }},
          {"nu", [](RunConfig& c, const std::string& v) { c.fast.nu = to_double(v); }}}},
        {"correlation",
         {{"rho1", [](RunConfig& c, const std::string& v) { c.rho.rho1 = to_double(v); }},
          {"rho2", [](RunConfig& c, const std::string& v) { c.rho.rho2 = to_double(v); }},
          {"rho12", [](RunConfig& c, const std::string& v) { c.rho.rho12 = to_double(v); }}}},
        {"grid",
         {{"epsilon", [](RunConfig& c, const std::string& v) { c.epsilons = to_doubles(v); }},
          {"delta", [](RunConfig& c, const std::string& v) { c.deltas = to_doubles(v); }}}},
        {"simulation",
         {{"paths", [](RunConfig& c, const std::string& v) { c.paths = to_unsigned(v); }},
          {"dt", [](RunConfig& c, const std::string& v) { c.dt = to_double(v); }},
          {"dt_fraction", [](RunConfig& c, const std::string& v) { c.dt_fraction = to_double(v); }},
          {"seed", [](RunConfig& c, const std::string& v) { c.seed = to_unsigned(v); }},
          {"antithetic", [](RunConfig& c, const std::string& v) { c.antithetic = to_bool(v); }},
          {"workers",
           [](RunConfig& c, const std::string& v) { c.workers = static_cast<unsigned>(to_unsigned(v)); }},
          {"residual_control_variate",
           [](RunConfig& c, const std::string& v) { c.residual_control_variate = to_bool(v); }},
          {"optimality_control_variate",
           [](RunConfig& c, const std::string& v) { c.optimality_control_variate = to_bool(v); }},
          {"optimality_paths",
           [](RunConfig& c, const std::string& v) { c.optimality_paths = to_unsigned(v); }},
          {"diagnostic_paths",
           [](RunConfig& c, const std::string& v) { c.diagnostic_paths = to_unsigned(v); }}}},
        {"strategies",
         {{"roster", [](RunConfig& c, const std::string& v) { c.roster = split_list(v); }},
          {"fast_bump", [](RunConfig& c, const std::string& v) { c.fast_bump = to_double(v); }},
          {"slow_bump", [](RunConfig& c, const std::string& v) { c.slow_bump = to_double(v); }},
          {"alpha", [](RunConfig& c, const std::string& v) { c.alpha = to_double(v); }},
          {"beta", [](RunConfig& c, const std::string& v) { c.beta = to_double(v); }},
          {"scale_factor", [](RunConfig& c, const std::string& v) { c.scale_factor = to_double(v); }}}},
        {"merton",
         {{"method", [](RunConfig& c, const std::string& v) {
               if (v != "auto") merton_method_from_string(v);
               c.merton_method = v;
           }},
          {"quadrature_nodes",
           [](RunConfig& c, const std::string& v) { c.merton.quadrature_nodes = static_cast<int>(to_unsigned(v)); }},
          {"fd_nodes", [](RunConfig& c, const std::string& v) { c.merton.fd_nodes = static_cast<int>(to_unsigned(v)); }},
          {"fd_steps", [](RunConfig& c, const std::string& v) { c.merton.fd_steps = static_cast<int>(to_unsigned(v)); }},
          {"fd_x_min", [](RunConfig& c, const std::string& v) { c.merton.fd_x_min = to_double(v); }},
          {"fd_x_max", [](RunConfig& c, const std::string& v) { c.merton.fd_x_max = to_double(v); }}}},
        {"factors",
         {{"quadrature_nodes",
           [](RunConfig& c, const std::string& v) { c.factors.quadrature_nodes = static_cast<int>(to_unsigned(v)); }},
          {"z_nodes", [](RunConfig& c, const std::string& v) { c.factors.z_nodes = static_cast<int>(to_unsigned(v)); }},
          {"z_min", [](RunConfig& c, const std::string& v) { c.factors.z_min = to_double(v); }},
          {"z_max", [](RunConfig& c, const std::string& v) { c.factors.z_max = to_double(v); }},
          {"padding", [](RunConfig& c, const std::string& v) { c.factors.padding = to_double(v); }}}},
        {"tolerances",
         {{"slope_min", [](RunConfig& c, const std::string& v) { c.tolerances.slope_min = to_double(v); }},
          {"slope_max", [](RunConfig& c, const std::string& v) { c.tolerances.slope_max = to_double(v); }},
          {"resolution_sigmas",
           [](RunConfig& c, const std::string& v) { c.tolerances.resolution_sigmas = to_double(v); }},
          {"optimality_sigmas",
           [](RunConfig& c, const std::string& v) { c.tolerances.optimality_sigmas = to_double(v); }},
          {"value_sigmas", [](RunConfig& c, const std::string& v) { c.tolerances.value_sigmas = to_double(v); }},
          {"stabilize_relative",
           [](RunConfig& c, const std::string& v) { c.tolerances.stabilize_relative = to_double(v); }}}},
        {"output",
         {{"directory", [](RunConfig& c, const std::string& v) { c.output_dir = v; }},
          {"path_csv", [](RunConfig& c, const std::string& v) { c.path_csv = to_bool(v); }}}},
    };
    return table;
}

// Sections holding a registry form plus free numeric parameters.
CoefficientSpec* coefficient_section(RunConfig& c, const std::string& section) {
    if (section == "sharpe") return &c.sharpe;
    if (section == "volatility") return &c.volatility;
    if (section == "slow_drift") return &c.slow_drift;
    if (section == "slow_diffusion") return &c.slow_diffusion;
    return nullptr;
}

}  // namespace

ConfigError::ConfigError(std::string source, int line, std::string field, const std::string& message)
    : std::runtime_error(format_error(source, line, field, message)), source_(std::move(source)),
      line_(line), field_(std::move(field)) {}

SimConfig RunConfig::sim_config(std::size_t path_count, bool control_variate) const {
    SimConfig s;
    s.paths = path_count;
    s.dt = dt;
    s.dt_fraction = dt_fraction;
    s.horizon = horizon;
    s.x0 = x0;
    s.y0 = y0;
    s.z0 = z0;
    s.s0 = s0;
    s.seed = seed;
    s.antithetic = antithetic;
    s.control_variate = control_variate;
    s.workers = workers;
    return s;
}

RunConfig default_config() { return RunConfig{}; }

RunConfig parse_config(const std::string& text, const std::string& source) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string raw, section;
    int line_no = 0;
    // A coefficient section replaces the default parameter set once it names a form.
    std::map<std::string, std::map<std::string, int>> coefficient_lines;
    std::map<std::string, bool> coefficient_reset;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(source, line_no, "", "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!schema().count(section) && !coefficient_section(cfg, section)) {
                throw ConfigError(source, line_no, section, "unknown section");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source, line_no, section, "expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) throw ConfigError(source, line_no, key, "key outside any section");
        const std::string field = section + "." + key;
        if (value.empty()) throw ConfigError(source, line_no, field, "missing value");
        try {
            if (auto* spec = coefficient_section(cfg, section)) {
                if (!coefficient_reset[section]) {
                    spec->params.clear();
                    coefficient_reset[section] = true;
                }
                if (key == "form") {
                    spec->name = value;
                } else {
                    spec->params[key] = to_double(value);
                    coefficient_lines[section][key] = line_no;
                }
                continue;
            }
            const auto& keys = schema().at(section);
            const auto it = keys.find(key);
            if (it == keys.end()) throw ConfigError(source, line_no, field, "unknown key");
            it->second(cfg, value);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError(source, line_no, field, e.what());
        }
    }
    // Registry forms are checked after the whole section is read.
    for (const char* family : {"sharpe", "volatility", "slow_drift", "slow_diffusion"}) {
        const auto* spec = coefficient_section(cfg, family);
        std::vector<std::string> expected;
        try {
            expected = coefficient_parameters(family, spec->name);
        } catch (const std::exception& e) {
            throw ConfigError(source, 0, std::string(family) + ".form", e.what());
        }
        for (const auto& [key, value] : spec->params) {
            if (std::find(expected.begin(), expected.end(), key) == expected.end()) {
                throw ConfigError(source, coefficient_lines[family][key],
                                  std::string(family) + "." + key,
                                  "unknown parameter for form '" + spec->name + "'");
            }
        }
        for (const auto& key : expected) {
            if (!spec->params.count(key)) {
                throw ConfigError(source, 0, std::string(family) + "." + key,
                                  "missing parameter for form '" + spec->name + "'");
            }
        }
    }
    validate_config(cfg, source);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    if (path == "default") return default_config();
    std::ifstream in(path);
    if (!in) throw ConfigError(path, 0, "", "cannot open configuration file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

void validate_config(const RunConfig& c, const std::string& source) {
    auto fail = [&](const std::string& field, const std::string& msg) {
        throw ConfigError(source, 0, field, msg);
    };
    if (c.scenario.empty()) fail("scenario.name", "scenario name must not be empty");
    if (!(c.horizon > 0.0)) fail("scenario.horizon", "must be > 0");
    if (!(c.x0 > 0.0)) fail("scenario.x0", "must be > 0");
    if (!(c.s0 > 0.0)) fail("scenario.s0", "must be > 0");
    if (c.epsilons.empty()) fail("grid.epsilon", "at least one grid point is required");
    if (c.epsilons.size() != c.deltas.size()) fail("grid.delta", "must have as many entries as grid.epsilon");
    for (std::size_t i = 0; i < c.epsilons.size(); ++i) {
        if (!(c.epsilons[i] > 0.0)) fail("grid.epsilon", "entries must be > 0");
        if (!(c.deltas[i] > 0.0)) fail("grid.delta", "entries must be > 0");
    }
    if (c.paths < 2) fail("simulation.paths", "must be >= 2");
    if (c.antithetic) {
        if (c.paths % 2) fail("simulation.paths", "must be even with antithetic sampling");
        if (c.optimality_paths % 2) fail("simulation.optimality_paths", "must be even with antithetic sampling");
        if (c.diagnostic_paths % 2) fail("simulation.diagnostic_paths", "must be even with antithetic sampling");
    }
    if (c.optimality_paths < 2) fail("simulation.optimality_paths", "must be >= 2");
    if (c.diagnostic_paths < 2) fail("simulation.diagnostic_paths", "must be >= 2");
    if (c.dt < 0.0) fail("simulation.dt", "must be >= 0");
    if (!(c.dt_fraction > 0.0) || c.dt_fraction > 0.05) fail("simulation.dt_fraction", "must lie in (0, 0.05]");
    if (c.workers < 1) fail("simulation.workers", "must be >= 1");
    for (const auto& r : c.roster) {
        if (r != "pi_zero" && r != "perturbed" && r != "scaled" && r != "zero") {
            fail("strategies.roster", "unknown strategy '" + r + "' (pi_zero, perturbed, scaled, zero)");
        }
    }
    if (!(c.alpha > 0.0)) fail("strategies.alpha", "must be > 0");
    if (!(c.beta > 0.0)) fail("strategies.beta", "must be > 0");
    const auto& t = c.tolerances;
    if (!(t.slope_min > 0.0) || !(t.slope_max > t.slope_min)) fail("tolerances.slope_max", "need 0 < slope_min < slope_max");
    if (!(t.resolution_sigmas > 0.0)) fail("tolerances.resolution_sigmas", "must be > 0");
    if (!(t.optimality_sigmas > 0.0)) fail("tolerances.optimality_sigmas", "must be > 0");
    if (!(t.value_sigmas > 0.0)) fail("tolerances.value_sigmas", "must be > 0");
    if (!(t.stabilize_relative >= 0.0)) fail("tolerances.stabilize_relative", "must be >= 0");
    if (c.output_dir.empty()) fail("output.directory", "must not be empty");
    if (!(c.factors.z_max > c.factors.z_min)) fail("factors.z_max", "must exceed factors.z_min");
    try {
        build_utility(c);
    } catch (const std::exception& e) {
        fail("utility", e.what());
    }
    try {
        build_model(c, Scales{c.epsilons.front(), c.deltas.front()});
    } catch (const std::exception& e) {
        fail("correlation", e.what());
    }
    try {
        resolve_merton_method(c, build_utility(c));
    } catch (const std::exception& e) {
        fail("merton.method", e.what());
    }
}

UtilitySpec build_utility(const RunConfig& cfg) {
    return make_utility(cfg.utility.kind, cfg.utility.weights, cfg.utility.exponents);
}

MarketModel build_model(const RunConfig& cfg, Scales scales) {
    return MarketModel(cfg.fast,
                       SlowFactor{make_slow_drift(cfg.slow_drift), make_slow_diffusion(cfg.slow_diffusion)},
                       make_sharpe_function(cfg.sharpe), make_volatility_function(cfg.volatility),
                       cfg.rho, scales);
}

MertonMethod resolve_merton_method(const RunConfig& cfg, const UtilitySpec& u) {
    if (cfg.merton_method == "auto") return default_merton_method(u);
    const auto m = merton_method_from_string(cfg.merton_method);
    if (m == MertonMethod::FiniteDifference) {
        throw std::invalid_argument("finite_difference is a cross-check only; use auto, dual or closed_form");
    }
    if (m == MertonMethod::ClosedFormPower && u.kind() != UtilityKind::Power) {
        throw std::invalid_argument("closed_form requires a power utility");
    }
    return m;
}

}  // namespace msp
