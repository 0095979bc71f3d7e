#include "msp/factors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace msp {

namespace {

struct Entry {
    const char* family;
    const char* name;
    std::vector<std::string> params;
};

const std::vector<Entry>& registry() {
    static const std::vector<Entry> entries = {
        {"sharpe", "constant", {"value"}},
        {"sharpe", "affine", {"l0", "l1"}},
        {"sharpe", "affine_tanh", {"l0", "l1", "eta"}},
        {"sharpe", "linear_y", {"scale"}},
        {"volatility", "constant", {"value"}},
        {"volatility", "exp_tanh", {"base", "k"}},
        {"slow_drift", "ou", {"kappa", "mean"}},
        {"slow_drift", "zero", {}},
        {"slow_diffusion", "constant", {"value"}},
    };
    return entries;
}

void check(const std::string& family, const CoefficientSpec& spec) {
    const auto expected = coefficient_parameters(family, spec.name);
    for (const auto& [key, value] : spec.params) {
        if (std::find(expected.begin(), expected.end(), key) == expected.end()) {
            throw std::invalid_argument(family + " '" + spec.name + "': unknown parameter '" +
                                        key + "'");
        }
        if (!std::isfinite(value)) {
            throw std::invalid_argument(family + " '" + spec.name + "': parameter '" + key +
                                        "' is not finite");
        }
    }
    for (const auto& key : expected) {
        if (!spec.params.count(key)) {
            throw std::invalid_argument(family + " '" + spec.name + "': missing parameter '" +
                                        key + "'");
        }
    }
}

}  // namespace

std::vector<std::string> coefficient_parameters(const std::string& family, const std::string& name) {
    for (const auto& e : registry()) {
        if (family == e.family && name == e.name) return e.params;
    }
    std::string known;
    for (const auto& e : registry()) {
        if (family != e.family) continue;
        if (!known.empty()) known += ", ";
        known += e.name;
    }
    throw std::invalid_argument("unknown " + family + " form '" + name + "' (known: " + known + ")");
}

FieldFunction make_sharpe_function(const CoefficientSpec& spec) {
    check("sharpe", spec);
    const auto& p = spec.params;
    if (spec.name == "constant") {
        const double v = p.at("value");
        return [v](double, double) { return v; };
    }
    if (spec.name == "affine") {
        const double l0 = p.at("l0"), l1 = p.at("l1");
        return [l0, l1](double, double z) { return l0 + l1 * z; };
    }
    if (spec.name == "affine_tanh") {
        const double l0 = p.at("l0"), l1 = p.at("l1"), eta = p.at("eta");
        return [l0, l1, eta](double y, double z) { return l0 + l1 * z + eta * std::tanh(y); };
    }
    const double scale = p.at("scale");
    return [scale](double y, double) { return scale * y; };
}

FieldFunction make_volatility_function(const CoefficientSpec& spec) {
    check("volatility", spec);
    const auto& p = spec.params;
    if (spec.name == "constant") {
        const double v = p.at("value");
        if (!(v > 0.0)) throw std::invalid_argument("volatility 'constant': value must be > 0");
        return [v](double, double) { return v; };
    }
    const double base = p.at("base"), k = p.at("k");
    if (!(base > 0.0)) throw std::invalid_argument("volatility 'exp_tanh': base must be > 0");
    return [base, k](double y, double) { return base * std::exp(k * std::tanh(y)); };
}

SlowFunction make_slow_drift(const CoefficientSpec& spec) {
    check("slow_drift", spec);
    if (spec.name == "zero") return [](double) { return 0.0; };
    const double kappa = spec.params.at("kappa"), mean = spec.params.at("mean");
    return [kappa, mean](double z) { return kappa * (mean - z); };
}

SlowFunction make_slow_diffusion(const CoefficientSpec& spec) {
    check("slow_diffusion", spec);
    const double v = spec.params.at("value");
    return [v](double) { return v; };
}

}  // namespace msp
