#include "msp/experiments.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace msp {

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text(const std::string& text, const std::string& file) {
    const std::filesystem::path path(file);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + file + "' for writing");
    out << text;
    if (!out) throw std::runtime_error("write to '" + file + "' failed");
}

std::string residual_csv(const ResidualStudy& study) {
    std::ostringstream os;
    os << "epsilon,delta,v0,q,v_hat,se,residual,resolved\n";
    for (const auto& r : study.rows) {
        os << format_number(r.epsilon) << ',' << format_number(r.delta) << ','
           << format_number(r.v0) << ',' << format_number(r.q) << ',' << format_number(r.v_hat)
           << ',' << format_number(r.se) << ',' << format_number(r.residual) << ','
           << (r.resolved ? "true" : "false") << '\n';
    }
    os << "summary,slope=" << format_number(study.fit.slope)
       << ",slope_se=" << format_number(study.fit.slope_se)
       << ",intercept=" << format_number(study.fit.intercept)
       << ",r2=" << format_number(study.fit.r2) << ",,," << to_string(study.verdict) << '\n';
    return os.str();
}

std::string optimality_csv(const OptimalityStudy& study) {
    std::ostringstream os;
    os << "epsilon,delta,challenger,v_hat,se,ell_hat,ell_se,verdict\n";
    for (const auto& r : study.rows) {
        os << format_number(r.epsilon) << ',' << format_number(r.delta) << ',' << r.challenger
           << ',' << format_number(r.v_hat) << ',' << format_number(r.se) << ','
           << format_number(r.ell_hat) << ',' << format_number(r.ell_se) << ','
           << to_string(r.verdict) << '\n';
    }
    for (const auto& c : study.challengers) {
        os << "summary,," << c.challenger << ",trend=" << (c.trend_ok ? "ok" : "rising")
           << ",nhat=" << (c.nhat.pass ? "PASS" : "FAIL")
           << ",ntilde=" << (c.ntilde_available ? (c.ntilde.pass ? "PASS" : "FAIL") : "n/a")
           << ",," << to_string(c.verdict) << '\n';
    }
    os << "summary,,all,,,,," << to_string(study.verdict) << '\n';
    return os.str();
}

std::string invariants_csv(const std::vector<InvariantRow>& rows) {
    std::ostringstream os;
    os << "name,measured,tolerance,verdict,detail\n";
    for (const auto& r : rows) {
        std::string detail = r.detail;
        for (auto& ch : detail) {
            if (ch == '"') ch = '\'';
        }
        os << r.name << ',' << format_number(r.measured) << ',' << format_number(r.tolerance)
           << ',' << to_string(r.verdict) << ",\"" << detail << "\"\n";
    }
    return os.str();
}

void write_residual_csv(const ResidualStudy& study, const std::string& file) {
    write_text(residual_csv(study), file);
}

void write_optimality_csv(const OptimalityStudy& study, const std::string& file) {
    write_text(optimality_csv(study), file);
}

void write_invariants_csv(const std::vector<InvariantRow>& rows, const std::string& file) {
    write_text(invariants_csv(rows), file);
}

namespace {

using json = nlohmann::ordered_json;

// Non-finite numbers have no JSON form; they are reported as strings.
json number(double v) {
    if (std::isfinite(v)) return v;
    return format_number(v);
}

json monotonicity(const MonotonicityVerdict& m) {
    return json{{"pass", m.pass},
                {"paths", m.paths},
                {"violating_paths", m.violating_paths},
                {"positive_increments", m.positive_increments},
                {"flat_increments", m.flat_increments},
                {"max_total", number(m.max_total)}};
}

}  // namespace

std::string summary_json(const RunConfig& cfg, const ResidualStudy* residual,
                         const OptimalityStudy* optimality,
                         const std::vector<InvariantRow>* invariants) {
    json j;
    j["scenario"] = cfg.scenario;
    j["seed"] = cfg.seed;
    bool fail = false, unresolved = false;
    auto note = [&](Verdict v) {
        fail |= v == Verdict::Fail;
        unresolved |= v == Verdict::Unresolved;
    };
    if (residual) {
        json rows = json::array();
        for (const auto& r : residual->rows) {
            rows.push_back({{"epsilon", number(r.epsilon)},
                            {"delta", number(r.delta)},
                            {"v0", number(r.v0)},
                            {"q", number(r.q)},
                            {"v_hat", number(r.v_hat)},
                            {"se", number(r.se)},
                            {"residual", number(r.residual)},
                            {"resolved", r.resolved},
                            {"floor_hits", r.floor_hits}});
        }
        j["residual_study"] = {{"rows", rows},
                               {"slope", number(residual->fit.slope)},
                               {"slope_se", number(residual->fit.slope_se)},
                               {"intercept", number(residual->fit.intercept)},
                               {"r2", number(residual->fit.r2)},
                               {"slope_band", {cfg.tolerances.slope_min, cfg.tolerances.slope_max}},
                               {"verdict", to_string(residual->verdict)}};
        note(residual->verdict);
    }
    if (optimality) {
        json rows = json::array();
        for (const auto& r : optimality->rows) {
            rows.push_back({{"epsilon", number(r.epsilon)},
                            {"delta", number(r.delta)},
                            {"challenger", r.challenger},
                            {"v_hat", number(r.v_hat)},
                            {"se", number(r.se)},
                            {"v_pi0", number(r.v_pi0)},
                            {"se_pi0", number(r.se_pi0)},
                            {"ell_hat", number(r.ell_hat)},
                            {"ell_se", number(r.ell_se)},
                            {"verdict", to_string(r.verdict)}});
        }
        json challengers = json::array();
        for (const auto& c : optimality->challengers) {
            json entry{{"challenger", c.challenger},
                       {"trend_ok", c.trend_ok},
                       {"nhat", monotonicity(c.nhat)}};
            entry["ntilde"] = c.ntilde_available ? monotonicity(c.ntilde) : json(nullptr);
            entry["verdict"] = to_string(c.verdict);
            challengers.push_back(entry);
        }
        j["optimality_study"] = {{"rows", rows},
                                 {"challengers", challengers},
                                 {"verdict", to_string(optimality->verdict)}};
        note(optimality->verdict);
    }
    if (invariants) {
        json rows = json::array();
        Verdict overall = Verdict::Pass;
        for (const auto& r : *invariants) {
            rows.push_back({{"name", r.name},
                            {"measured", number(r.measured)},
                            {"tolerance", number(r.tolerance)},
                            {"verdict", to_string(r.verdict)},
                            {"detail", r.detail}});
            if (r.verdict != Verdict::Pass) overall = Verdict::Fail;
        }
        j["invariants"] = {{"rows", rows}, {"verdict", to_string(overall)}};
        note(overall);
    }
    j["verdict"] = to_string(fail ? Verdict::Fail : unresolved ? Verdict::Unresolved : Verdict::Pass);
    return j.dump(2) + "\n";
}

}  // namespace msp
