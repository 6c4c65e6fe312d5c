#pragma once

// JSON mapping of model objects. Doubles are written with round-trip precision by nlohmann.

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "rollover/credit.hpp"
#include "rollover/model.hpp"

namespace rollover {

inline constexpr int model_schema_version = 1;

inline void to_json(nlohmann::json& j, const CirFactor& f) {
    j = {{"kappa", f.kappa}, {"theta", f.theta}, {"sigma", f.sigma}, {"y0", f.y0}};
}
inline void from_json(const nlohmann::json& j, CirFactor& f) {
    f = {j.at("kappa").get<double>(), j.at("theta").get<double>(), j.at("sigma").get<double>(),
         j.at("y0").get<double>()};
}

inline void to_json(nlohmann::json& j, const PiecewiseShift& s) {
    j = {{"knots", std::vector<double>(s.knots().begin(), s.knots().end())},
         {"values", std::vector<double>(s.values().begin(), s.values().end())}};
}
inline void from_json(const nlohmann::json& j, PiecewiseShift& s) {
    if (j.is_number()) {
        s = PiecewiseShift(j.get<double>());
        return;
    }
    s = PiecewiseShift(j.at("knots").get<std::vector<double>>(), j.at("values").get<std::vector<double>>());
}

inline void to_json(nlohmann::json& j, const SpreadProjection& p) { j = {{"shift", p.shift}, {"loading", p.loading}}; }
inline void from_json(const nlohmann::json& j, SpreadProjection& p) {
    p.shift = j.at("shift").get<PiecewiseShift>();
    p.loading = j.at("loading").get<std::vector<double>>();
}

inline void to_json(nlohmann::json& j, const ModelSpec& m) {
    j = {{"schema", model_schema_version},
         {"valuation_date", m.valuation_date},
         {"factors", m.factors},
         {"rc", m.rc},
         {"lambda", m.lambda},
         {"phi", m.phi},
         {"q", m.q},
         {"Lambda", m.Lambda}};
}
inline void from_json(const nlohmann::json& j, ModelSpec& m) {
    if (j.value("schema", model_schema_version) != model_schema_version)
        throw ConfigError("unsupported model schema version");
    m.valuation_date = j.value("valuation_date", std::string{});
    m.factors = j.at("factors").get<FactorSet>();
    m.rc = j.at("rc").get<SpreadProjection>();
    m.lambda = j.contains("lambda") ? j["lambda"].get<SpreadProjection>() : zero_projection(m.dim());
    m.phi = j.contains("phi") ? j["phi"].get<SpreadProjection>() : zero_projection(m.dim());
    m.q = j.value("q", 0.6);
    m.Lambda = j.value("Lambda", 5e-4);
}

inline void to_json(nlohmann::json& j, const BankCredit& b) {
    j = {{"name", b.name}, {"shift", b.shift}, {"loading", b.loading}};
}
inline void from_json(const nlohmann::json& j, BankCredit& b) {
    b.name = j.value("name", std::string{});
    b.shift = j.at("shift").get<PiecewiseShift>();
    b.loading = j.at("loading").get<std::vector<double>>();
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what(), 0, e.byte);
    }
}

/// Reads a model file; accepts either a bare model or a calibration report with a "model" key.
inline ModelSpec load_model(const std::string& path) {
    const auto j = read_json_file(path);
    auto m = (j.contains("model") ? j["model"] : j).get<ModelSpec>();
    m.validate();
    return m;
}

}  // namespace rollover
