#pragma once

// End-to-end calibration of one quote set: stage selection, key=value configuration, and the
// deterministic JSON / CSV reports written by the command-line tool.

#include <array>
#include <charconv>
#include <cstdio>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rollover/calibration.hpp"
#include "rollover/serialize.hpp"

namespace rollover {

enum class Stage { ois, basis, d0, cds, liquidity };

inline constexpr std::array<Stage, 5> all_stages{Stage::ois, Stage::basis, Stage::d0, Stage::cds, Stage::liquidity};

inline std::string to_string(Stage s) {
    switch (s) {
    case Stage::ois: return "ois";
    case Stage::basis: return "basis";
    case Stage::d0: return "d0";
    case Stage::cds: return "cds";
    case Stage::liquidity: return "liquidity";
    }
    return "?";
}

struct StageSelection {
    std::array<bool, all_stages.size()> on{true, true, true, true, true};

    [[nodiscard]] bool has(Stage s) const { return on[static_cast<std::size_t>(s)]; }

    /// Parses "all" or a comma list such as "ois,basis,d0".
    static StageSelection parse(const std::string& text) {
        StageSelection sel;
        if (text == "all") return sel;
        sel.on.fill(false);
        std::istringstream in(text);
        std::string item;
        while (std::getline(in, item, ',')) {
            if (item.empty()) continue;
            bool known = false;
            for (auto s : all_stages)
                if (item == to_string(s)) {
                    sel.on[static_cast<std::size_t>(s)] = true;
                    known = true;
                }
            if (!known) throw ConfigError("unknown stage '" + item + "'");
        }
        sel.check();
        return sel;
    }

    void check() const {
        const auto need = [&](Stage s, Stage prerequisite) {
            if (has(s) && !has(prerequisite))
                throw ConfigError("stage " + to_string(s) + " needs stage " + to_string(prerequisite));
        };
        need(Stage::basis, Stage::ois);
        need(Stage::d0, Stage::basis);
        need(Stage::cds, Stage::ois);
        need(Stage::liquidity, Stage::cds);
    }

    [[nodiscard]] std::string str() const {
        std::string out;
        for (auto s : all_stages)
            if (has(s)) out += (out.empty() ? "" : ",") + to_string(s);
        return out;
    }
};

struct RunConfig {
    CalibrationConfig calibration;
    StageSelection stages;
};

namespace detail {

inline double parse_config_number(const std::string& key, const std::string& v) {
    double x{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || ptr != v.data() + v.size()) throw ConfigError("config key " + key + ": not a number '" + v + "'");
    return x;
}

inline std::size_t parse_config_count(const std::string& key, const std::string& v) {
    const double x = parse_config_number(key, v);
    if (x < 0.0 || x != std::floor(x)) throw ConfigError("config key " + key + ": expected a nonnegative integer");
    return static_cast<std::size_t>(x);
}

inline bool parse_config_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config key " + key + ": expected true or false");
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace detail

/// Applies one configuration entry; unknown keys are rejected.
inline void set_config(RunConfig& rc, const std::string& key, const std::string& value) {
    auto& c = rc.calibration;
    const auto num = [&] { return detail::parse_config_number(key, value); };
    const auto count = [&] { return detail::parse_config_count(key, value); };
    if (key == "factors") c.factors = count();
    else if (key == "basis_factors") c.basis_factors = count();
    else if (key == "optimizer") {
        if (value == "de") c.optimizer = OptimizerKind::de;
        else if (value == "asa") c.optimizer = OptimizerKind::asa;
        else throw ConfigError("optimizer must be de or asa");
    }
    else if (key == "de_F") c.de_F = num();
    else if (key == "de_CR") c.de_CR = num();
    else if (key == "de_pop") c.de_pop = count();
    else if (key == "stage1_iter") c.stage1_iter = count();
    else if (key == "stage2_iter") c.stage2_iter = count();
    else if (key == "stage3_iter") c.stage3_iter = count();
    else if (key == "cds_iter") c.cds_iter = count();
    else if (key == "asa_evals") c.asa_evals = count();
    else if (key == "mu") c.mu = num();
    else if (key == "mesh_step") c.mesh_step = num();
    else if (key == "recovery") c.recovery = num();
    else if (key == "q") c.q = num();
    else if (key == "Lambda") c.Lambda = num();
    else if (key == "bootstrap_strict") c.bootstrap_strict = detail::parse_config_bool(key, value);
    else if (key == "feller") c.bounds.feller = detail::parse_config_bool(key, value);
    else if (key == "seed") c.seed = count();
    else if (key == "workers") c.workers = static_cast<unsigned>(std::max<std::size_t>(count(), 1));
    else if (key == "stages") rc.stages = StageSelection::parse(value);
    else {
        // bounds.<name>.lo / bounds.<name>.hi
        const std::pair<const char*, Interval*> intervals[] = {
            {"y0", &c.bounds.y0},         {"theta", &c.bounds.theta}, {"kappa", &c.bounds.kappa},
            {"sigma", &c.bounds.sigma},   {"loading", &c.bounds.loading}, {"d0", &c.bounds.d0},
            {"a0", &c.bounds.a0},         {"bank_shift", &c.bounds.bank_shift}};
        for (const auto& [name, iv] : intervals) {
            const std::string prefix = std::string("bounds.") + name;
            if (key == prefix + ".lo") return void(iv->lo = num());
            if (key == prefix + ".hi") return void(iv->hi = num());
        }
        throw ConfigError("unknown config key '" + key + "'");
    }
}

/// Reads `key = value` lines; '#' starts a comment.
inline RunConfig parse_run_config(std::istream& in) {
    RunConfig rc;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(row) + ": expected key = value");
        set_config(rc, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    return rc;
}

/// Echo of every setting that can change results (the worker count cannot).
inline nlohmann::json config_to_json(const RunConfig& rc) {
    const auto& c = rc.calibration;
    nlohmann::json bounds;
    const std::pair<const char*, const Interval*> intervals[] = {
        {"y0", &c.bounds.y0},       {"theta", &c.bounds.theta},     {"kappa", &c.bounds.kappa},
        {"sigma", &c.bounds.sigma}, {"loading", &c.bounds.loading}, {"d0", &c.bounds.d0},
        {"a0", &c.bounds.a0},       {"bank_shift", &c.bounds.bank_shift}};
    for (const auto& [name, iv] : intervals) bounds[name] = {iv->lo, iv->hi};
    return {{"stages", rc.stages.str()},
            {"factors", c.factors},
            {"basis_factors", c.total_factors()},
            {"optimizer", c.optimizer == OptimizerKind::de ? "de" : "asa"},
            {"de_F", c.de_F},
            {"de_CR", c.de_CR},
            {"de_pop", c.de_pop},
            {"stage1_iter", c.stage1_iter},
            {"stage2_iter", c.stage2_iter},
            {"stage3_iter", c.stage3_iter},
            {"cds_iter", c.cds_iter},
            {"asa_evals", c.asa_evals},
            {"mu", c.mu},
            {"mesh_step", c.mesh_step},
            {"recovery", c.recovery},
            {"q", c.q},
            {"Lambda", c.Lambda},
            {"bootstrap_strict", c.bootstrap_strict},
            {"feller", c.bounds.feller},
            {"seed", c.seed},
            {"bounds", bounds}};
}

struct CalibrationRun {
    std::string valuation_date;
    RunConfig config;
    std::optional<Stage1Result> ois;
    std::optional<SwapStageResult> basis;
    std::optional<SwapStageResult> d0;
    std::vector<BankFit> banks;
    std::optional<SpreadProjection> panel;
    std::optional<SwapStageResult> liquidity;
    std::vector<std::string> warnings;

    /// Model of the last stage that ran.
    [[nodiscard]] const ModelSpec& model() const {
        if (liquidity) return liquidity->model;
        if (d0) return d0->model;
        if (basis) return basis->model;
        return ois->model;
    }
};

namespace detail {

/// Banks quoting fewer maturities than the fullest bank are dropped.
inline std::vector<std::vector<CdsCondition>> complete_banks(const InstrumentSet& inst, std::vector<std::string>& warnings) {
    std::vector<std::vector<CdsCondition>> per_bank;
    for (const auto& c : inst.cds) {
        if (per_bank.empty() || per_bank.back().front().entity != c.entity) per_bank.emplace_back();
        per_bank.back().push_back(c);
    }
    std::size_t full = 0;
    for (const auto& b : per_bank) full = std::max(full, b.size());
    std::vector<std::vector<CdsCondition>> out;
    for (auto& b : per_bank) {
        if (b.size() < full)
            warnings.push_back(b.front().entity + ": incomplete CDS quotes; bank dropped");
        else
            out.push_back(std::move(b));
    }
    return out;
}

}  // namespace detail

inline CalibrationRun run_calibration(const QuoteSet& qs, const RunConfig& rc) {
    rc.stages.check();
    const auto& cfg = rc.calibration;
    CalibrationRun run;
    run.valuation_date = qs.valuation_date;
    run.config = rc;
    for (const auto& a : qs.anomalies)
        run.warnings.push_back("quote anomaly: " + to_string(a.kind) + " " + detail::exact(a.maturity) + "y " +
                               (a.entity.empty() ? "" : a.entity + " ") + a.reason);
    if (qs.empty()) throw MissingQuote("quote set is empty");

    run.ois = stage1_ois(qs, cfg);
    if (rc.stages.has(Stage::basis)) run.basis = stage2_basis(qs, *run.ois, cfg);
    if (rc.stages.has(Stage::d0)) run.d0 = stage3_d0_term_structure(qs, *run.ois, *run.basis, cfg);
    if (rc.stages.has(Stage::cds)) {
        const auto inst = build_instruments(qs);
        const auto banks = detail::complete_banks(inst, run.warnings);
        if (banks.empty()) throw MissingQuote("no complete CDS quote rows");
        for (const auto& quotes : banks) {
            const auto& name = quotes.front().entity;
            try {
                run.banks.push_back(calibrate_bank_cds(run.ois->model, name, quotes, cfg));
            } catch (const NegativeIntensity& e) {
                run.warnings.push_back(std::string(e.what()) + "; bank dropped");
            } catch (const BootstrapError& e) {
                run.warnings.push_back(std::string(e.what()) + "; bank dropped");
            }
        }
        std::vector<BankCredit> credits;
        for (const auto& b : run.banks) {
            credits.push_back(b.credit);
            for (const auto& w : b.warnings) run.warnings.push_back(w);
        }
        run.panel = panel_average(credits, cfg.Lambda);
    }
    if (rc.stages.has(Stage::liquidity)) {
        auto with_credit = run.ois->model;
        with_credit.lambda = *run.panel;
        run.liquidity = stage_liquidity(with_credit, qs, cfg);
    }
    return run;
}

namespace detail {

inline nlohmann::json prices_to_json(const std::vector<BandedPrice>& prices) {
    auto rows = nlohmann::json::array();
    for (const auto& p : prices)
        rows.push_back({{"instrument", p.label},
                        {"maturity", p.maturity},
                        {"model", p.price},
                        {"bid", p.bid},
                        {"ask", p.ask},
                        {"residual", band_residual(p.price, p.bid, p.ask)}});
    return rows;
}

inline nlohmann::json report_to_json(const StageReport& r) {
    return {{"stage", r.stage},
            {"objective", r.objective},
            {"optimizer", {{"best", r.optimizer.f}, {"iterations", r.optimizer.iterations},
                           {"evaluations", r.optimizer.evaluations}, {"trace", r.optimizer.trace}}},
            {"warnings", r.warnings},
            {"residuals", prices_to_json(r.prices)}};
}

}  // namespace detail

/// Full report. Contains no timings or host data, so equal inputs give equal bytes.
inline nlohmann::json run_to_json(const CalibrationRun& run) {
    nlohmann::json j;
    j["schema"] = model_schema_version;
    j["valuation_date"] = run.valuation_date;
    j["seed"] = run.config.calibration.seed;
    j["config"] = config_to_json(run.config);
    j["model"] = run.model();
    j["stages"] = nlohmann::json::array();
    if (run.ois) {
        auto s = detail::report_to_json(run.ois->report);
        s["a0_bid"] = run.ois->a0_bid;
        s["a0_ask"] = run.ois->a0_ask;
        s["bootstrap_residuals"] = {{"bid", run.ois->bid_residuals}, {"ask", run.ois->ask_residuals}, {"mid", run.ois->mid_residuals}};
        s["model"] = run.ois->model;
        j["stages"].push_back(std::move(s));
    }
    for (const auto* stage : {&run.basis, &run.d0}) {
        if (!*stage) continue;
        auto s = detail::report_to_json((*stage)->report);
        s["mu"] = (*stage)->mu;
        s["penalty"] = (*stage)->penalty;
        s["model"] = (*stage)->model;
        j["stages"].push_back(std::move(s));
    }
    if (run.panel) {
        nlohmann::json s{{"stage", "cds"}, {"banks", nlohmann::json::array()}, {"panel", *run.panel}};
        for (const auto& b : run.banks)
            s["banks"].push_back({{"credit", b.credit},
                                  {"maturities", b.maturities},
                                  {"market", b.market},
                                  {"model", b.model},
                                  {"max_error_bp", b.max_error_bp()},
                                  {"warnings", b.warnings}});
        j["stages"].push_back(std::move(s));
    }
    if (run.liquidity) {
        auto s = detail::report_to_json(run.liquidity->report);
        s["mu"] = run.liquidity->mu;
        s["penalty"] = run.liquidity->penalty;
        std::vector<double> times;
        for (int k = 0; k <= 40; ++k) times.push_back(0.25 * k);
        auto dec = nlohmann::json::array();
        for (const auto& p : spread_decomposition(run.liquidity->model, times))
            dec.push_back({{"t", p.t}, {"credit", p.credit}, {"liquidity", p.liquidity}});
        s["decomposition"] = std::move(dec);
        j["stages"].push_back(std::move(s));
    }
    j["warnings"] = run.warnings;
    return j;
}

/// One row per priced instrument: stage,instrument,entity,maturity,model,bid,ask,residual.
inline std::string residuals_csv(const CalibrationRun& run) {
    std::ostringstream out;
    out << "stage,instrument,entity,maturity,model,bid,ask,residual\n";
    const auto rows = [&](const StageReport& r) {
        for (const auto& p : r.prices)
            out << r.stage << ',' << p.label << ",," << detail::exact(p.maturity) << ',' << detail::exact(p.price) << ','
                << detail::exact(p.bid) << ',' << detail::exact(p.ask) << ','
                << detail::exact(band_residual(p.price, p.bid, p.ask)) << '\n';
    };
    if (run.ois) rows(run.ois->report);
    if (run.basis) rows(run.basis->report);
    if (run.d0) rows(run.d0->report);
    for (const auto& b : run.banks)
        for (std::size_t k = 0; k < b.market.size(); ++k)
            out << "cds,CDS," << b.credit.name << ',' << detail::exact(b.maturities[k]) << ',' << detail::exact(b.model[k])
                << ',' << detail::exact(b.market[k]) << ',' << detail::exact(b.market[k]) << ','
                << detail::exact(b.market[k] == 0.0 ? b.model[k] : (b.model[k] - b.market[k]) / b.market[k]) << '\n';
    if (run.liquidity) rows(run.liquidity->report);
    return out.str();
}

}  // namespace rollover
