#pragma once

// Command implementations behind rollover_cli. Each returns a process exit code:
// 0 ok, 1 validation or stage failure, 2 input error.

#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "rollover/rollover.hpp"
#include "rollover/riccati_ode.hpp"

namespace rollover::cli {

enum ExitCode : int { ok = 0, failed = 1, input_error = 2 };

inline std::string error_name(const std::exception& e) {
#define ROLLOVER_NAME(T) \
    if (dynamic_cast<const T*>(&e)) return #T;
    ROLLOVER_NAME(ParseError)
    ROLLOVER_NAME(UnitError)
    ROLLOVER_NAME(MissingQuote)
    ROLLOVER_NAME(ConfigError)
    ROLLOVER_NAME(SpecError)
    ROLLOVER_NAME(UnknownInstrument)
    ROLLOVER_NAME(ConventionError)
    ROLLOVER_NAME(ExplosionError)
    ROLLOVER_NAME(DimensionError)
    ROLLOVER_NAME(DomainError)
    ROLLOVER_NAME(StepFailure)
    ROLLOVER_NAME(NegativeGrowth)
    ROLLOVER_NAME(MeshError)
    ROLLOVER_NAME(DegenerateAnnuity)
    ROLLOVER_NAME(QuadratureError)
    ROLLOVER_NAME(BootstrapError)
    ROLLOVER_NAME(NegativeIntensity)
    ROLLOVER_NAME(EmptyPanel)
#undef ROLLOVER_NAME
    if (dynamic_cast<const nlohmann::json::exception*>(&e)) return "ParseError";
    return "Error";
}

/// Bad or missing inputs map to exit code 2, anything raised while computing to 1.
inline int exit_code_for(const std::exception& e) {
    const bool input = dynamic_cast<const ParseError*>(&e) || dynamic_cast<const UnitError*>(&e) ||
                       dynamic_cast<const MissingQuote*>(&e) || dynamic_cast<const ConfigError*>(&e) ||
                       dynamic_cast<const SpecError*>(&e) || dynamic_cast<const UnknownInstrument*>(&e) ||
                       dynamic_cast<const ConventionError*>(&e) || dynamic_cast<const DimensionError*>(&e) ||
                       dynamic_cast<const nlohmann::json::exception*>(&e);
    return input ? input_error : failed;
}

inline void report_error(std::ostream& err, const std::exception& e) {
    err << nlohmann::json{{"error", error_name(e)}, {"message", e.what()}}.dump() << '\n';
}

// ---------------------------------------------------------------------------------------------
// calibrate

struct CalibrateOptions {
    std::string quotes;
    std::optional<std::string> config;
    std::string out;
    std::optional<std::string> residuals;  // default: <out stem>.residuals.csv
    std::optional<std::uint64_t> seed;
    std::optional<std::string> stages;
};

inline std::string residuals_path(const CalibrateOptions& o) {
    if (o.residuals) return *o.residuals;
    auto p = std::filesystem::path(o.out);
    p.replace_extension(".residuals.csv");
    return p.string();
}

inline int cmd_calibrate(const CalibrateOptions& o, std::ostream& log, std::ostream& err) {
    try {
        RunConfig rc;
        if (o.config) {
            std::ifstream in(*o.config);
            if (!in) throw ConfigError("cannot open " + *o.config);
            rc = parse_run_config(in);
        }
        if (o.seed) rc.calibration.seed = *o.seed;
        if (o.stages) rc.stages = StageSelection::parse(*o.stages);
        const auto qs = load_quotes(o.quotes);
        const auto run = run_calibration(qs, rc);

        std::ofstream out(o.out);
        if (!out) throw ConfigError("cannot write " + o.out);
        out << run_to_json(run).dump(2) << '\n';
        const auto csv_path = residuals_path(o);
        std::ofstream csv(csv_path);
        if (!csv) throw ConfigError("cannot write " + csv_path);
        csv << residuals_csv(run);

        log << fmt::format("{}: wrote {} and {}\n", run.valuation_date, o.out, csv_path);
        if (run.ois) log << fmt::format("  stage1_ois objective {:.6g}\n", run.ois->report.objective);
        if (run.basis) log << fmt::format("  stage2_basis objective {:.6g}\n", run.basis->report.objective);
        if (run.d0) log << fmt::format("  stage3_d0 objective {:.6g}\n", run.d0->report.objective);
        if (run.panel) log << fmt::format("  cds: {} banks fitted\n", run.banks.size());
        if (run.liquidity) log << fmt::format("  liquidity objective {:.6g}\n", run.liquidity->report.objective);
        for (const auto& w : run.warnings) log << "  warning: " << w << '\n';
        return ok;
    } catch (const std::exception& e) {
        report_error(err, e);
        return exit_code_for(e);
    }
}

// ---------------------------------------------------------------------------------------------
// price

/// "2m", "18m", "5y" or a plain number of years.
inline double parse_tenor(const std::string& s) {
    if (s.empty()) throw SpecError("empty tenor");
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw SpecError("bad tenor '" + s + "'");
    }
    const std::string unit = s.substr(used);
    if (unit == "m" || unit == "M") v /= 12.0;
    else if (!(unit.empty() || unit == "y" || unit == "Y")) throw SpecError("bad tenor unit in '" + s + "'");
    if (!(v > 0.0)) throw SpecError("tenor must be positive: '" + s + "'");
    return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out(1);
    for (char c : s) {
        if (c == sep) out.emplace_back();
        else out.back() += c;
    }
    return out;
}

struct PricedInstrument {
    std::string instrument;
    double value{};
    std::string unit;
};

/// Model plus any bank credit found in a calibration report.
struct PricingContext {
    ModelSpec model;
    std::vector<BankCredit> banks;

    static PricingContext load(const std::string& path) {
        PricingContext ctx{load_model(path), {}};
        const auto j = read_json_file(path);
        if (j.contains("stages"))
            for (const auto& s : j["stages"])
                if (s.value("stage", "") == "cds")
                    for (const auto& b : s.at("banks")) ctx.banks.push_back(b.at("credit").get<BankCredit>());
        return ctx;
    }
};

/// Instrument grammar, fields separated by ':':
///   ois:T  irs:T[:float[:fixed]]  basis:T:short:long  libor:tenor  fra:start:end  caplet:start:end:strike  cds:T:bank
inline PricedInstrument price_instrument(const PricingContext& ctx, const std::string& spec) {
    const auto f = split(spec, ':');
    const auto& m = ctx.model;
    const auto need = [&](std::size_t lo, std::size_t hi) {
        if (f.size() < lo || f.size() > hi) throw SpecError("wrong number of fields in '" + spec + "'");
    };
    const std::string& kind = f[0];
    if (kind == "ois") {
        need(2, 2);
        return {spec, ois_par_rate_multi(m, ois_schedule(parse_tenor(f[1]))), "rate"};
    }
    if (kind == "irs") {
        need(2, 4);
        const double T = parse_tenor(f[1]);
        const double flt = f.size() > 2 ? parse_tenor(f[2]) : 0.25;
        const double fix = f.size() > 3 ? parse_tenor(f[3]) : std::min(0.5, T);
        return {spec, par_swap_rate(m, TenorStructure::regular(0.0, T, flt), TenorStructure::regular(0.0, T, fix)), "rate"};
    }
    if (kind == "basis") {
        need(4, 4);
        const double T = parse_tenor(f[1]);
        const double shorter = parse_tenor(f[2]);
        const double longer = parse_tenor(f[3]);
        if (!(shorter < longer)) throw SpecError("basis tenors must be short:long in '" + spec + "'");
        const double s = par_basis_spread(m, TenorStructure::regular(0.0, T, shorter), TenorStructure::regular(0.0, T, longer));
        return {spec, s * 1e4, "bp"};
    }
    if (kind == "libor") {
        need(2, 2);
        return {spec, spot_libor(m, 0.0, parse_tenor(f[1])), "rate"};
    }
    if (kind == "fra") {
        need(3, 3);
        const double a = parse_tenor(f[1]);
        const double b = parse_tenor(f[2]);
        return {spec, libor_leg_pv(m, 0.0, a, b) / ((b - a) * ois_discount(m, 0.0, b)), "rate"};
    }
    if (kind == "caplet") {
        need(4, 4);
        return {spec, caplet_price(m, parse_tenor(f[1]), parse_tenor(f[2]), std::stod(f[3])), "pv"};
    }
    if (kind == "cds") {
        need(3, 3);
        for (const auto& b : ctx.banks)
            if (b.name == f[2]) return {spec, cds_par_spread(m, b, standard_cds(parse_tenor(f[1]))) * 1e4, "bp"};
        throw SpecError("no calibrated credit for bank '" + f[2] + "'");
    }
    throw UnknownInstrument("unknown instrument '" + kind + "'");
}

inline int cmd_price(const std::string& model_path, const std::vector<std::string>& instruments, std::ostream& out,
                     std::ostream& err) {
    try {
        const auto ctx = PricingContext::load(model_path);
        if (instruments.empty()) throw SpecError("no instruments given");
        std::vector<PricedInstrument> rows;
        for (const auto& s : instruments) rows.push_back(price_instrument(ctx, s));
        out << "instrument,value,unit\n";
        for (const auto& r : rows) out << r.instrument << ',' << detail::exact(r.value) << ',' << r.unit << '\n';
        return ok;
    } catch (const std::exception& e) {
        report_error(err, e);
        return exit_code_for(e);
    }
}

// ---------------------------------------------------------------------------------------------
// validate

struct CheckResult {
    std::string id;
    bool pass{};
    std::string detail;
};

struct ValidateOptions {
    std::string model;
    std::size_t mc_paths = 20000;
    int steps_per_year = 24;
    std::uint64_t seed = 20130101;
    double tolerance = 1e-9;
};

/// Reads a model without the domain checks, so that validation can report them by name.
inline ModelSpec load_model_unchecked(const std::string& path) {
    const auto j = read_json_file(path);
    return (j.contains("model") ? j["model"] : j).get<ModelSpec>();
}

inline std::vector<CheckResult> riccati_checks(const ModelSpec& m, double tol) {
    std::vector<CheckResult> out;
    for (std::size_t i = 0; i < m.dim(); ++i) {
        const auto& f = m.factors[i];
        const FactorSet single{f};
        bool domain = true;
        try {
            f.validate();
        } catch (const DomainError& e) {
            domain = false;
            out.push_back({fmt::format("factor.domain[{}]", i), false, e.what()});
        }
        if (domain) out.push_back({fmt::format("factor.domain[{}]", i), true, ""});

        // loadings the pricing code actually integrates
        const double a = m.rc.loading[i];
        const double b = m.lambda.loading[i];
        const double c = m.phi.loading[i];
        const std::vector<std::pair<double, double>> cases{{-a, 0.0}, {c, 0.0}, {-(a + m.q * b), 0.0}, {-a, -a}};
        double worst = 0.0;
        std::string problem;
        for (const auto& [gamma, terminal] : cases) {
            for (double tau : {0.25, 1.0, 5.0, 10.0, 30.0}) {
                const std::vector<double> g{gamma};
                const std::vector<double> u{terminal};
                try {
                    const auto closed = riccati_transform(single, tau, u, 1.0, g);
                    const auto ode = riccati_transform_numeric(single, tau, u, 1.0, g);
                    const double e1 = std::abs(closed.phi - ode.phi) / std::max(std::abs(ode.phi), 1e-12);
                    const double e2 = std::abs(closed.psi[0] - ode.psi[0]) / std::max(std::abs(ode.psi[0]), 1e-12);
                    const double e = std::max(e1, e2);
                    if (!std::isfinite(e)) problem = fmt::format("non-finite transform at tau {}", tau);
                    worst = std::max(worst, e);
                } catch (const std::exception& ex) {
                    if (problem.empty()) problem = fmt::format("tau {}, gamma {:.3g}: {}", tau, gamma, ex.what());
                }
            }
        }
        if (!domain && problem.empty()) problem = "factor outside the CIR domain";
        const bool pass = problem.empty() && worst <= tol;
        out.push_back({fmt::format("riccati.ode[{}]", i), pass,
                       problem.empty() ? fmt::format("max relative error {:.3g}", worst) : problem});
    }
    return out;
}

inline std::vector<CheckResult> mc_checks(const ModelSpec& m, std::span<const BankCredit> banks, const McConfig& cfg) {
    std::vector<McExpression> exprs{{McKind::ois_discount, 5.0},
                                    {McKind::funding_growth, 5.0},
                                    {McKind::risky_discount, 2.0},
                                    {McKind::rollover_forward, 0.25, 0.5},
                                    {McKind::libor_leg, 0.25, 0.5}};
    std::vector<std::string> ids{"mc.ois_discount", "mc.funding_growth", "mc.risky_discount", "mc.rollover_forward_term",
                                 "mc.libor_leg_pv"};
    std::vector<std::function<double()>> analytic{
        [&] { return ois_discount(m, 0.0, 5.0); }, [&] { return funding_growth(m, 0.0, 5.0); },
        [&] { return risky_discount(m, 0.0, 2.0); }, [&] { return rollover_forward_term(m, 0.0, 0.25, 0.5); },
        [&] { return libor_leg_pv(m, 0.0, 0.25, 0.5); }};
    for (const auto& b : banks) {
        if (b.loading.size() != m.dim()) continue;
        McExpression e{McKind::survival, 5.0};
        e.bank = b;
        exprs.push_back(e);
        ids.push_back("mc.survival_discount[" + b.name + "]");
        analytic.push_back([&m, &b] { return survival_discount(m, b, 0.0, 5.0); });
    }
    const auto est = mc_expectations(m, exprs, cfg);
    std::vector<CheckResult> out;
    for (std::size_t k = 0; k < est.size(); ++k) {
        try {
            const double value = analytic[k]();
            const double z = std::abs(est[k].estimate - value) / std::max(est[k].std_error, 1e-300);
            const bool pass = std::abs(est[k].estimate - value) <= 3.0 * est[k].std_error + 1e-15;
            out.push_back({ids[k], pass,
                           fmt::format("analytic {:.12g}, mc {:.12g} (se {:.3g}, {:.2f} se)", value, est[k].estimate,
                                       est[k].std_error, z)});
        } catch (const std::exception& e) {
            out.push_back({ids[k], false, e.what()});
        }
    }
    return out;
}

inline int cmd_validate(const ValidateOptions& o, std::ostream& out, std::ostream& err) {
    try {
        McConfig cfg;
        cfg.n_paths = o.mc_paths;
        cfg.steps_per_year = o.steps_per_year;
        cfg.seed = o.seed;
        cfg.validate();
        const auto m = load_model_unchecked(o.model);
        std::vector<BankCredit> banks;
        {
            const auto j = read_json_file(o.model);
            if (j.contains("stages"))
                for (const auto& s : j["stages"])
                    if (s.value("stage", "") == "cds")
                        for (const auto& b : s.at("banks")) banks.push_back(b.at("credit").get<BankCredit>());
        }
        auto checks = riccati_checks(m, o.tolerance);
        bool domain_ok = true;
        for (const auto& c : checks) domain_ok = domain_ok && c.pass;
        if (domain_ok) {
            m.validate();
            const auto mc = mc_checks(m, banks, cfg);
            checks.insert(checks.end(), mc.begin(), mc.end());
        } else {
            checks.push_back({"mc.*", false, "skipped: closed-form checks failed"});
        }
        bool all = true;
        for (const auto& c : checks) {
            out << fmt::format("{:<4} {:<40} {}\n", c.pass ? "PASS" : "FAIL", c.id, c.detail);
            all = all && c.pass;
        }
        out << (all ? "all checks passed\n" : "validation failed\n");
        return all ? ok : failed;
    } catch (const std::exception& e) {
        report_error(err, e);
        return exit_code_for(e);
    }
}

}  // namespace rollover::cli
