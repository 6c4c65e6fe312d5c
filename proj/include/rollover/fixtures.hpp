#pragma once

// Published parameter sets shipped under data/: CIR factors, bootstrapped a0 columns,
// three-factor basis loadings and per-bank CDS coefficients.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rollover/credit.hpp"
#include "rollover/model.hpp"
#include "rollover/serialize.hpp"

namespace rollover {

inline constexpr double cds_maturities[] = {0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 7.0, 10.0};

class FixtureLibrary {
public:
    explicit FixtureLibrary(const std::string& data_dir)
        : params_(read_json_file(data_dir + "/model_parameters.json")),
          cds_(read_json_file(data_dir + "/cds_coefficients.json")) {}

    [[nodiscard]] std::vector<std::string> dates() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : params_.at("dates").items()) out.push_back(k);
        return out;
    }

    /// OIS-only model: "ois_one_factor" or "ois_three_factor".
    [[nodiscard]] ModelSpec ois_model(const std::string& date, const std::string& key) const {
        const auto& block = params_.at("dates").at(date).at(key);
        FactorSet fs;
        std::vector<double> a;
        for (const auto& f : block.at("factors")) {
            fs.push_back(f.get<CirFactor>());
            a.push_back(f.at("a").get<double>());
        }
        auto m = collateral_only_model(std::move(fs), a0_shift(block.at("a0")), std::move(a));
        m.q = params_.value("q", 0.6);
        m.valuation_date = date;
        return m;
    }

    /// Three-factor model with a, b, c loadings; a0 from the three-factor OIS column.
    [[nodiscard]] ModelSpec basis_model(const std::string& date) const {
        const auto& day = params_.at("dates").at(date);
        FactorSet fs;
        std::vector<double> a, b, c;
        for (const auto& f : day.at("basis_three_factor").at("factors")) {
            fs.push_back(f.get<CirFactor>());
            a.push_back(f.at("a").get<double>());
            b.push_back(f.at("b").get<double>());
            c.push_back(f.at("c").get<double>());
        }
        auto m = collateral_only_model(std::move(fs), a0_shift(day.at("ois_three_factor").at("a0")), std::move(a));
        m.lambda = {PiecewiseShift(0.0), std::move(b)};
        m.phi = {PiecewiseShift(0.0), std::move(c)};
        m.q = params_.value("q", 0.6);
        m.valuation_date = date;
        return m;
    }

    /// Per-bank credit from the coefficient tables, in panel order. "one_factor" or "three_factor".
    [[nodiscard]] std::vector<BankCredit> banks(const std::string& date, const std::string& key) const {
        const auto& block = cds_.at(date).at(key);
        const auto names = block.at("banks").get<std::vector<std::string>>();
        std::vector<BankCredit> out;
        for (std::size_t j = 0; j < names.size(); ++j) out.push_back(bank_from(block.at("coefficients"), names[j], j));
        return out;
    }

    /// The table's "Average" column as a bank-like coefficient set.
    [[nodiscard]] BankCredit average(const std::string& date, const std::string& key) const {
        const auto& avg = cds_.at(date).at(key).at("average");
        return bank_from(avg, "Average", std::nullopt);
    }

private:
    [[nodiscard]] PiecewiseShift a0_shift(const nlohmann::json& values) const {
        const auto knots = params_.at("a0_knots").get<std::vector<double>>();
        const auto v = values.get<std::vector<double>>();
        return PiecewiseShift::from_maturities(knots, v);
    }

    static BankCredit bank_from(const nlohmann::json& coeffs, const std::string& name, std::optional<std::size_t> j) {
        const auto pick = [&](const std::string& key) {
            const auto& v = coeffs.at(key);
            return j ? v.at(*j).get<double>() : v.get<double>();
        };
        BankCredit b;
        b.name = name;
        if (coeffs.contains("bhat")) {
            b.loading = {pick("bhat")};
        } else {
            for (int i = 1; coeffs.contains("bhat_" + std::to_string(i)); ++i) b.loading.push_back(pick("bhat_" + std::to_string(i)));
        }
        std::vector<double> shift;
        for (int k = 1; coeffs.contains("b0hat(" + std::to_string(k) + ")"); ++k)
            shift.push_back(pick("b0hat(" + std::to_string(k) + ")"));
        b.shift = PiecewiseShift::from_maturities(std::span<const double>(cds_maturities, shift.size()), shift);
        return b;
    }

    nlohmann::json params_;
    nlohmann::json cds_;
};

}  // namespace rollover
