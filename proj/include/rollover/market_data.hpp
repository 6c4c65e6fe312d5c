#pragma once

// Dated quote sets: CSV/JSON ingestion with unit normalization, anomaly flags, and the
// construction of swap, basis and CDS calibration instruments.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rollover/errors.hpp"
#include "rollover/swaps.hpp"
#include "rollover/tenor.hpp"

namespace rollover {

enum class QuoteKind { ois, irs, basis_1m3m, basis_3m6m, cds };

inline std::string to_string(QuoteKind k) {
    switch (k) {
    case QuoteKind::ois: return "OIS";
    case QuoteKind::irs: return "IRS";
    case QuoteKind::basis_1m3m: return "BASIS_1m3m";
    case QuoteKind::basis_3m6m: return "BASIS_3m6m";
    case QuoteKind::cds: return "CDS";
    }
    return "?";
}

inline std::optional<QuoteKind> parse_kind(const std::string& s) {
    for (auto k : {QuoteKind::ois, QuoteKind::irs, QuoteKind::basis_1m3m, QuoteKind::basis_3m6m, QuoteKind::cds})
        if (s == to_string(k)) return k;
    return std::nullopt;
}

/// Divisor turning a quoted number into a decimal rate.
inline std::optional<double> unit_divisor(const std::string& unit) {
    if (unit == "%") return 100.0;
    if (unit == "bp") return 10000.0;
    if (unit == "dec") return 1.0;
    return std::nullopt;
}

struct Quote {
    QuoteKind kind{};
    double maturity{};
    double bid{};  // decimal
    double ask{};  // decimal
    std::string entity;

    [[nodiscard]] double mid() const { return 0.5 * (bid + ask); }
    friend bool operator==(const Quote&, const Quote&) = default;
};

struct QuoteAnomaly {
    QuoteKind kind{};
    double maturity{};
    std::string entity;
    std::string reason;
};

struct Conventions {
    double float_tenor = 0.25;  // benchmark IRS floating leg
    double fixed_tenor = 0.5;   // benchmark IRS fixed leg
    friend bool operator==(const Conventions&, const Conventions&) = default;
};

struct QuoteSet {
    std::string valuation_date;
    std::vector<Quote> quotes;
    Conventions conventions;
    std::vector<QuoteAnomaly> anomalies;

    [[nodiscard]] bool empty() const { return quotes.empty(); }

    [[nodiscard]] std::vector<Quote> of(QuoteKind k, const std::string& entity = {}) const {
        std::vector<Quote> out;
        for (const auto& q : quotes)
            if (q.kind == k && (entity.empty() || q.entity == entity)) out.push_back(q);
        std::sort(out.begin(), out.end(), [](const Quote& a, const Quote& b) { return a.maturity < b.maturity; });
        return out;
    }

    [[nodiscard]] std::optional<Quote> find(QuoteKind k, double maturity, const std::string& entity = {}) const {
        for (const auto& q : quotes)
            if (q.kind == k && std::abs(q.maturity - maturity) < 1e-9 && q.entity == entity) return q;
        return std::nullopt;
    }

    /// CDS entities in order of first appearance.
    [[nodiscard]] std::vector<std::string> banks() const {
        std::vector<std::string> out;
        for (const auto& q : quotes)
            if (q.kind == QuoteKind::cds && std::find(out.begin(), out.end(), q.entity) == out.end())
                out.push_back(q.entity);
        return out;
    }

    /// Equality of the market content; anomaly flags are derived data.
    friend bool operator==(const QuoteSet& a, const QuoteSet& b) {
        return a.valuation_date == b.valuation_date && a.quotes == b.quotes && a.conventions == b.conventions;
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        cells.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline double parse_number(const std::string& s, std::size_t row, std::size_t col) {
    double v{};
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v))
        throw ParseError("not a number: '" + s + "'", row, col);
    return v;
}

/// One basis point: bands narrower than this are treated as this wide when judging outliers.
inline constexpr double typical_width_floor = 1e-4;

/// Flags crossed quotes (swapping them), unusually wide bands, and isolated jumps in a swap curve.
inline void flag_anomalies(QuoteSet& qs) {
    for (auto& q : qs.quotes) {
        if (q.bid > q.ask) {
            std::swap(q.bid, q.ask);
            qs.anomalies.push_back({q.kind, q.maturity, q.entity, "crossed bid/ask swapped"});
        }
    }
    for (auto kind : {QuoteKind::ois, QuoteKind::irs, QuoteKind::basis_1m3m, QuoteKind::basis_3m6m}) {
        const auto row = qs.of(kind);
        if (row.size() < 3) continue;
        std::vector<double> widths;
        for (const auto& q : row) widths.push_back(q.ask - q.bid);
        std::nth_element(widths.begin(), widths.begin() + widths.size() / 2, widths.end());
        const double typical = std::max(widths[widths.size() / 2], typical_width_floor);
        for (std::size_t k = 0; k < row.size(); ++k) {
            const auto& q = row[k];
            if (q.ask - q.bid > 10.0 * typical)
                qs.anomalies.push_back({kind, q.maturity, q.entity, "bid/ask band more than 10x the typical width"});
            if (k > 0 && k + 1 < row.size()) {
                const double lo = std::min(row[k - 1].bid, row[k + 1].bid);
                const double hi = std::max(row[k - 1].ask, row[k + 1].ask);
                if (q.bid < lo - 10.0 * typical || q.ask > hi + 10.0 * typical)
                    qs.anomalies.push_back({kind, q.maturity, q.entity, "non-monotone jump against both neighbours"});
            }
        }
    }
}

inline void check_unique(const QuoteSet& qs) {
    for (std::size_t i = 0; i < qs.quotes.size(); ++i)
        for (std::size_t j = i + 1; j < qs.quotes.size(); ++j) {
            const auto& a = qs.quotes[i];
            const auto& b = qs.quotes[j];
            if (a.kind == b.kind && a.entity == b.entity && std::abs(a.maturity - b.maturity) < 1e-9)
                throw ParseError("duplicate quote for " + to_string(a.kind) + " " + std::to_string(a.maturity) + " " +
                                     a.entity,
                                 j + 2, 0);
        }
}

}  // namespace detail

/// Parses CSV text with header `maturity,bid,ask,kind,unit[,entity]`.
inline QuoteSet parse_quotes_csv(std::istream& in, std::string valuation_date = {}) {
    QuoteSet qs;
    qs.valuation_date = std::move(valuation_date);
    std::string line;
    std::size_t row = 0;
    std::map<std::string, std::size_t> col;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (!line.empty() && line[0] == '#') {
            // "# date: 2013-01-01"
            const auto pos = line.find("date:");
            if (pos != std::string::npos) qs.valuation_date = detail::split_csv_line(line.substr(pos + 5)).at(0);
            continue;
        }
        const auto cells = detail::split_csv_line(line);
        if (col.empty()) {
            for (std::size_t c = 0; c < cells.size(); ++c) col[cells[c]] = c;
            for (const char* need : {"maturity", "bid", "ask", "kind"})
                if (!col.contains(need)) throw ParseError(std::string("missing header column ") + need, row, 0);
            if (!col.contains("unit")) throw UnitError("quote file header declares no unit column");
            continue;
        }
        const auto cell = [&](const char* name) -> std::string {
            const auto it = col.find(name);
            if (it == col.end() || it->second >= cells.size()) return {};
            return cells[it->second];
        };
        Quote q;
        const auto kind = parse_kind(cell("kind"));
        if (!kind) throw ParseError("unknown instrument kind '" + cell("kind") + "'", row, col["kind"] + 1);
        q.kind = *kind;
        q.maturity = detail::parse_number(cell("maturity"), row, col["maturity"] + 1);
        const auto unit = cell("unit");
        if (unit.empty()) throw UnitError("row " + std::to_string(row) + " has no unit");
        const auto div = unit_divisor(unit);
        if (!div) throw ParseError("unknown unit '" + unit + "'", row, col["unit"] + 1);
        q.bid = detail::parse_number(cell("bid"), row, col["bid"] + 1) / *div;
        q.ask = detail::parse_number(cell("ask"), row, col["ask"] + 1) / *div;
        q.entity = cell("entity");
        if (q.kind == QuoteKind::cds && q.entity.empty()) throw ParseError("CDS quote without entity", row, 0);
        if (!(q.maturity > 0.0)) throw ParseError("maturity must be positive", row, col["maturity"] + 1);
        qs.quotes.push_back(std::move(q));
    }
    detail::check_unique(qs);
    detail::flag_anomalies(qs);
    return qs;
}

inline QuoteSet parse_quotes_json(const nlohmann::json& j) {
    QuoteSet qs;
    qs.valuation_date = j.value("date", std::string{});
    if (j.contains("conventions")) {
        qs.conventions.float_tenor = j["conventions"].value("float_tenor", 0.25);
        qs.conventions.fixed_tenor = j["conventions"].value("fixed_tenor", 0.5);
    }
    std::size_t row = 0;
    for (const auto& r : j.value("quotes", nlohmann::json::array())) {
        ++row;
        if (!r.contains("unit")) throw UnitError("quote " + std::to_string(row) + " declares no unit");
        const auto div = unit_divisor(r["unit"].get<std::string>());
        if (!div) throw ParseError("unknown unit", row, 0);
        const auto kind = parse_kind(r.at("kind").get<std::string>());
        if (!kind) throw ParseError("unknown instrument kind", row, 0);
        for (const char* key : {"maturity", "bid", "ask"})
            if (!r.contains(key) || !r[key].is_number()) throw ParseError(std::string("missing number ") + key, row, 0);
        qs.quotes.push_back({*kind, r["maturity"].get<double>(), r["bid"].get<double>() / *div,
                             r["ask"].get<double>() / *div, r.value("entity", std::string{})});
    }
    detail::check_unique(qs);
    detail::flag_anomalies(qs);
    return qs;
}

enum class QuoteFormat { csv, json };

inline QuoteFormat format_from_path(const std::string& path) {
    return path.size() >= 5 && path.substr(path.size() - 5) == ".json" ? QuoteFormat::json : QuoteFormat::csv;
}

/// Date embedded in a file name such as quotes_2013-01-01.csv.
inline std::string date_from_path(const std::string& path) {
    for (std::size_t i = 0; i + 10 <= path.size(); ++i) {
        const auto s = path.substr(i, 10);
        if (std::isdigit(static_cast<unsigned char>(s[0])) && s[4] == '-' && s[7] == '-' &&
            std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)) || c == '-'; }))
            return s;
    }
    return {};
}

inline QuoteSet load_quotes(const std::string& path, std::optional<QuoteFormat> format = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open quote file " + path, 0, 0);
    if (format.value_or(format_from_path(path)) == QuoteFormat::json) {
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), 0, e.byte);
        }
        return parse_quotes_json(j);
    }
    auto qs = parse_quotes_csv(in, date_from_path(path));
    return qs;
}

namespace detail {
inline std::string exact(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
}  // namespace detail

/// Writes decimal-unit CSV that reloads to an identical QuoteSet.
inline void write_quotes_csv(std::ostream& out, const QuoteSet& qs) {
    if (!qs.valuation_date.empty()) out << "# date: " << qs.valuation_date << "\n";
    out << "maturity,bid,ask,kind,unit,entity\n";
    for (const auto& q : qs.quotes)
        out << detail::exact(q.maturity) << ',' << detail::exact(q.bid) << ',' << detail::exact(q.ask) << ','
            << to_string(q.kind) << ",dec," << q.entity << '\n';
}

inline nlohmann::json quotes_to_json(const QuoteSet& qs) {
    nlohmann::json j;
    j["date"] = qs.valuation_date;
    j["conventions"] = {{"float_tenor", qs.conventions.float_tenor}, {"fixed_tenor", qs.conventions.fixed_tenor}};
    j["quotes"] = nlohmann::json::array();
    for (const auto& q : qs.quotes) {
        nlohmann::json r{{"maturity", q.maturity}, {"bid", q.bid}, {"ask", q.ask}, {"kind", to_string(q.kind)},
                         {"unit", "dec"}};
        if (!q.entity.empty()) r["entity"] = q.entity;
        j["quotes"].push_back(std::move(r));
    }
    return j;
}

inline void save_quotes(const std::string& path, const QuoteSet& qs) {
    std::ofstream out(path);
    if (format_from_path(path) == QuoteFormat::json)
        out << quotes_to_json(qs).dump(2) << '\n';
    else
        write_quotes_csv(out, qs);
}

// ---------------------------------------------------------------------------------------------
// Calibration instruments

enum class SwapConditionKind { irs_3m, basis_1m, basis_6m };

inline std::string to_string(SwapConditionKind k) {
    switch (k) {
    case SwapConditionKind::irs_3m: return "IRS_3m";
    case SwapConditionKind::basis_1m: return "BASIS_1m";
    case SwapConditionKind::basis_6m: return "BASIS_6m";
    }
    return "?";
}

/// One swap-type calibration condition: the model floating leg PV must fall inside the
/// market-side band built from the benchmark IRS and, for basis conditions, the basis spread.
struct SwapCondition {
    SwapConditionKind kind{};
    double maturity{};
    TenorStructure target;  // floating index being priced
    FixedEquivalent reference;
    SpreadSide side = SpreadSide::shorter;
    double rate_bid{};
    double rate_ask{};
    double spread_bid{};
    double spread_ask{};

    /// Market-side band [lo, hi] for the target floating-leg PV.
    [[nodiscard]] std::pair<double, double> band(double fixed_annuity, double spread_annuity) const {
        switch (kind) {
        case SwapConditionKind::irs_3m:
            return {rate_bid * fixed_annuity, rate_ask * fixed_annuity};
        case SwapConditionKind::basis_1m:
            return {rate_bid * fixed_annuity - spread_ask * spread_annuity,
                    rate_ask * fixed_annuity - spread_bid * spread_annuity};
        case SwapConditionKind::basis_6m:
            return {rate_bid * fixed_annuity + spread_bid * spread_annuity,
                    rate_ask * fixed_annuity + spread_ask * spread_annuity};
        }
        return {0.0, 0.0};
    }

    /// Schedule whose annuity multiplies the spread.
    [[nodiscard]] const TenorStructure& spread_schedule() const {
        return side == SpreadSide::shorter ? target : reference.reference_float;
    }
};

struct CdsCondition {
    std::string entity;
    double maturity{};
    double spread{};  // decimal par spread (mid)
};

struct InstrumentSet {
    std::vector<Quote> ois;
    std::vector<SwapCondition> swaps;
    std::vector<CdsCondition> cds;
    std::vector<std::string> warnings;
};

inline InstrumentSet build_instruments(const QuoteSet& qs) {
    InstrumentSet out;
    out.ois = qs.of(QuoteKind::ois);
    const auto& conv = qs.conventions;
    for (const auto& irs : qs.of(QuoteKind::irs)) {
        const double T = irs.maturity;
        const FixedEquivalent ref{TenorStructure::regular(0.0, T, conv.float_tenor),
                                  TenorStructure::regular(0.0, T, std::min(conv.fixed_tenor, T)), irs.mid()};
        SwapCondition base{SwapConditionKind::irs_3m, T, ref.reference_float, ref, SpreadSide::shorter,
                           irs.bid, irs.ask, 0.0, 0.0};
        out.swaps.push_back(base);
        if (const auto b = qs.find(QuoteKind::basis_1m3m, T)) {
            SwapCondition c = base;
            c.kind = SwapConditionKind::basis_1m;
            c.target = TenorStructure::regular(0.0, T, 1.0 / 12.0);
            c.side = SpreadSide::shorter;
            c.spread_bid = b->bid;
            c.spread_ask = b->ask;
            out.swaps.push_back(std::move(c));
        } else {
            out.warnings.push_back("missing 1m/3m basis quote at " + std::to_string(T) + "y; condition skipped");
        }
        if (const auto b = qs.find(QuoteKind::basis_3m6m, T)) {
            SwapCondition c = base;
            c.kind = SwapConditionKind::basis_6m;
            c.target = TenorStructure::regular(0.0, T, 0.5);
            c.side = SpreadSide::longer;
            c.spread_bid = b->bid;
            c.spread_ask = b->ask;
            out.swaps.push_back(std::move(c));
        } else {
            out.warnings.push_back("missing 3m/6m basis quote at " + std::to_string(T) + "y; condition skipped");
        }
    }
    for (const auto kind : {QuoteKind::basis_1m3m, QuoteKind::basis_3m6m})
        for (const auto& b : qs.of(kind))
            if (!qs.find(QuoteKind::irs, b.maturity))
                out.warnings.push_back("basis quote at " + std::to_string(b.maturity) +
                                       "y has no benchmark IRS; condition skipped");
    for (const auto& name : qs.banks())
        for (const auto& q : qs.of(QuoteKind::cds, name)) out.cds.push_back({name, q.maturity, q.mid()});
    return out;
}

/// Throws MissingQuote when the set cannot support any calibration stage.
inline void require_quotes(const QuoteSet& qs, QuoteKind kind) {
    if (qs.of(kind).empty()) throw MissingQuote("no " + to_string(kind) + " quotes in the quote set");
}

}  // namespace rollover
