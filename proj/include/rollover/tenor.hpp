#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rollover/errors.hpp"

namespace rollover {

/// Equally spaced payment grid start < T_1 < ... < T_n, spacing delta (years).
struct TenorStructure {
    double start{};
    std::vector<double> dates;
    double delta{};

    static TenorStructure regular(double start, double end, double delta) {
        const double periods = (end - start) / delta;
        const auto n = static_cast<long>(std::llround(periods));
        if (n < 1 || std::abs(periods - static_cast<double>(n)) > 1e-9)
            throw ConventionError("tenor grid: maturity is not a whole number of periods");
        TenorStructure ts{start, {}, delta};
        ts.dates.reserve(static_cast<std::size_t>(n));
        for (long j = 1; j <= n; ++j) ts.dates.push_back(j == n ? end : start + static_cast<double>(j) * delta);
        return ts;
    }

    [[nodiscard]] std::size_t size() const { return dates.size(); }
    [[nodiscard]] double maturity() const { return dates.back(); }
    [[nodiscard]] double previous(std::size_t j) const { return j == 0 ? start : dates[j - 1]; }
    [[nodiscard]] double accrual(std::size_t j) const { return dates[j] - previous(j); }

    /// Frequency label, e.g. "3m".
    [[nodiscard]] std::string label() const {
        const auto months = std::llround(delta * 12.0);
        if (std::abs(delta * 12.0 - static_cast<double>(months)) < 1e-9) return std::to_string(months) + "m";
        return std::to_string(delta) + "y";
    }
};

}  // namespace rollover
