#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "rollover/errors.hpp"

namespace rollover {

/// Piecewise-constant deterministic shift. values[k] applies on [knots[k], knots[k+1]);
/// the first value extends to the left of knots.front() and the last to the right of knots.back().
class PiecewiseShift {
public:
    PiecewiseShift() : PiecewiseShift(0.0) {}

    explicit PiecewiseShift(double constant) : knots_{0.0, 1.0}, values_{constant} { rebuild(); }

    PiecewiseShift(std::vector<double> knots, std::vector<double> values)
        : knots_(std::move(knots)), values_(std::move(values)) {
        if (knots_.size() < 2 || values_.size() + 1 != knots_.size())
            throw DomainError("piecewise shift needs n+1 knots for n values");
        for (std::size_t i = 1; i < knots_.size(); ++i)
            if (!(knots_[i] > knots_[i - 1])) throw DomainError("piecewise shift knots must increase strictly");
        rebuild();
    }

    /// One bucket [T_{k-1}, T_k) per maturity, with T_0 = 0.
    static PiecewiseShift from_maturities(std::span<const double> maturities, std::span<const double> values) {
        std::vector<double> knots{0.0};
        knots.insert(knots.end(), maturities.begin(), maturities.end());
        return {std::move(knots), std::vector<double>(values.begin(), values.end())};
    }

    [[nodiscard]] double operator()(double t) const { return values_[interval(t)]; }

    /// Exact integral over [s, t].
    [[nodiscard]] double integral(double s, double t) const { return antiderivative(t) - antiderivative(s); }

    [[nodiscard]] std::span<const double> knots() const { return knots_; }
    [[nodiscard]] std::span<const double> values() const { return values_; }
    [[nodiscard]] std::size_t size() const { return values_.size(); }

    void set_value(std::size_t k, double v) {
        values_.at(k) = v;
        rebuild();
    }

    void set_values(std::span<const double> v) {
        if (v.size() != values_.size()) throw DimensionError("piecewise shift: value count mismatch");
        std::copy(v.begin(), v.end(), values_.begin());
        rebuild();
    }

    [[nodiscard]] bool is_constant() const {
        return std::all_of(values_.begin(), values_.end(), [&](double v) { return v == values_.front(); });
    }

    friend bool operator==(const PiecewiseShift&, const PiecewiseShift&) = default;

private:
    [[nodiscard]] std::size_t interval(double t) const {
        const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
        if (it == knots_.begin()) return 0;
        return std::min<std::size_t>(static_cast<std::size_t>(it - knots_.begin()) - 1, values_.size() - 1);
    }

    // integral from knots_[0] to t
    [[nodiscard]] double antiderivative(double t) const {
        if (t <= knots_.front()) return values_.front() * (t - knots_.front());
        const std::size_t k = interval(t);
        return cumulative_[k] + values_[k] * (t - knots_[k]);
    }

    void rebuild() {
        cumulative_.assign(values_.size(), 0.0);
        for (std::size_t k = 1; k < values_.size(); ++k)
            cumulative_[k] = cumulative_[k - 1] + values_[k - 1] * (knots_[k] - knots_[k - 1]);
    }

    std::vector<double> knots_;
    std::vector<double> values_;
    std::vector<double> cumulative_;
};

}  // namespace rollover
