#pragma once

#include <string>
#include <vector>

#include "rollover/affine.hpp"
#include "rollover/errors.hpp"
#include "rollover/shift.hpp"

namespace rollover {

/// Deterministic shift plus constant loading on the factor vector.
struct SpreadProjection {
    PiecewiseShift shift;
    std::vector<double> loading;

    [[nodiscard]] double at(double t, std::span<const double> x) const {
        double v = shift(t);
        for (std::size_t i = 0; i < loading.size(); ++i) v += loading[i] * x[i];
        return v;
    }

    friend bool operator==(const SpreadProjection&, const SpreadProjection&) = default;
};

inline SpreadProjection zero_projection(std::size_t d) { return {PiecewiseShift(0.0), std::vector<double>(d, 0.0)}; }

struct ModelSpec {
    FactorSet factors;
    SpreadProjection rc;      // collateral rate: a0(t), a
    SpreadProjection lambda;  // panel credit intensity: b0(t), b
    SpreadProjection phi;     // funding liquidity: c0(t), c
    double q = 0.6;           // loss fraction in default
    double Lambda = 5e-4;     // systemic intensity
    std::string valuation_date;

    [[nodiscard]] std::size_t dim() const { return factors.size(); }
    [[nodiscard]] std::vector<double> spot_state() const { return initial_state(factors); }

    /// gamma of the collateral discount leg: -a
    [[nodiscard]] std::vector<double> gamma_collateral() const {
        std::vector<double> g(dim());
        for (std::size_t i = 0; i < dim(); ++i) g[i] = -rc.loading[i];
        return g;
    }

    /// gamma of the risky discount leg: -(a + q b)
    [[nodiscard]] std::vector<double> gamma_risky() const {
        std::vector<double> g(dim());
        for (std::size_t i = 0; i < dim(); ++i) g[i] = -(rc.loading[i] + q * lambda.loading[i]);
        return g;
    }

    [[nodiscard]] std::vector<double> gamma_funding() const { return phi.loading; }

    /// Combined credit-adjusted loading d = a + q b.
    [[nodiscard]] std::vector<double> credit_adjusted_loading() const {
        std::vector<double> g(dim());
        for (std::size_t i = 0; i < dim(); ++i) g[i] = rc.loading[i] + q * lambda.loading[i];
        return g;
    }

    /// int_s^t (a0 + q b0)
    [[nodiscard]] double risky_shift_integral(double s, double t) const {
        return rc.shift.integral(s, t) + q * lambda.shift.integral(s, t);
    }

    void validate() const {
        if (factors.empty()) throw DimensionError("model needs at least one factor");
        for (const auto& f : factors) f.validate();
        for (const auto* p : {&rc, &lambda, &phi})
            if (p->loading.size() != factors.size()) throw DimensionError("projection loading length differs from factor count");
        if (!(q > 0.0 && q <= 1.0)) throw DomainError("q must lie in (0, 1]");
        if (!(Lambda >= 0.0)) throw DomainError("Lambda must be nonnegative");
    }

    friend bool operator==(const ModelSpec& a, const ModelSpec& b) {
        auto same_factors = a.factors.size() == b.factors.size();
        for (std::size_t i = 0; same_factors && i < a.factors.size(); ++i) {
            const auto& x = a.factors[i];
            const auto& y = b.factors[i];
            same_factors = x.kappa == y.kappa && x.theta == y.theta && x.sigma == y.sigma && x.y0 == y.y0;
        }
        return same_factors && a.rc == b.rc && a.lambda == b.lambda && a.phi == b.phi && a.q == b.q &&
               a.Lambda == b.Lambda && a.valuation_date == b.valuation_date;
    }
};

/// Model with only the collateral rate populated.
inline ModelSpec collateral_only_model(FactorSet factors, PiecewiseShift a0, std::vector<double> a) {
    ModelSpec m;
    const auto d = factors.size();
    m.factors = std::move(factors);
    m.rc = {std::move(a0), std::move(a)};
    m.lambda = zero_projection(d);
    m.phi = zero_projection(d);
    return m;
}

}  // namespace rollover
