#pragma once

// Bank-level credit: survival discounts, zero-recovery bonds and CDS legs.
// Every leg is a joint expectation under the pricing measure of
// exp(-int (r_c + lambda_j)), optionally weighted by the intensity at the default time.

#include <cmath>
#include <span>
#include <vector>

#include "rollover/affine.hpp"
#include "rollover/curve.hpp"
#include "rollover/errors.hpp"
#include "rollover/model.hpp"
#include "rollover/tenor.hpp"

namespace rollover {

/// Idiosyncratic intensity lambda_j(t) = shift(t) + <loading, X(t)>.
struct BankCredit {
    std::string name;
    PiecewiseShift shift;
    std::vector<double> loading;

    [[nodiscard]] double intensity(double t, std::span<const double> x) const {
        double v = shift(t);
        for (std::size_t i = 0; i < loading.size(); ++i) v += loading[i] * x[i];
        return v;
    }

    /// Throws NegativeIntensity if the intensity at the spot state is negative at any knot interval.
    void check_nonnegative(std::span<const double> spot) const {
        const auto knots = shift.knots();
        for (std::size_t k = 0; k + 1 < knots.size(); ++k)
            if (intensity(knots[k], spot) < -1e-14)
                throw NegativeIntensity(name + ": intensity negative on bucket starting at " + std::to_string(knots[k]));
    }

    friend bool operator==(const BankCredit&, const BankCredit&) = default;
};

inline BankCredit zero_credit(std::size_t d, std::string name = {}) {
    return {std::move(name), PiecewiseShift(0.0), std::vector<double>(d, 0.0)};
}

namespace detail {

inline std::vector<double> survival_gamma(const ModelSpec& m, const BankCredit& bank) {
    if (bank.loading.size() != m.dim()) throw DimensionError("bank loading length differs from factor count");
    std::vector<double> g(m.dim());
    for (std::size_t i = 0; i < m.dim(); ++i) g[i] = -(m.rc.loading[i] + bank.loading[i]);
    return g;
}

}  // namespace detail

/// S(t,T) = E[exp(-int_t^T (r_c + lambda_j))].
inline double survival_discount(const ModelSpec& m, const BankCredit& bank, double t, double T,
                                std::span<const double> x = {}) {
    detail::require_ordered(t, T, "survival_discount");
    std::vector<double> s;
    const auto xs = detail::state_or_spot(m, x, s);
    const auto gamma = detail::survival_gamma(m, bank);
    return std::exp(-m.rc.shift.integral(t, T) - bank.shift.integral(t, T) + detail::log_transform(m, T - t, gamma, xs));
}

/// Zero-recovery bond discounted at the riskless rate r = r_c - q Lambda.
inline double zero_recovery_bond(const ModelSpec& m, const BankCredit& bank, double t, double T,
                                 std::span<const double> x = {}) {
    return survival_discount(m, bank, t, T, x) * std::exp(m.q * m.Lambda * (T - t));
}

/// Survival discount and default density E[exp(-int_t^u (r_c + lambda_j)) lambda_j(u)] at one time.
struct SurvivalPoint {
    double survival{};
    double density{};
};

inline SurvivalPoint survival_point(const ModelSpec& m, const BankCredit& bank, double t, double u,
                                    std::span<const double> xs) {
    const auto gamma = detail::survival_gamma(m, bank);
    const double tau = u - t;
    double log_s = -m.rc.shift.integral(t, u) - bank.shift.integral(t, u);
    double weight = bank.shift(u);
    for (std::size_t i = 0; i < m.dim(); ++i) {
        const auto sens = transform_sensitivity(m.factors[i], tau, 0.0, gamma[i]);
        log_s += sens.phi + sens.psi * xs[i];
        weight += bank.loading[i] * (sens.dphi + sens.dpsi * xs[i]);
    }
    const double surv = std::exp(log_s);
    return {surv, weight * surv};
}

enum class AccrualRule {
    midpoint,  // default density at interval midpoints
    left,      // literal survival differences with left-endpoint accrual times
};

struct CdsSpec {
    TenorStructure premium_dates;
    double recovery = 0.4;
    double spread = 0.0;
    double mesh_step = 1.0 / 120.0;
    AccrualRule rule = AccrualRule::midpoint;

    void validate() const {
        if (!(recovery >= 0.0 && recovery < 1.0)) throw DomainError("CDS recovery must lie in [0, 1)");
        if (!(mesh_step > 0.0)) throw MeshError("CDS mesh step must be positive");
        for (std::size_t k = 0; k < premium_dates.size(); ++k) {
            const double n = premium_dates.accrual(k) / mesh_step;
            if (std::abs(n - std::round(n)) > 1e-6 || std::round(n) < 1.0)
                throw MeshError("CDS mesh step does not divide the premium period");
        }
    }
};

inline CdsSpec standard_cds(double maturity, double recovery = 0.4, double spread = 0.0) {
    const double delta = maturity < 0.25 ? maturity : 0.25;
    return {TenorStructure::regular(0.0, maturity, delta), recovery, spread};
}

/// Legs per unit of spread where applicable.
struct CdsLegs {
    double protection{};  // (1 - R) times the default-weighted discount
    double annuity{};     // sum of accrual * S(t, T_k)
    double accrued{};     // accrued-on-default per unit spread
};

inline CdsLegs cds_legs(const ModelSpec& m, const BankCredit& bank, const CdsSpec& spec, double t = 0.0,
                        std::span<const double> x = {}) {
    spec.validate();
    if (t > spec.premium_dates.start + 1e-12) throw DomainError("CDS valuation time after protection start");
    std::vector<double> s;
    const auto xs = detail::state_or_spot(m, x, s);
    const auto& ts = spec.premium_dates;
    CdsLegs legs;
    double default_weight = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const double begin = ts.previous(k);
        const double end = ts.dates[k];
        const auto n = static_cast<std::size_t>(std::llround((end - begin) / spec.mesh_step));
        const double step = (end - begin) / static_cast<double>(n);
        legs.annuity += (end - begin) * survival_point(m, bank, t, end, xs).survival;
        if (spec.rule == AccrualRule::midpoint) {
            for (std::size_t p = 0; p < n; ++p) {
                const double mid = begin + (static_cast<double>(p) + 0.5) * step;
                const double mass = survival_point(m, bank, t, mid, xs).density * step;
                default_weight += mass;
                legs.accrued += (mid - begin) * mass;
            }
        } else {
            double prev = survival_point(m, bank, t, begin, xs).survival;
            for (std::size_t p = 0; p < n; ++p) {
                const double left = begin + static_cast<double>(p) * step;
                const double next = survival_point(m, bank, t, left + step, xs).survival;
                default_weight += prev - next;
                legs.accrued += (left - begin) * (prev - next);
                prev = next;
            }
        }
    }
    legs.protection = (1.0 - spec.recovery) * default_weight;
    return legs;
}

/// Value to the protection buyer.
inline double cds_value(const ModelSpec& m, const BankCredit& bank, const CdsSpec& spec, double t = 0.0,
                        std::span<const double> x = {}) {
    const auto legs = cds_legs(m, bank, spec, t, x);
    return legs.protection - spec.spread * (legs.annuity + legs.accrued);
}

inline double cds_par_spread(const CdsLegs& legs) {
    const double risky_annuity = legs.annuity + legs.accrued;
    if (!(risky_annuity > 0.0)) throw DegenerateAnnuity("CDS risky annuity is not positive");
    return legs.protection / risky_annuity;
}

inline double cds_par_spread(const ModelSpec& m, const BankCredit& bank, const CdsSpec& spec, double t = 0.0,
                             std::span<const double> x = {}) {
    return cds_par_spread(cds_legs(m, bank, spec, t, x));
}

}  // namespace rollover
