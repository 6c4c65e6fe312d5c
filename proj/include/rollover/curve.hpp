#pragma once

// Discounting and LIBOR expectations of the roll-over risk model.
// Every function takes an optional state vector; an empty span means the spot state y0.

#include <cmath>
#include <span>
#include <vector>

#include "rollover/affine.hpp"
#include "rollover/errors.hpp"
#include "rollover/model.hpp"

namespace rollover {

namespace detail {

inline std::span<const double> state_or_spot(const ModelSpec& m, std::span<const double> x,
                                             std::vector<double>& storage) {
    if (!x.empty()) {
        if (x.size() != m.dim()) throw DimensionError("state vector length differs from factor count");
        return x;
    }
    storage = m.spot_state();
    return storage;
}

inline void require_ordered(double t, double T, const char* what) {
    if (!(T >= t)) throw DomainError(std::string(what) + ": maturity precedes evaluation time");
}

/// Phi + <Psi, x> of the transform with loading gamma over tau and terminal loading u.
inline double log_transform(const ModelSpec& m, double tau, std::span<const double> gamma, std::span<const double> u,
                            std::span<const double> x) {
    return affine_exponent(riccati_transform(m.factors, tau, u, 1.0, gamma), x);
}

inline double log_transform(const ModelSpec& m, double tau, std::span<const double> gamma, std::span<const double> x) {
    const std::vector<double> zero(m.dim(), 0.0);
    return log_transform(m, tau, gamma, zero, x);
}

}  // namespace detail

/// D^OIS(t, T) = E_t[exp(-int_t^T r_c)].
inline double ois_discount(const ModelSpec& m, double t, double T, std::span<const double> x = {}) {
    detail::require_ordered(t, T, "ois_discount");
    std::vector<double> s;
    const auto xs = detail::state_or_spot(m, x, s);
    return std::exp(-m.rc.shift.integral(t, T) + detail::log_transform(m, T - t, m.gamma_collateral(), xs));
}

/// E_t[exp(int_t^T phi)].
inline double funding_growth(const ModelSpec& m, double t, double T, std::span<const double> x = {}) {
    detail::require_ordered(t, T, "funding_growth");
    std::vector<double> s;
    const auto xs = detail::state_or_spot(m, x, s);
    return std::exp(m.phi.shift.integral(t, T) + detail::log_transform(m, T - t, m.gamma_funding(), xs));
}

/// E_t[exp(-int_t^T (r_c + q lambda))].
inline double risky_discount(const ModelSpec& m, double t, double T, std::span<const double> x = {}) {
    detail::require_ordered(t, T, "risky_discount");
    std::vector<double> s;
    const auto xs = detail::state_or_spot(m, x, s);
    return std::exp(-m.risky_shift_integral(t, T) + detail::log_transform(m, T - t, m.gamma_risky(), xs));
}

/// Simple-compounded LIBOR for [t, T].
inline double spot_libor(const ModelSpec& m, double t, double T, std::span<const double> x = {}) {
    const double delta = T - t;
    if (!(delta > 0.0)) throw DomainError("spot_libor: accrual period must be positive");
    return (funding_growth(m, t, T, x) / risky_discount(m, t, T, x) - 1.0) / delta;
}

/// E_t[exp(-int_t^T (r_c + phi + q lambda))]. Equals (1 + delta L)^-1 only when phi is
/// deterministic and independent of r_c + q lambda; kept as a diagnostic.
inline double libor_discount_independent(const ModelSpec& m, double t, double T, std::span<const double> x = {}) {
    detail::require_ordered(t, T, "libor_discount_independent");
    std::vector<double> s;
    const auto xs = detail::state_or_spot(m, x, s);
    auto gamma = m.gamma_risky();
    for (std::size_t i = 0; i < gamma.size(); ++i) gamma[i] -= m.phi.loading[i];
    return std::exp(-m.risky_shift_integral(t, T) - m.phi.shift.integral(t, T) +
                    detail::log_transform(m, T - t, gamma, xs));
}

/// E_t[exp(-int_t^{T_prev} (r_c + q lambda)) exp(int_{T_prev}^{T_next} phi)] by a two-layer transform.
inline double rollover_forward_term(const ModelSpec& m, double t, double T_prev, double T_next,
                                    std::span<const double> x = {}) {
    detail::require_ordered(t, T_prev, "rollover_forward_term");
    detail::require_ordered(T_prev, T_next, "rollover_forward_term");
    std::vector<double> s;
    const auto xs = detail::state_or_spot(m, x, s);
    const std::vector<double> zero(m.dim(), 0.0);
    const auto inner = riccati_transform(m.factors, T_next - T_prev, zero, 1.0, m.gamma_funding());
    const auto outer = riccati_transform(m.factors, T_prev - t, inner.psi, 1.0, m.gamma_risky());
    return std::exp(m.phi.shift.integral(T_prev, T_next) - m.risky_shift_integral(t, T_prev) + inner.phi +
                    affine_exponent(outer, xs));
}

/// Transforms over one accrual period of length delta, shared by every period of a tenor grid.
struct PeriodTransforms {
    double delta{};
    TransformCoeffs<double> collateral;  // (delta, -a)
    TransformCoeffs<double> funding;     // (delta, c)
    TransformCoeffs<double> risky;       // (delta, -(a + q b))
    std::vector<double> combined;        // Psi(delta,-a) + Psi(delta,c) - Psi(delta,-(a+qb))

    PeriodTransforms(const ModelSpec& m, double period) : delta(period) {
        const std::vector<double> zero(m.dim(), 0.0);
        collateral = riccati_transform(m.factors, delta, zero, 1.0, m.gamma_collateral());
        funding = riccati_transform(m.factors, delta, zero, 1.0, m.gamma_funding());
        risky = riccati_transform(m.factors, delta, zero, 1.0, m.gamma_risky());
        combined.resize(m.dim());
        for (std::size_t i = 0; i < m.dim(); ++i)
            combined[i] = collateral.psi[i] + funding.psi[i] - risky.psi[i];
    }
};

/// PV of delta * L(T_prev, T_next) split as growth * exp(int_{T_prev}^{T_next} c0) - discount.
struct LiborLegParts {
    double discount{};  // D^OIS(t, T_next)
    double growth{};    // second term without the funding shift

    [[nodiscard]] double pv(double funding_shift_integral) const {
        return growth * std::exp(funding_shift_integral) - discount;
    }
};

inline LiborLegParts libor_leg_parts(const ModelSpec& m, const PeriodTransforms& pt, double t, double T_prev,
                                     double T_next, std::span<const double> xs) {
    const double tau = T_prev - t;
    const double a0_full = m.rc.shift.integral(t, T_next);
    const auto first = riccati_transform(m.factors, tau, pt.collateral.psi, 1.0, m.gamma_collateral());
    const auto second = riccati_transform(m.factors, tau, pt.combined, 1.0, m.gamma_collateral());
    LiborLegParts parts;
    parts.discount = std::exp(-a0_full + pt.collateral.phi + affine_exponent(first, xs));
    parts.growth = std::exp(-a0_full + m.risky_shift_integral(T_prev, T_next) + pt.collateral.phi + pt.funding.phi -
                            pt.risky.phi + affine_exponent(second, xs));
    return parts;
}

/// E_t[exp(-int_t^{T_next} r_c) delta L(T_prev, T_next)], the PV of one floating coupon.
inline double libor_leg_pv(const ModelSpec& m, double t, double T_prev, double T_next, std::span<const double> x = {}) {
    detail::require_ordered(t, T_prev, "libor_leg_pv");
    if (!(T_next > T_prev)) throw DomainError("libor_leg_pv: accrual period must be positive");
    std::vector<double> s;
    const auto xs = detail::state_or_spot(m, x, s);
    const PeriodTransforms pt(m, T_next - T_prev);
    return libor_leg_parts(m, pt, t, T_prev, T_next, xs).pv(m.phi.shift.integral(T_prev, T_next));
}

}  // namespace rollover
