#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "rollover/curve.hpp"
#include "rollover/errors.hpp"
#include "rollover/tenor.hpp"

namespace rollover {

/// Discount factor implied by a single-period OIS rate.
inline double ois_discount_from_rate(double rate, double delta) { return 1.0 / (1.0 + delta * rate); }

inline double ois_par_rate(const ModelSpec& m, double t, double T) {
    if (!(T > t)) throw DomainError("ois_par_rate: maturity must follow evaluation time");
    const double d = ois_discount(m, t, T);
    return (1.0 - d) / ((T - t) * d);
}

/// Fixed-leg annuity sum_j accrual_j D^OIS(t, T_j).
inline double annuity(const ModelSpec& m, const TenorStructure& ts, double t = 0.0) {
    double a = 0.0;
    for (std::size_t j = 0; j < ts.size(); ++j) a += ts.accrual(j) * ois_discount(m, t, ts.dates[j]);
    return a;
}

inline double ois_par_rate_multi(const ModelSpec& m, const TenorStructure& ts, double t = 0.0) {
    return (1.0 - ois_discount(m, t, ts.maturity())) / annuity(m, ts, t);
}

/// OIS par rate for a quoted maturity: single period up to one year, annual payments beyond.
inline TenorStructure ois_schedule(double maturity) {
    if (maturity <= 1.0 + 1e-12) return TenorStructure::regular(0.0, maturity, maturity);
    return TenorStructure::regular(0.0, maturity, 1.0);
}

/// PV of the floating leg sum_j E[exp(-int r_c) delta_j L_j].
inline double float_leg_pv(const ModelSpec& m, const TenorStructure& ts, double t = 0.0) {
    const auto x = m.spot_state();
    const PeriodTransforms pt(m, ts.delta);
    double pv = 0.0;
    for (std::size_t j = 0; j < ts.size(); ++j) {
        const double tp = ts.previous(j);
        const double tn = ts.dates[j];
        if (std::abs(ts.accrual(j) - ts.delta) > 1e-12) {
            pv += libor_leg_pv(m, t, tp, tn, x);
        } else {
            pv += libor_leg_parts(m, pt, t, tp, tn, x).pv(m.phi.shift.integral(tp, tn));
        }
    }
    return pv;
}

/// Float leg PV minus fixed_rate times the fixed annuity.
inline double vanilla_swap_residual(const ModelSpec& m, const TenorStructure& float_leg,
                                    const TenorStructure& fixed_leg, double fixed_rate) {
    if (std::abs(float_leg.maturity() - fixed_leg.maturity()) > 1e-12 || float_leg.start != fixed_leg.start)
        throw ConventionError("swap legs must share start and maturity");
    return float_leg_pv(m, float_leg) - fixed_rate * annuity(m, fixed_leg);
}

inline double par_swap_rate(const ModelSpec& m, const TenorStructure& float_leg, const TenorStructure& fixed_leg) {
    return float_leg_pv(m, float_leg) / annuity(m, fixed_leg);
}

/// Which tenor of the quoted pair the priced floating index is.
enum class SpreadSide {
    shorter,  // target is the shorter tenor; the spread sits on the target leg
    longer,   // target is the longer tenor; the spread sits on the reference leg
};

/// Reference leg expressed through its fixed-rate equivalent (the benchmark IRS).
struct FixedEquivalent {
    TenorStructure reference_float;  // benchmark floating leg, e.g. 3m
    TenorStructure fixed;            // benchmark fixed leg, e.g. 6m
    double rate{};                   // benchmark swap rate
};

/// Market-side value of the target floating leg implied by the benchmark swap and the basis spread.
inline double basis_market_side(const ModelSpec& m, const TenorStructure& target, const FixedEquivalent& ref,
                                double spread, SpreadSide side) {
    const double fixed_value = ref.rate * annuity(m, ref.fixed);
    if (side == SpreadSide::shorter) {
        if (!(target.delta < ref.reference_float.delta))
            throw ConventionError("spread side 'shorter' needs the target tenor below the reference tenor");
        return fixed_value - spread * annuity(m, target);
    }
    if (!(target.delta > ref.reference_float.delta))
        throw ConventionError("spread side 'longer' needs the target tenor above the reference tenor");
    return fixed_value + spread * annuity(m, ref.reference_float);
}

inline double basis_swap_residual(const ModelSpec& m, const TenorStructure& target, const FixedEquivalent& ref,
                                  double spread, SpreadSide side) {
    if (std::abs(target.maturity() - ref.fixed.maturity()) > 1e-12)
        throw ConventionError("basis swap legs must be co-terminal");
    return float_leg_pv(m, target) - basis_market_side(m, target, ref, spread, side);
}

/// Par spread on the shorter leg that equates the two floating legs.
inline double par_basis_spread(const ModelSpec& m, const TenorStructure& short_leg, const TenorStructure& long_leg) {
    if (!(short_leg.delta < long_leg.delta)) throw ConventionError("par basis: first leg must be the shorter tenor");
    if (std::abs(short_leg.maturity() - long_leg.maturity()) > 1e-12)
        throw ConventionError("par basis: legs must be co-terminal");
    return (float_leg_pv(m, long_leg) - float_leg_pv(m, short_leg)) / annuity(m, short_leg);
}

/// Term LIBOR implied by the multi-period roll-over condition. Annual compounding when the
/// horizon is at least one year, simple compounding otherwise.
inline double implied_term_libor(const ModelSpec& m, const TenorStructure& ts, double t = 0.0) {
    double numerator = 0.0;
    for (std::size_t j = 0; j < ts.size(); ++j) numerator += rollover_forward_term(m, t, ts.previous(j), ts.dates[j]);
    for (std::size_t j = 0; j + 1 < ts.size(); ++j) numerator -= risky_discount(m, t, ts.dates[j]);
    if (!(numerator > 0.0)) throw NegativeGrowth("implied_term_libor: roll-over numerator is not positive");
    const double growth = numerator / risky_discount(m, t, ts.maturity());
    const double horizon = ts.maturity() - t;
    if (horizon >= 1.0 - 1e-12) return std::pow(growth, 1.0 / horizon) - 1.0;
    return (growth - 1.0) / horizon;
}

}  // namespace rollover
