#pragma once

// Caplets on the model LIBOR through the forward-measure transform of
// Z = log[(1 + delta L(T_prev, T_next)) / (1 + delta R)].

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rollover/affine.hpp"
#include "rollover/curve.hpp"
#include "rollover/errors.hpp"
#include "rollover/model.hpp"

namespace rollover {

using cplx = std::complex<double>;

/// Z = f + <g, X(T_prev)> and the pieces of its forward-measure transform.
struct CapletKernel {
    double t{};
    double T_prev{};
    double T_next{};
    double intercept{};                // f
    std::vector<double> slope;         // g
    std::vector<double> discount_psi;  // Psi(delta, -a)
    double discount_log{};             // -int_t^{T_next} a0 + Phi(delta, -a)
    double ois{};                      // D^OIS(t, T_next)
    std::vector<double> state;

    CapletKernel(const ModelSpec& m, double t0, double prev, double next, double strike,
                 std::span<const double> x = {})
        : t(t0), T_prev(prev), T_next(next) {
        detail::require_ordered(t, T_prev, "caplet");
        if (!(T_next > T_prev)) throw DomainError("caplet: accrual period must be positive");
        const double delta = T_next - T_prev;
        if (!(1.0 + delta * strike > 0.0)) throw DomainError("caplet: strike must exceed -1/delta");
        std::vector<double> s;
        const auto xs = detail::state_or_spot(m, x, s);
        state.assign(xs.begin(), xs.end());
        const PeriodTransforms pt(m, delta);
        intercept = -std::log1p(delta * strike) + m.phi.shift.integral(T_prev, T_next) +
                    m.risky_shift_integral(T_prev, T_next) + pt.funding.phi - pt.risky.phi;
        slope.resize(m.dim());
        for (std::size_t i = 0; i < m.dim(); ++i) slope[i] = pt.funding.psi[i] - pt.risky.psi[i];
        discount_psi = pt.collateral.psi;
        discount_log = -m.rc.shift.integral(t, T_next) + pt.collateral.phi;
        ois = ois_discount(m, t, T_next, xs);
        factors = m.factors;
        gamma = m.gamma_collateral();
    }

    /// E^{T_next}[exp(zeta Z)] for complex zeta; the characteristic function at u is mgf(i u).
    [[nodiscard]] cplx mgf(cplx zeta) const {
        std::vector<cplx> terminal(slope.size());
        for (std::size_t i = 0; i < slope.size(); ++i) terminal[i] = zeta * slope[i] + discount_psi[i];
        const auto outer = riccati_transform(factors, T_prev - t, terminal, cplx{1.0}, gamma);
        return std::exp(zeta * intercept + discount_log + affine_exponent(outer, state)) / ois;
    }

    /// Mean and variance of Z under the T_next-forward measure.
    [[nodiscard]] std::pair<double, double> moments() const {
        double mean = intercept;
        double var = 0.0;
        for (std::size_t i = 0; i < slope.size(); ++i) {
            const auto s = transform_sensitivity(factors[i], T_prev - t, discount_psi[i], gamma[i]);
            mean += slope[i] * (s.dphi + s.dpsi * state[i]);
            var += slope[i] * slope[i] * (s.d2phi + s.d2psi * state[i]);
        }
        return {mean, std::max(var, 0.0)};
    }

private:
    FactorSet factors;
    std::vector<double> gamma;
};

/// phi_Z(u) = E^{T_next}[exp(i u Z)].
inline cplx caplet_char_fn(const ModelSpec& m, double T_prev, double T_next, double strike, cplx u, double t = 0.0,
                           std::span<const double> x = {}) {
    return CapletKernel(m, t, T_prev, T_next, strike, x).mgf(cplx{0.0, 1.0} * u);
}

struct FourierConfig {
    double damping = 0.75;
    double truncation = 200.0;  // in units of the inverse standard deviation of Z
    double tolerance = 1e-10;   // relative to the undiscounted option value
};

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// E[(exp(Y) - 1)^+] for Y ~ N(mean, var).
inline double lognormal_call(double mean, double sd) {
    return std::exp(mean + 0.5 * sd * sd) * normal_cdf((mean + sd * sd) / sd) - normal_cdf(mean / sd);
}

}  // namespace detail

/// E^{T_next}[(exp(Z) - 1)^+] by damped Fourier inversion with a moment-matched Gaussian control.
inline double caplet_forward_value(const CapletKernel& kernel, const FourierConfig& cfg = {}) {
    const double alpha = cfg.damping;
    if (!(alpha > 0.0)) throw DomainError("caplet: damping must be positive");
    const auto [mean, var] = kernel.moments();
    const double sd = std::sqrt(var);
    if (sd < 1e-12) return std::max(std::exp(mean) - 1.0, 0.0);

    // the damped payoff needs E[exp((1 + alpha) Z)] < infinity
    const cplx edge = kernel.mgf(cplx{1.0 + alpha});
    if (!std::isfinite(edge.real())) throw ExplosionError("caplet: damping outside the analyticity strip", kernel.T_prev);

    const auto damped = [&](double v, auto&& transform) {
        const cplx shifted{v, -(alpha + 1.0)};
        const cplx denom{alpha * alpha + alpha - v * v, (2.0 * alpha + 1.0) * v};
        return transform(shifted) / denom;
    };
    const auto gaussian = [&](cplx u) { return std::exp(cplx{0.0, 1.0} * u * mean - 0.5 * u * u * var); };
    const auto model = [&](cplx u) { return kernel.mgf(cplx{0.0, 1.0} * u); };
    const auto correction = [&](double v) { return (damped(v, model) - damped(v, gaussian)).real(); };

    using boost::math::quadrature::gauss_kronrod;
    const double upper = cfg.truncation / sd;
    const double panel = 2.0 / sd;
    double integral = 0.0;
    double tail = 0.0;
    for (double lo = 0.0; lo < upper; lo += panel) {
        const double hi = std::min(lo + panel, upper);
        integral += gauss_kronrod<double, 31>::integrate(correction, lo, hi, 8, 1e-12);
        tail = std::abs(correction(hi)) * panel;
    }
    const double control = detail::lognormal_call(mean, sd);
    const double value = control + integral / std::numbers::pi;
    if (tail / std::numbers::pi > cfg.tolerance * std::max(std::abs(value), 1e-300) + 1e-300)
        throw QuadratureError("caplet: Fourier integrand has not decayed at the truncation point");
    return std::max(value, 0.0);
}

/// Caplet price D^OIS(t, T_next) K (1 + delta R) E^{T_next}[(e^Z - 1)^+].
inline double caplet_price(const ModelSpec& m, double T_prev, double T_next, double strike, double notional = 1.0,
                           double damping = 0.75, double t = 0.0, std::span<const double> x = {}) {
    const CapletKernel kernel(m, t, T_prev, T_next, strike, x);
    FourierConfig cfg;
    cfg.damping = damping;
    return kernel.ois * notional * (1.0 + (T_next - T_prev) * strike) * caplet_forward_value(kernel, cfg);
}

}  // namespace rollover
