#pragma once

// Closed-form transforms for a vector of independent CIR factors
//   dy_i = kappa_i (theta_i - y_i) dt + sigma_i sqrt(y_i) dW_i
// Per factor the generalized Riccati system
//   psi' = w - kappa psi + sigma^2/2 psi^2,  psi(0) = u,   w = v * gamma_i
//   phi' = kappa theta psi,                  phi(0) = 0
// is solved as follows (h = sqrt(kappa^2 - 2 sigma^2 w), Re h >= 0):
//   p   = 2w / (kappa + h)                  stable root of the quadratic
//   q_h = (1 - exp(-h tau)) / h
//   x   = sigma^2 (p - u) q_h / 2
//   psi = p - (p - u) exp(-h tau) / (1 + x)
//   phi = kappa theta [p tau - (p - u) q_h log(1 + x) / x]
// The expression is regular at h = 0 and sigma = 0. For real data with
// h^2 < 0 a tangent form is used. The transform explodes when 1 + x
// reaches zero (tangent form: when its argument reaches pi/2).

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "rollover/errors.hpp"

namespace rollover {

struct CirFactor {
    double kappa{};  // mean-reversion speed, 1/year
    double theta{};  // long-run level
    double sigma{};  // volatility of sqrt(y), per sqrt(year)
    double y0{};     // initial value

    [[nodiscard]] bool feller_ok() const { return 2.0 * kappa * theta >= sigma * sigma; }

    void validate() const {
        const bool ok = kappa > 0.0 && theta > 0.0 && sigma > 0.0 && y0 >= 0.0 && std::isfinite(kappa) &&
                        std::isfinite(theta) && std::isfinite(sigma) && std::isfinite(y0);
        if (!ok) throw DomainError("CIR factor needs kappa > 0, theta > 0, sigma > 0, y0 >= 0");
    }

    [[nodiscard]] double mean(double t) const { return theta + (y0 - theta) * std::exp(-kappa * t); }

    [[nodiscard]] double variance(double t) const {
        const double e = std::exp(-kappa * t);
        return y0 * sigma * sigma * e * (1.0 - e) / kappa + theta * sigma * sigma * (1.0 - e) * (1.0 - e) / (2.0 * kappa);
    }
};

using FactorSet = std::vector<CirFactor>;

inline std::vector<double> initial_state(const FactorSet& factors) {
    std::vector<double> x;
    x.reserve(factors.size());
    for (const auto& f : factors) x.push_back(f.y0);
    return x;
}

template <class T>
struct TransformCoeffs {
    T phi{};
    std::vector<T> psi;
};

/// Per-factor transform value.
template <class T>
struct FactorTransform {
    T phi{};
    T psi{};
};

/// Transform together with derivatives in the terminal loading u.
struct FactorSensitivity {
    double phi{};
    double psi{};
    double dphi{};
    double dpsi{};
    double d2phi{};
    double d2psi{};
};

inline constexpr double sigma_degenerate = 1e-8;
inline constexpr double w_degenerate = 1e-14;

namespace detail {

template <class T>
constexpr bool is_complex_v = !std::is_same_v<T, double>;

/// (1 - exp(-h t)) / h, continuous at h = 0.
template <class T>
T decay_integral(T h, double t) {
    const T z = h * t;
    if (std::abs(z) < 1e-4) return t * (1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0);
    return (1.0 - std::exp(-z)) / h;
}

/// log(1 + x) / x, continuous at x = 0.
template <class T>
T log1p_ratio(T x) {
    if (std::abs(x) < 1e-5) return 1.0 - x / 2.0 + x * x / 3.0 - x * x * x / 4.0;
    if constexpr (is_complex_v<T>) {
        return std::log(1.0 + x) / x;
    } else {
        return std::log1p(x) / x;
    }
}

struct TangentForm {
    double a;       // sigma^2 / 2
    double scale;   // sqrt(m / a)
    double rate;    // sqrt(a m)
    double phase0;  // atan((u - kappa/sigma^2) / scale)
};

inline TangentForm tangent_form(const CirFactor& f, double u, double w) {
    const double s2 = f.sigma * f.sigma;
    const double a = s2 / 2.0;
    const double m = w - f.kappa * f.kappa / (2.0 * s2);
    const double scale = std::sqrt(m / a);
    return {a, scale, std::sqrt(a * m), std::atan((u - f.kappa / s2) / scale)};
}

/// True while the transform is finite at horizon t.
inline bool denominator_positive(const CirFactor& f, double u, double w, double t) {
    if (f.sigma < sigma_degenerate) return true;
    const double s2 = f.sigma * f.sigma;
    const double h2 = f.kappa * f.kappa - 2.0 * s2 * w;
    if (h2 < 0.0) {
        const auto tf = tangent_form(f, u, w);
        return tf.rate * t + tf.phase0 < std::numbers::pi / 2.0;
    }
    const double h = std::sqrt(h2);
    const double p = std::abs(w) < w_degenerate ? 0.0 : 2.0 * w / (f.kappa + h);
    return 1.0 + s2 * (p - u) * decay_integral(h, t) / 2.0 > 0.0;
}

}  // namespace detail

/// First time in (0, horizon] at which the real transform of one factor explodes, by bisection
/// on the sign of the closed-form denominator. Empty when finite on the whole interval.
inline std::optional<double> explosion_time(const CirFactor& f, double u, double w, double horizon) {
    if (detail::denominator_positive(f, u, w, horizon)) return std::nullopt;
    double lo = 0.0;
    double hi = horizon;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * (1.0 + hi); ++i) {
        const double mid = 0.5 * (lo + hi);
        (detail::denominator_positive(f, u, w, mid) ? lo : hi) = mid;
    }
    return hi;
}

namespace detail {

[[noreturn]] inline void throw_explosion(const CirFactor& f, double u, double w, double tau) {
    const double t = explosion_time(f, u, w, tau).value_or(tau);
    throw ExplosionError("affine transform explodes at t = " + std::to_string(t) + " before horizon " +
                             std::to_string(tau),
                         t);
}

}  // namespace detail

/// Closed-form transform of one factor; T is double or std::complex<double>.
template <class T>
FactorTransform<T> transform_factor(const CirFactor& f, double tau, T u, T w) {
    if (tau == 0.0) return {T{0.0}, u};
    const double k = f.kappa;
    const double kt = f.kappa * f.theta;
    const bool w_zero = std::abs(w) < w_degenerate;

    if (f.sigma < sigma_degenerate) {
        // linear ODE
        const double e = std::exp(-k * tau);
        const double qk = detail::decay_integral(k, tau);
        const T p = w_zero ? T{0.0} : w / k;
        return {kt * (p * tau + (u - p) * qk), p + (u - p) * e};
    }

    const double s2 = f.sigma * f.sigma;
    const T h2 = k * k - 2.0 * s2 * w;
    if constexpr (detail::is_complex_v<T>) {
        // |E[exp(z Y)]| <= E[exp(Re z Y)]: finite exactly when the real-part transform is
        if (const auto t = explosion_time(f, u.real(), w.real(), tau))
            throw ExplosionError("complex affine transform explodes with its real part", *t);
    } else {
        if (h2 < 0.0) {
            const auto tf = detail::tangent_form(f, u, w);
            const double arg = tf.rate * tau + tf.phase0;
            if (arg >= std::numbers::pi / 2.0) detail::throw_explosion(f, u, w, tau);
            const double psi = k / s2 + tf.scale * std::tan(arg);
            const double phi = kt * (k * tau / s2 - std::log(std::cos(arg) / std::cos(tf.phase0)) / tf.a);
            return {phi, psi};
        }
    }
    const T h = std::sqrt(h2);
    const T p = w_zero ? T{0.0} : 2.0 * w / (k + h);
    const T qh = detail::decay_integral(h, tau);
    const T x = s2 * (p - u) * qh / 2.0;
    const T denom = 1.0 + x;
    if constexpr (!detail::is_complex_v<T>) {
        if (denom <= 0.0) detail::throw_explosion(f, u, w, tau);
    } else {
        if (std::abs(denom) < 1e-300) throw ExplosionError("complex affine transform hits a pole", tau);
    }
    const T e = std::exp(-h * tau);
    const T psi = p - (p - u) * e / denom;
    const T phi = kt * (p * tau - (p - u) * qh * detail::log1p_ratio(x));
    if constexpr (detail::is_complex_v<T>) {
        if (!std::isfinite(phi.real()) || !std::isfinite(phi.imag()) || !std::isfinite(psi.real()) ||
            !std::isfinite(psi.imag()))
            throw ExplosionError("complex affine transform is not finite", tau);
    }
    return {phi, psi};
}

namespace detail {

template <class T>
FactorSensitivity sensitivity_impl(const CirFactor& f, double tau, T u, T w) {
    const double kt = f.kappa * f.theta;
    const double s2 = f.sigma * f.sigma;
    const T h = f.sigma < sigma_degenerate ? T{f.kappa} : std::sqrt(T{f.kappa * f.kappa} - 2.0 * s2 * w);
    const T p = std::abs(w) < w_degenerate ? T{0.0} : 2.0 * w / (f.kappa + h);
    const T qh = decay_integral(h, tau);
    const T a = f.sigma < sigma_degenerate ? T{0.0} : T{s2 * 0.5} * qh;
    const T den = 1.0 + a * (p - u);
    const T e = std::exp(-h * tau);
    FactorSensitivity s;
    s.dpsi = std::real(e / (den * den));
    s.d2psi = std::real(2.0 * a * e / (den * den * den));
    s.dphi = std::real(kt * qh / den);
    s.d2phi = std::real(kt * qh * a / (den * den));
    return s;
}

}  // namespace detail

/// Real transform plus first and second derivatives with respect to the terminal loading u.
inline FactorSensitivity transform_sensitivity(const CirFactor& f, double tau, double u, double w) {
    const auto base = transform_factor<double>(f, tau, u, w);
    FactorSensitivity s;
    if (tau == 0.0) {
        s.dpsi = 1.0;
    } else if (f.sigma >= sigma_degenerate && f.kappa * f.kappa - 2.0 * f.sigma * f.sigma * w < 0.0) {
        s = detail::sensitivity_impl<std::complex<double>>(f, tau, u, w);
    } else {
        s = detail::sensitivity_impl<double>(f, tau, u, w);
    }
    s.phi = base.phi;
    s.psi = base.psi;
    return s;
}

namespace detail {

template <class T>
TransformCoeffs<T> riccati_impl(const FactorSet& factors, double tau, std::span<const T> u, T v,
                                std::span<const double> gamma) {
    if (u.size() != factors.size() || gamma.size() != factors.size())
        throw DimensionError("transform: u and gamma must have one entry per factor");
    if (!(tau >= 0.0)) throw DomainError("transform: horizon must be nonnegative");
    TransformCoeffs<T> out;
    out.phi = T{0.0};
    out.psi.resize(factors.size());
    for (std::size_t i = 0; i < factors.size(); ++i) {
        const auto r = transform_factor<T>(factors[i], tau, u[i], v * gamma[i]);
        out.phi += r.phi;
        out.psi[i] = r.psi;
    }
    return out;
}

}  // namespace detail

/// (Phi, Psi) of E[exp(v * int_0^tau <gamma, X> + <u, X_tau>)] = exp(Phi + <Psi, x0>).
inline TransformCoeffs<double> riccati_transform(const FactorSet& factors, double tau, std::span<const double> u,
                                                 double v, std::span<const double> gamma) {
    return detail::riccati_impl<double>(factors, tau, u, v, gamma);
}

inline TransformCoeffs<std::complex<double>> riccati_transform(const FactorSet& factors, double tau,
                                                               std::span<const std::complex<double>> u,
                                                               std::complex<double> v,
                                                               std::span<const double> gamma) {
    return detail::riccati_impl<std::complex<double>>(factors, tau, u, v, gamma);
}

template <class T>
T affine_exponent(const TransformCoeffs<T>& c, std::span<const double> x) {
    if (x.size() != c.psi.size()) throw DimensionError("state vector length differs from factor count");
    T s = c.phi;
    for (std::size_t i = 0; i < x.size(); ++i) s += c.psi[i] * x[i];
    return s;
}

/// E[exp(int_0^tau <gamma, X> + <u, X_tau>) | X_0 = x0].
inline double extended_expectation(const FactorSet& factors, std::span<const double> x0, double tau,
                                   std::span<const double> gamma, std::span<const double> u) {
    return std::exp(affine_exponent(riccati_transform(factors, tau, u, 1.0, gamma), x0));
}

}  // namespace rollover
