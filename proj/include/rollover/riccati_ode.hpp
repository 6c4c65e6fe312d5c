#pragma once

// Adaptive RK4 (step doubling with Richardson extrapolation) for the Riccati system.
// Used as an independent oracle for the closed forms in affine.hpp.

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "rollover/affine.hpp"
#include "rollover/errors.hpp"

namespace rollover {

namespace detail {

template <class T>
void riccati_rhs(const FactorSet& f, std::span<const T> w, const std::vector<T>& y, std::vector<T>& dy) {
    const std::size_t d = f.size();
    T dphi{0.0};
    for (std::size_t i = 0; i < d; ++i) {
        const double s2 = f[i].sigma * f[i].sigma;
        dy[i] = w[i] - f[i].kappa * y[i] + 0.5 * s2 * y[i] * y[i];
        dphi += f[i].kappa * f[i].theta * y[i];
    }
    dy[d] = dphi;
}

template <class T>
void rk4_step(const FactorSet& f, std::span<const T> w, const std::vector<T>& y, double h, std::vector<T>& out) {
    const std::size_t n = y.size();
    std::vector<T> k1(n), k2(n), k3(n), k4(n), tmp(n);
    riccati_rhs(f, w, y, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    riccati_rhs(f, w, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    riccati_rhs(f, w, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
    riccati_rhs(f, w, tmp, k4);
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

template <class T>
TransformCoeffs<T> riccati_numeric_impl(const FactorSet& f, double tau, std::span<const T> u, T v,
                                        std::span<const double> gamma, double tol) {
    const std::size_t d = f.size();
    if (u.size() != d || gamma.size() != d) throw DimensionError("numeric transform: length mismatch");
    if (!(tau >= 0.0)) throw DomainError("numeric transform: horizon must be nonnegative");
    std::vector<T> w(d);
    for (std::size_t i = 0; i < d; ++i) w[i] = v * gamma[i];
    std::vector<T> y(u.begin(), u.end());
    y.push_back(T{0.0});

    double magnitude = 1e-250;
    for (const auto& c : y) magnitude = std::max(magnitude, std::abs(c));

    double t = 0.0;
    double h = std::min(tau, 0.01);
    const double h_min = 1e-13 * std::max(tau, 1.0);
    std::vector<T> big, half, two;
    long steps = 0;
    while (t < tau) {
        if (++steps > 20'000'000) throw StepFailure("numeric transform: step budget exhausted");
        h = std::min(h, tau - t);
        rk4_step<T>(f, w, y, h, big);
        rk4_step<T>(f, w, y, 0.5 * h, half);
        rk4_step<T>(f, w, half, 0.5 * h, two);
        double err = 0.0;
        bool finite = true;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double scale = std::max({std::abs(two[i]), 1e-3 * magnitude, 1e-250});
            const double e = std::abs(two[i] - big[i]) / 15.0;
            finite = finite && std::isfinite(e);
            err = std::max(err, e / (tol * scale));
        }
        if (!finite) err = 1e300;
        if (err <= 1.0) {
            t = (tau - t - h <= 1e-15 * tau) ? tau : t + h;
            for (std::size_t i = 0; i < y.size(); ++i) {
                y[i] = two[i] + (two[i] - big[i]) / 15.0;
                magnitude = std::max(magnitude, std::abs(y[i]));
            }
            h *= (err == 0.0) ? 4.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 4.0);
        } else {
            h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
            if (h < h_min) throw StepFailure("numeric transform: step size underflow near t = " + std::to_string(t));
        }
    }
    TransformCoeffs<T> out;
    out.phi = y[d];
    out.psi.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(d));
    return out;
}

}  // namespace detail

inline TransformCoeffs<double> riccati_transform_numeric(const FactorSet& factors, double tau,
                                                         std::span<const double> u, double v,
                                                         std::span<const double> gamma, double tol = 1e-12) {
    return detail::riccati_numeric_impl<double>(factors, tau, u, v, gamma, tol);
}

inline TransformCoeffs<std::complex<double>> riccati_transform_numeric(const FactorSet& factors, double tau,
                                                                       std::span<const std::complex<double>> u,
                                                                       std::complex<double> v,
                                                                       std::span<const double> gamma,
                                                                       double tol = 1e-12) {
    return detail::riccati_numeric_impl<std::complex<double>>(factors, tau, u, v, gamma, tol);
}

}  // namespace rollover
