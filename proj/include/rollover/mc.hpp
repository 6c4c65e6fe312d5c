#pragma once

// Monte Carlo oracle for the analytic expectations. Paths are simulated on a uniform grid;
// each path owns an RNG stream derived from (seed, path index), so estimates do not depend on
// how paths are split across workers.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <boost/random/non_central_chi_squared_distribution.hpp>
#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include "rollover/affine.hpp"
#include "rollover/credit.hpp"
#include "rollover/curve.hpp"
#include "rollover/errors.hpp"
#include "rollover/model.hpp"

namespace rollover {

enum class CirScheme { exact, euler };

struct McConfig {
    std::size_t n_paths = 100000;
    int steps_per_year = 120;
    std::uint64_t seed = 20130101;
    CirScheme scheme = CirScheme::exact;
    unsigned workers = 1;

    static constexpr std::size_t min_paths = 1000;

    void validate() const {
        if (n_paths < min_paths)
            throw ConfigError("Monte Carlo needs at least " + std::to_string(min_paths) + " paths");
        if (steps_per_year < 1) throw ConfigError("Monte Carlo needs at least one step per year");
        if (workers < 1) throw ConfigError("Monte Carlo needs at least one worker");
    }

    [[nodiscard]] std::size_t grid_index(double t) const {
        const double k = t * steps_per_year;
        const double r = std::round(k);
        if (t < 0.0 || std::abs(k - r) > 1e-7)
            throw SpecError("time " + std::to_string(t) + " is not on the simulation grid");
        return static_cast<std::size_t>(r);
    }
};

struct McEstimate {
    double estimate{};
    double std_error{};
};

namespace detail {

inline std::mt19937_64 path_rng(std::uint64_t seed, std::size_t path) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(std::uint64_t(path) >> 32)};
    return std::mt19937_64(seq);
}

/// Advances one CIR factor by dt; returns the new (possibly negative in Euler mode) state.
class CirStepper {
public:
    CirStepper(const CirFactor& f, double dt, CirScheme scheme) : f_(f), dt_(dt), scheme_(scheme) {
        decay_ = std::exp(-f.kappa * dt);
        if (f.sigma >= sigma_degenerate) {
            scale_ = f.sigma * f.sigma * (1.0 - decay_) / (4.0 * f.kappa);
            dof_ = 4.0 * f.kappa * f.theta / (f.sigma * f.sigma);
        }
    }

    template <class Rng>
    double operator()(double y, Rng& rng) const {
        if (f_.sigma < sigma_degenerate) return f_.theta + (y - f_.theta) * decay_;
        if (scheme_ == CirScheme::exact) {
            boost::random::non_central_chi_squared_distribution<double> chi(dof_, std::max(y, 0.0) * decay_ / scale_);
            return scale_ * chi(rng);
        }
        const double pos = std::max(y, 0.0);
        std::normal_distribution<double> normal;
        return y + f_.kappa * (f_.theta - pos) * dt_ + f_.sigma * std::sqrt(pos * dt_) * normal(rng);
    }

private:
    CirFactor f_;
    double dt_;
    CirScheme scheme_;
    double decay_{};
    double scale_{};
    double dof_{};
};

/// Kahan-compensated mean and standard error of values taken in index order.
inline McEstimate summarize(std::span<const double> values) {
    const auto n = static_cast<double>(values.size());
    double sum = 0.0;
    double comp = 0.0;
    for (double v : values) {
        const double y = v - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    const double mean = sum / n;
    double ss = 0.0;
    comp = 0.0;
    for (double v : values) {
        const double y = (v - mean) * (v - mean) - comp;
        const double t = ss + y;
        comp = (t - ss) - y;
        ss = t;
    }
    const double var = values.size() > 1 ? ss / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var / n)};
}

/// Runs body(path, rng) for every path on the configured number of workers.
template <class Body>
void for_each_path(const McConfig& cfg, Body&& body) {
    tbb::task_arena arena(static_cast<int>(cfg.workers));
    arena.execute([&] {
        tbb::parallel_for(tbb::blocked_range<std::size_t>(0, cfg.n_paths, 256),
                          [&](const tbb::blocked_range<std::size_t>& r) {
                              for (std::size_t p = r.begin(); p < r.end(); ++p) {
                                  auto rng = path_rng(cfg.seed, p);
                                  body(p, rng);
                              }
                          });
    });
}

}  // namespace detail

/// Terminal values and trapezoidal integrals of one simulated CIR factor.
struct CirSample {
    std::vector<double> terminal;
    std::vector<double> integral;
    std::size_t steps{};
    bool nonnegative = true;
};

inline CirSample simulate_cir(const CirFactor& f, double horizon, const McConfig& cfg) {
    cfg.validate();
    const std::size_t steps = cfg.grid_index(horizon);
    const double dt = horizon / static_cast<double>(std::max<std::size_t>(steps, 1));
    const detail::CirStepper stepper(f, dt, cfg.scheme);
    CirSample out;
    out.steps = steps;
    out.terminal.resize(cfg.n_paths);
    out.integral.resize(cfg.n_paths);
    std::vector<char> negative(cfg.n_paths, 0);
    detail::for_each_path(cfg, [&](std::size_t p, std::mt19937_64& rng) {
        double y = f.y0;
        double integral = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
            const double next = stepper(y, rng);
            integral += 0.5 * (std::max(y, 0.0) + std::max(next, 0.0)) * dt;
            if (cfg.scheme == CirScheme::exact && next < 0.0) negative[p] = 1;
            y = next;
        }
        out.terminal[p] = std::max(y, 0.0);
        out.integral[p] = integral;
    });
    for (char c : negative) out.nonnegative = out.nonnegative && c == 0;
    return out;
}

enum class McKind {
    ois_discount,      // E[exp(-int_0^T1 r_c)]
    funding_growth,    // E[exp(int_0^T1 phi)]
    risky_discount,    // E[exp(-int_0^T1 (r_c + q lambda))]
    rollover_forward,  // E[exp(-int_0^T1 (r_c + q lambda)) exp(int_T1^T2 phi)]
    libor_leg,         // E[exp(-int_0^T2 r_c) delta L(T1, T2)]
    survival,          // E[exp(-int_0^T1 (r_c + lambda_j))]
    caplet_payoff,     // E[exp(-int_0^T2 r_c) K delta (L(T1, T2) - R)^+]
    char_fn_re,        // E[exp(-int_0^T2 r_c) cos(u Z)]
    char_fn_im,        // E[exp(-int_0^T2 r_c) sin(u Z)]
};

struct McExpression {
    McKind kind{};
    double T1{};
    double T2{};
    double strike{};
    double notional = 1.0;
    double u{};
    std::optional<BankCredit> bank{};
};

namespace detail {

struct PreparedExpression {
    McExpression expr;
    std::size_t i1{};
    std::size_t i2{};
    std::vector<double> weights;  // loading applied to the integral
    double shift_log{};           // deterministic part of the exponent
    // conditional LIBOR pieces at T1
    std::vector<double> growth_psi;
    std::vector<double> risky_psi;
    std::vector<double> funding_weights;
    double growth_log{};
    double risky_log{};
    double funding_log{};
};

inline PreparedExpression prepare(const ModelSpec& m, const McExpression& e, const McConfig& cfg) {
    PreparedExpression p;
    p.expr = e;
    const auto d = m.dim();
    p.i1 = cfg.grid_index(e.T1);
    const bool two_times = e.kind == McKind::rollover_forward || e.kind == McKind::libor_leg ||
                           e.kind == McKind::caplet_payoff || e.kind == McKind::char_fn_re ||
                           e.kind == McKind::char_fn_im;
    p.i2 = two_times ? cfg.grid_index(e.T2) : p.i1;
    if (two_times && !(e.T2 >= e.T1)) throw SpecError("expression needs T1 <= T2");
    p.weights.assign(d, 0.0);
    switch (e.kind) {
    case McKind::ois_discount:
        for (std::size_t i = 0; i < d; ++i) p.weights[i] = -m.rc.loading[i];
        p.shift_log = -m.rc.shift.integral(0.0, e.T1);
        break;
    case McKind::funding_growth:
        p.weights = m.phi.loading;
        p.shift_log = m.phi.shift.integral(0.0, e.T1);
        break;
    case McKind::risky_discount:
        p.weights = m.gamma_risky();
        p.shift_log = -m.risky_shift_integral(0.0, e.T1);
        break;
    case McKind::rollover_forward:
        p.weights = m.gamma_risky();
        p.shift_log = -m.risky_shift_integral(0.0, e.T1) + m.phi.shift.integral(e.T1, e.T2);
        p.funding_weights = m.phi.loading;
        break;
    case McKind::survival:
        if (!e.bank) throw SpecError("survival expression needs a bank");
        p.weights = detail::survival_gamma(m, *e.bank);
        p.shift_log = -m.rc.shift.integral(0.0, e.T1) - e.bank->shift.integral(0.0, e.T1);
        break;
    case McKind::libor_leg:
    case McKind::caplet_payoff:
    case McKind::char_fn_re:
    case McKind::char_fn_im: {
        if (!(e.T2 > e.T1)) throw SpecError("LIBOR expression needs T1 < T2");
        for (std::size_t i = 0; i < d; ++i) p.weights[i] = -m.rc.loading[i];
        p.shift_log = -m.rc.shift.integral(0.0, e.T2);
        const PeriodTransforms pt(m, e.T2 - e.T1);
        p.growth_psi = pt.funding.psi;
        p.risky_psi = pt.risky.psi;
        p.growth_log = m.phi.shift.integral(e.T1, e.T2) + pt.funding.phi;
        p.risky_log = -m.risky_shift_integral(e.T1, e.T2) + pt.risky.phi;
        break;
    }
    default:
        throw SpecError("unknown Monte Carlo expression");
    }
    return p;
}

}  // namespace detail

/// Estimates every expression on one shared set of paths of the model factors.
inline std::vector<McEstimate> mc_expectations(const ModelSpec& m, std::span<const McExpression> exprs,
                                               const McConfig& cfg) {
    cfg.validate();
    m.validate();
    std::vector<detail::PreparedExpression> prepared;
    std::size_t steps = 0;
    for (const auto& e : exprs) {
        prepared.push_back(detail::prepare(m, e, cfg));
        steps = std::max({steps, prepared.back().i1, prepared.back().i2});
    }
    const auto d = m.dim();
    const double dt = 1.0 / cfg.steps_per_year;
    std::vector<detail::CirStepper> steppers;
    for (const auto& f : m.factors) steppers.emplace_back(f, dt, cfg.scheme);

    const std::size_t n_expr = prepared.size();
    std::vector<double> values(cfg.n_paths * n_expr);
    detail::for_each_path(cfg, [&](std::size_t path, std::mt19937_64& rng) {
        // state[i][k] and integral[i][k] on the grid
        std::vector<double> state(d * (steps + 1));
        std::vector<double> integral(d * (steps + 1));
        for (std::size_t i = 0; i < d; ++i) {
            double* y = &state[i * (steps + 1)];
            double* in = &integral[i * (steps + 1)];
            double raw = m.factors[i].y0;
            y[0] = raw;
            in[0] = 0.0;
            for (std::size_t k = 0; k < steps; ++k) {
                raw = steppers[i](raw, rng);
                y[k + 1] = std::max(raw, 0.0);
                in[k + 1] = in[k] + 0.5 * (y[k] + y[k + 1]) * dt;
            }
        }
        const auto at = [&](const std::vector<double>& a, std::size_t i, std::size_t k) { return a[i * (steps + 1) + k]; };
        for (std::size_t j = 0; j < n_expr; ++j) {
            const auto& p = prepared[j];
            const std::size_t horizon = (p.expr.kind == McKind::rollover_forward) ? p.i1 : p.i2;
            double expo = p.shift_log;
            for (std::size_t i = 0; i < d; ++i) expo += p.weights[i] * at(integral, i, horizon);
            double v = 0.0;
            switch (p.expr.kind) {
            case McKind::rollover_forward:
                for (std::size_t i = 0; i < d; ++i)
                    expo += p.funding_weights[i] * (at(integral, i, p.i2) - at(integral, i, p.i1));
                v = std::exp(expo);
                break;
            case McKind::libor_leg:
            case McKind::caplet_payoff:
            case McKind::char_fn_re:
            case McKind::char_fn_im: {
                double g = p.growth_log;
                double r = p.risky_log;
                for (std::size_t i = 0; i < d; ++i) {
                    g += p.growth_psi[i] * at(state, i, p.i1);
                    r += p.risky_psi[i] * at(state, i, p.i1);
                }
                const double delta = p.expr.T2 - p.expr.T1;
                const double accrual_libor = std::exp(g - r) - 1.0;  // delta L
                const double disc = std::exp(expo);
                if (p.expr.kind == McKind::libor_leg) {
                    v = disc * accrual_libor;
                } else if (p.expr.kind == McKind::caplet_payoff) {
                    v = disc * p.expr.notional * std::max(accrual_libor - delta * p.expr.strike, 0.0);
                } else {
                    const double z = (g - r) - std::log1p(delta * p.expr.strike);
                    v = disc * (p.expr.kind == McKind::char_fn_re ? std::cos(p.expr.u * z) : std::sin(p.expr.u * z));
                }
                break;
            }
            default:
                v = std::exp(expo);
            }
            values[path * n_expr + j] = v;
        }
    });

    std::vector<McEstimate> out;
    std::vector<double> column(cfg.n_paths);
    for (std::size_t j = 0; j < n_expr; ++j) {
        for (std::size_t p = 0; p < cfg.n_paths; ++p) column[p] = values[p * n_expr + j];
        out.push_back(detail::summarize(column));
    }
    return out;
}

inline McEstimate mc_expectation(const ModelSpec& m, const McExpression& e, const McConfig& cfg) {
    return mc_expectations(m, std::span<const McExpression>(&e, 1), cfg).front();
}

}  // namespace rollover
