#pragma once

// Derivative-free global optimizers over box constraints. Both are deterministic functions of
// (objective, bounds, config); population evaluations may run on several workers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include "rollover/errors.hpp"

namespace rollover {

using Objective = std::function<double(std::span<const double>)>;

/// Indices of one CIR factor inside a parameter vector, for the Feller penalty.
struct FellerTriple {
    std::size_t kappa{};
    std::size_t theta{};
    std::size_t sigma{};
};

struct Bounds {
    std::vector<double> lo;
    std::vector<double> hi;
    std::vector<FellerTriple> feller;  // empty: no Feller penalty
    double feller_weight = 1e6;

    Bounds() = default;
    Bounds(std::vector<double> lower, std::vector<double> upper) : lo(std::move(lower)), hi(std::move(upper)) {
        validate();
    }

    void validate() const {
        if (lo.size() != hi.size() || lo.empty()) throw DimensionError("bounds: lo and hi must be non-empty and equal length");
        for (std::size_t i = 0; i < lo.size(); ++i)
            if (!(lo[i] < hi[i])) throw DomainError("bounds: lo must be below hi in every coordinate");
    }

    [[nodiscard]] std::size_t dim() const { return lo.size(); }

    void add(double lower, double upper) {
        lo.push_back(lower);
        hi.push_back(upper);
    }

    [[nodiscard]] double feller_penalty(std::span<const double> x) const {
        double p = 0.0;
        for (const auto& t : feller) {
            const double gap = std::max(0.0, x[t.sigma] * x[t.sigma] - 2.0 * x[t.kappa] * x[t.theta]);
            p += gap * gap;
        }
        return feller_weight * p;
    }

    [[nodiscard]] bool feller_active(std::span<const double> x) const { return feller_penalty(x) > 0.0; }
};

struct OptimResult {
    std::vector<double> x;
    double f = std::numeric_limits<double>::infinity();
    std::size_t iterations{};
    std::size_t evaluations{};
    std::vector<double> trace;  // best objective after each iteration
};

namespace detail {

/// Objective plus Feller penalty; non-finite values become +inf.
inline double penalized(const Objective& f, const Bounds& b, std::span<const double> x) {
    double v;
    try {
        v = f(x);
    } catch (const Error&) {
        v = std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
    return v + b.feller_penalty(x);
}

inline void evaluate_batch(const Objective& f, const Bounds& b, const std::vector<std::vector<double>>& xs,
                           std::vector<double>& out, unsigned workers) {
    out.resize(xs.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < xs.size(); ++i) out[i] = penalized(f, b, xs[i]);
        return;
    }
    tbb::task_arena arena(static_cast<int>(workers));
    arena.execute([&] {
        tbb::parallel_for(std::size_t{0}, xs.size(), [&](std::size_t i) { out[i] = penalized(f, b, xs[i]); });
    });
}

}  // namespace detail

struct DeConfig {
    std::size_t pop = 0;  // 0: 15 * dim
    double F = 0.7;
    double CR = 0.9;
    std::size_t max_iter = 1000;
    double tol = 0.0;  // stop once the best objective is below tol
    std::uint64_t seed = 1;
    unsigned workers = 1;
    std::vector<std::vector<double>> initial;  // members placed first in the initial population
};

/// DE/rand/1/bin. Trials are generated single-threaded, evaluated as a batch, then selected.
inline OptimResult differential_evolution(const Objective& f, const Bounds& bounds, const DeConfig& cfg) {
    bounds.validate();
    const std::size_t d = bounds.dim();
    const std::size_t np = cfg.pop == 0 ? 15 * d : cfg.pop;
    if (np < 4) throw DomainError("differential evolution needs a population of at least 4");
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<std::vector<double>> pop(np, std::vector<double>(d));
    for (std::size_t i = 0; i < np; ++i) {
        for (std::size_t k = 0; k < d; ++k) pop[i][k] = bounds.lo[k] + unif(rng) * (bounds.hi[k] - bounds.lo[k]);
        if (i < cfg.initial.size()) {
            if (cfg.initial[i].size() != d) throw DimensionError("initial member has the wrong dimension");
            for (std::size_t k = 0; k < d; ++k) pop[i][k] = std::clamp(cfg.initial[i][k], bounds.lo[k], bounds.hi[k]);
        }
    }
    std::vector<double> fit;
    detail::evaluate_batch(f, bounds, pop, fit, cfg.workers);
    OptimResult res;
    res.evaluations = np;
    auto best = static_cast<std::size_t>(std::min_element(fit.begin(), fit.end()) - fit.begin());

    std::vector<std::vector<double>> trials(np, std::vector<double>(d));
    std::vector<double> trial_fit;
    std::uniform_int_distribution<std::size_t> pick(0, np - 1);
    std::uniform_int_distribution<std::size_t> pick_dim(0, d - 1);
    for (std::size_t gen = 0; gen < cfg.max_iter && !(fit[best] < cfg.tol); ++gen) {
        for (std::size_t i = 0; i < np; ++i) {
            std::size_t r1, r2, r3;
            do r1 = pick(rng); while (r1 == i);
            do r2 = pick(rng); while (r2 == i || r2 == r1);
            do r3 = pick(rng); while (r3 == i || r3 == r1 || r3 == r2);
            const std::size_t forced = pick_dim(rng);
            for (std::size_t k = 0; k < d; ++k) {
                double v = pop[i][k];
                if (k == forced || unif(rng) < cfg.CR) {
                    v = pop[r1][k] + cfg.F * (pop[r2][k] - pop[r3][k]);
                    // pull back halfway between the base vector and the violated bound
                    if (v < bounds.lo[k]) v = 0.5 * (bounds.lo[k] + pop[r1][k]);
                    if (v > bounds.hi[k]) v = 0.5 * (bounds.hi[k] + pop[r1][k]);
                }
                trials[i][k] = v;
            }
        }
        detail::evaluate_batch(f, bounds, trials, trial_fit, cfg.workers);
        res.evaluations += np;
        for (std::size_t i = 0; i < np; ++i) {
            if (trial_fit[i] < fit[i]) {
                pop[i] = trials[i];
                fit[i] = trial_fit[i];
                if (fit[i] < fit[best]) best = i;
            }
        }
        res.trace.push_back(fit[best]);
        res.iterations = gen + 1;
    }
    res.x = pop[best];
    res.f = fit[best];
    return res;
}

struct AsaConfig {
    double T0 = 1.0;                            // initial parameter temperature
    double temperature_ratio_scale = 1e-5;      // Ingber's defaults
    double temperature_anneal_scale = 100.0;
    double cost_parameter_scale_ratio = 1.0;
    std::size_t acceptances_to_reanneal = 100;
    std::size_t max_evals = 50000;
    double tol = 0.0;
    std::uint64_t seed = 1;
    std::vector<double> start;  // empty: centre of the box
};

/// Adaptive simulated annealing with per-dimension temperatures and periodic re-annealing.
inline OptimResult adaptive_simulated_annealing(const Objective& f, const Bounds& bounds, const AsaConfig& cfg) {
    bounds.validate();
    const std::size_t d = bounds.dim();
    const double dd = static_cast<double>(d);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double m = -std::log(cfg.temperature_ratio_scale);
    const double n = std::log(cfg.temperature_anneal_scale);
    const double c_par = m * std::exp(-n / dd);
    const double c_cost = c_par * cfg.cost_parameter_scale_ratio;

    std::vector<double> x(d);
    for (std::size_t k = 0; k < d; ++k)
        x[k] = cfg.start.empty() ? 0.5 * (bounds.lo[k] + bounds.hi[k]) : std::clamp(cfg.start[k], bounds.lo[k], bounds.hi[k]);
    double fx = detail::penalized(f, bounds, x);
    OptimResult res;
    res.evaluations = 1;
    res.x = x;
    res.f = fx;

    std::vector<double> temp(d, cfg.T0);
    std::vector<double> k_par(d, 0.0);
    double cost_T0 = std::isfinite(fx) ? std::max(std::abs(fx), 1e-12) : 1.0;
    double cost_T = cost_T0;
    double k_cost = 0.0;
    std::size_t accepted = 0;
    std::vector<double> y(d);

    while (res.evaluations < cfg.max_evals && !(res.f < cfg.tol)) {
        for (std::size_t k = 0; k < d; ++k) {
            const double width = bounds.hi[k] - bounds.lo[k];
            double cand;
            int tries = 0;
            do {
                const double u = unif(rng);
                const double sgn = u < 0.5 ? -1.0 : 1.0;
                const double step = sgn * temp[k] * (std::pow(1.0 + 1.0 / temp[k], std::abs(2.0 * u - 1.0)) - 1.0);
                cand = x[k] + step * width;
            } while ((cand < bounds.lo[k] || cand > bounds.hi[k]) && ++tries < 100);
            y[k] = std::clamp(cand, bounds.lo[k], bounds.hi[k]);
        }
        const double fy = detail::penalized(f, bounds, y);
        ++res.evaluations;
        const double delta = fy - fx;
        const bool accept = std::isfinite(fy) &&
                            (delta <= 0.0 || unif(rng) < 1.0 / (1.0 + std::exp(std::min(delta / cost_T, 700.0))));
        if (accept) {
            x = y;
            fx = fy;
            ++accepted;
            if (fx < res.f) {
                res.f = fx;
                res.x = x;
            }
        }
        // annealing schedules
        for (std::size_t k = 0; k < d; ++k) {
            k_par[k] += 1.0;
            temp[k] = cfg.T0 * std::exp(-c_par * std::pow(k_par[k], 1.0 / dd));
        }
        k_cost += 1.0;
        cost_T = cost_T0 * std::exp(-c_cost * std::pow(k_cost, 1.0 / dd));

        if (accept && accepted % cfg.acceptances_to_reanneal == 0) {
            // re-anneal: rescale temperatures by the sensitivities at the best point
            std::vector<double> sens(d);
            double smax = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                auto probe = res.x;
                const double h = 1e-6 * (bounds.hi[k] - bounds.lo[k]);
                probe[k] = probe[k] + h <= bounds.hi[k] ? probe[k] + h : probe[k] - h;
                const double fp = detail::penalized(f, bounds, probe);
                ++res.evaluations;
                sens[k] = std::isfinite(fp) ? std::abs(fp - res.f) / h : 0.0;
                smax = std::max(smax, sens[k]);
            }
            if (smax > 0.0) {
                for (std::size_t k = 0; k < d; ++k) {
                    if (sens[k] <= 0.0) continue;
                    const double t_new = std::min(temp[k] * smax / sens[k], cfg.T0);
                    temp[k] = t_new;
                    k_par[k] = std::pow(std::log(cfg.T0 / t_new) / c_par, dd);
                }
            }
            cost_T0 = std::max(std::abs(fx), 1e-300);
            k_cost = std::pow(std::log(cost_T0 / std::max(cost_T, 1e-300)) / c_cost, dd);
            if (!std::isfinite(k_cost) || k_cost < 0.0) k_cost = 0.0;
            x = res.x;
            fx = res.f;
        }
        ++res.iterations;
        res.trace.push_back(res.f);
    }
    return res;
}

}  // namespace rollover
