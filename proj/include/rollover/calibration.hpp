#pragma once

// Staged cross-sectional calibration:
//   stage 1   OIS: CIR factors and a0, then exact bootstrap of piecewise a0 on bid and ask
//   stage 2   IRS + basis: loadings b, c and a constant LIBOR shift d0
//   stage 3   monthly piecewise d0 with a smoothness penalty
//   credit    per-bank CDS intensities, panel averaging, then the funding-liquidity split

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rollover/affine.hpp"
#include "rollover/credit.hpp"
#include "rollover/curve.hpp"
#include "rollover/errors.hpp"
#include "rollover/market_data.hpp"
#include "rollover/model.hpp"
#include "rollover/optimize.hpp"
#include "rollover/swaps.hpp"

namespace rollover {

// ---------------------------------------------------------------------------------------------
// Objectives

/// A model price with its market band.
struct BandedPrice {
    std::string label;
    double maturity{};
    double price{};
    double bid{};
    double ask{};
};

/// Signed distance to the band in relative units; zero inside.
inline double band_residual(double price, double bid, double ask) {
    if (price > ask) return (price - ask) / std::abs(ask);
    if (price < bid) return (price - bid) / std::abs(bid);
    return 0.0;
}

inline double hinge_term(double price, double bid, double ask) {
    const double above = std::max((price - ask) / std::abs(ask), 0.0);
    const double below = std::max((bid - price) / std::abs(bid), 0.0);
    const double s = above + below;
    return s * s;
}

enum class ObjectiveMode { bid_ask_hinge, relative_least_squares };

inline double bidask_objective(std::span<const BandedPrice> prices,
                               ObjectiveMode mode = ObjectiveMode::bid_ask_hinge) {
    double total = 0.0;
    for (const auto& p : prices) {
        if (!std::isfinite(p.price)) return std::numeric_limits<double>::infinity();
        if (mode == ObjectiveMode::bid_ask_hinge) {
            total += hinge_term(p.price, p.bid, p.ask);
        } else {
            const double mid = 0.5 * (p.bid + p.ask);
            const double r = (p.price - mid) / std::abs(mid);
            total += r * r;
        }
    }
    return total;
}

inline double smoothness_penalty(std::span<const double> values) {
    double s = 0.0;
    for (std::size_t k = 1; k < values.size(); ++k) s += (values[k] - values[k - 1]) * (values[k] - values[k - 1]);
    return s;
}

// ---------------------------------------------------------------------------------------------
// Configuration

struct Interval {
    double lo{};
    double hi{};
};

struct ParameterBounds {
    Interval y0{1e-6, 1.0};
    Interval theta{1e-6, 1.0};
    Interval kappa{1e-3, 1.0};
    Interval sigma{1e-3, 1.0};
    Interval loading{0.0, 0.05};
    Interval d0{-0.01, 0.05};
    Interval a0{-0.01, 0.05};
    Interval bank_shift{-0.01, 0.05};
    bool feller = true;
};

enum class OptimizerKind { de, asa };

struct CalibrationConfig {
    std::size_t factors = 1;        // stage-1 factor count
    std::size_t basis_factors = 0;  // total factors from stage 2 on; 0 keeps the stage-1 count
    ParameterBounds bounds;
    OptimizerKind optimizer = OptimizerKind::de;
    double de_F = 0.7;
    double de_CR = 0.9;
    std::size_t de_pop = 0;  // 0: 15 * dim
    std::size_t stage1_iter = 1000;
    std::size_t stage2_iter = 200;
    std::size_t stage3_iter = 200;
    std::size_t cds_iter = 40;
    std::size_t asa_evals = 20000;
    double mu = -1.0;  // stage-3 smoothness weight; negative selects the automatic rule
    double mesh_step = 1.0 / 120.0;
    double recovery = 0.4;
    double q = 0.6;
    double Lambda = 5e-4;
    bool bootstrap_strict = false;
    std::uint64_t seed = 1;
    unsigned workers = 1;

    [[nodiscard]] std::size_t total_factors() const { return basis_factors == 0 ? factors : basis_factors; }
};

struct StageReport {
    std::string stage;
    double objective{};
    OptimResult optimizer;
    std::vector<BandedPrice> prices;
    std::vector<std::string> warnings;
};

namespace detail {

/// Runs the configured optimizer; `salt` separates RNG streams between stages.
inline OptimResult run_optimizer(const Objective& f, const Bounds& b, const CalibrationConfig& cfg,
                                 std::size_t iterations, std::uint64_t salt,
                                 std::vector<std::vector<double>> initial = {}) {
    const std::uint64_t seed = cfg.seed * 0x9E3779B97F4A7C15ULL + salt;
    if (cfg.optimizer == OptimizerKind::asa) {
        AsaConfig a;
        a.max_evals = cfg.asa_evals;
        a.seed = seed;
        if (!initial.empty()) a.start = initial.front();
        return adaptive_simulated_annealing(f, b, a);
    }
    DeConfig d;
    d.pop = cfg.de_pop;
    d.F = cfg.de_F;
    d.CR = cfg.de_CR;
    d.max_iter = iterations;
    d.seed = seed;
    d.workers = cfg.workers;
    d.initial = std::move(initial);
    return differential_evolution(f, b, d);
}

inline void add_factor_bounds(Bounds& b, const ParameterBounds& pb) {
    const std::size_t base = b.dim();
    b.add(pb.y0.lo, pb.y0.hi);
    b.add(pb.kappa.lo, pb.kappa.hi);
    b.add(pb.theta.lo, pb.theta.hi);
    b.add(pb.sigma.lo, pb.sigma.hi);
    if (pb.feller) b.feller.push_back({base + 1, base + 2, base + 3});
}

/// Stable per-name RNG stream offset (FNV-1a).
inline std::uint64_t name_salt(const std::string& name) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : name) h = (h ^ ch) * 0x100000001b3ULL;
    return h;
}

inline CirFactor factor_from(std::span<const double> x, std::size_t at) {
    return {x[at + 1], x[at + 2], x[at + 3], x[at]};
}

}  // namespace detail

// ---------------------------------------------------------------------------------------------
// Stage 1: OIS

/// Factor part log E[exp(-int_0^T <a, X>)] at a fixed set of payment dates.
class OisCurveCache {
public:
    OisCurveCache(const ModelSpec& m, std::vector<double> dates) : dates_(std::move(dates)) {
        const auto x = m.spot_state();
        const auto gamma = m.gamma_collateral();
        const std::vector<double> zero(m.dim(), 0.0);
        for (double T : dates_) factor_log_.push_back(affine_exponent(riccati_transform(m.factors, T, zero, 1.0, gamma), x));
    }

    [[nodiscard]] double discount(std::size_t i, const PiecewiseShift& a0) const {
        return std::exp(-a0.integral(0.0, dates_[i]) + factor_log_[i]);
    }

    [[nodiscard]] std::size_t index(double T) const {
        for (std::size_t i = 0; i < dates_.size(); ++i)
            if (std::abs(dates_[i] - T) < 1e-12) return i;
        throw DomainError("OIS cache has no date " + std::to_string(T));
    }

    /// Par rate of the OIS quoted at maturity T (single period to one year, annual beyond).
    [[nodiscard]] double par_rate(double T, const PiecewiseShift& a0) const {
        const auto ts = ois_schedule(T);
        double ann = 0.0;
        for (std::size_t j = 0; j < ts.size(); ++j) ann += ts.accrual(j) * discount(index(ts.dates[j]), a0);
        return (1.0 - discount(index(T), a0)) / ann;
    }

    static std::vector<double> payment_dates(std::span<const double> maturities) {
        std::vector<double> out;
        for (double T : maturities)
            for (double t : ois_schedule(T).dates)
                if (std::none_of(out.begin(), out.end(), [&](double s) { return std::abs(s - t) < 1e-12; }))
                    out.push_back(t);
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    std::vector<double> dates_;
    std::vector<double> factor_log_;
};

struct BootstrapDiagnostics {
    std::vector<double> residuals;  // model par rate minus quote at each knot
    std::vector<std::string> warnings;
};

/// Solves one a0 value per quoted maturity, left to right, so that the model OIS par rate
/// reproduces each quote; bisection on [-1, 1] to 1e-14.
inline PiecewiseShift bootstrap_a0(const ModelSpec& m, std::span<const double> maturities, std::span<const double> rates,
                                   BootstrapDiagnostics* diag = nullptr, bool strict = false) {
    if (maturities.size() != rates.size() || maturities.empty()) throw DimensionError("bootstrap: maturities and rates differ");
    const OisCurveCache cache(m, OisCurveCache::payment_dates(maturities));
    std::vector<double> values(maturities.size(), 0.0);
    auto shift = PiecewiseShift::from_maturities(maturities, values);
    double prev_discount = 1.0;
    for (std::size_t k = 0; k < maturities.size(); ++k) {
        const auto residual = [&](double v) {
            for (std::size_t j = k; j < values.size(); ++j) values[j] = v;
            shift.set_values(values);
            return cache.par_rate(maturities[k], shift) - rates[k];
        };
        double lo = -1.0;
        double hi = 1.0;
        if (residual(lo) > 0.0 || residual(hi) < 0.0)
            throw BootstrapError("bootstrap: no a0 in [-1, 1] reprices the " + std::to_string(maturities[k]) + "y quote");
        while (hi - lo > 1e-14) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            (residual(mid) < 0.0 ? lo : hi) = mid;
        }
        const double r_lo = residual(lo);
        const double r_hi = residual(hi);
        const double v = std::abs(r_lo) <= std::abs(r_hi) ? lo : hi;
        const double r = residual(v);
        if (diag) diag->residuals.push_back(r);
        const double disc = cache.discount(cache.index(maturities[k]), shift);
        if (!(disc < prev_discount)) {
            const std::string msg = "bootstrap: discount factor does not decrease at " + std::to_string(maturities[k]) + "y";
            if (strict) throw BootstrapError(msg);
            if (diag) diag->warnings.push_back(msg);
        }
        prev_discount = disc;
    }
    return shift;
}

struct Stage1Result {
    ModelSpec model;  // mid a0 curve
    PiecewiseShift a0_bid;
    PiecewiseShift a0_ask;
    std::vector<double> maturities;
    std::vector<double> bid_residuals;
    std::vector<double> ask_residuals;
    std::vector<double> mid_residuals;
    StageReport report;
};

/// OIS par rates of a model at the quoted maturities, banded by the quotes.
inline std::vector<BandedPrice> ois_prices(const ModelSpec& m, std::span<const Quote> ois) {
    std::vector<double> mats;
    for (const auto& q : ois) mats.push_back(q.maturity);
    const OisCurveCache cache(m, OisCurveCache::payment_dates(mats));
    std::vector<BandedPrice> out;
    for (const auto& q : ois) out.push_back({"OIS", q.maturity, cache.par_rate(q.maturity, m.rc.shift), q.bid, q.ask});
    return out;
}

inline Stage1Result stage1_ois(const QuoteSet& qs, const CalibrationConfig& cfg) {
    require_quotes(qs, QuoteKind::ois);
    const auto ois = qs.of(QuoteKind::ois);
    const std::size_t d = cfg.factors;
    if (d < 1) throw DimensionError("stage 1 needs at least one factor");
    std::vector<double> mats;
    for (const auto& q : ois) mats.push_back(q.maturity);
    const auto dates = OisCurveCache::payment_dates(mats);

    // (i) global fit of factor dynamics, loading a and a constant a0 on the par-rate bands
    Bounds bounds;
    for (std::size_t i = 0; i < d; ++i) {
        detail::add_factor_bounds(bounds, cfg.bounds);
        bounds.add(cfg.bounds.loading.lo, cfg.bounds.loading.hi);
    }
    bounds.add(cfg.bounds.a0.lo, cfg.bounds.a0.hi);
    const auto build = [&](std::span<const double> x) {
        FactorSet fs;
        std::vector<double> a;
        for (std::size_t i = 0; i < d; ++i) {
            fs.push_back(detail::factor_from(x, 5 * i));
            a.push_back(x[5 * i + 4]);
        }
        auto m = collateral_only_model(std::move(fs), PiecewiseShift(x[5 * d]), std::move(a));
        m.q = cfg.q;
        m.Lambda = cfg.Lambda;
        m.valuation_date = qs.valuation_date;
        return m;
    };
    const Objective objective = [&](std::span<const double> x) {
        const auto m = build(x);
        const OisCurveCache cache(m, dates);
        double total = 0.0;
        for (const auto& q : ois) total += hinge_term(cache.par_rate(q.maturity, m.rc.shift), q.bid, q.ask);
        return total;
    };
    Stage1Result res;
    res.report.stage = "stage1_ois";
    res.report.optimizer = detail::run_optimizer(objective, bounds, cfg, cfg.stage1_iter, 1);
    auto fitted = build(res.report.optimizer.x);

    // (ii) exact bootstrap of a0 on the bid, ask and mid curves. The mid curve is solved on mid
    // quotes rather than averaged from the other two, so it reprices every mid exactly.
    std::vector<double> bids, asks, mids;
    for (const auto& q : ois) {
        bids.push_back(q.bid);
        asks.push_back(q.ask);
        mids.push_back(q.mid());
    }
    BootstrapDiagnostics diag_bid, diag_ask, diag_mid;
    res.a0_bid = bootstrap_a0(fitted, mats, bids, &diag_bid, cfg.bootstrap_strict);
    res.a0_ask = bootstrap_a0(fitted, mats, asks, &diag_ask, cfg.bootstrap_strict);
    fitted.rc.shift = bootstrap_a0(fitted, mats, mids, &diag_mid, cfg.bootstrap_strict);
    res.model = fitted;
    res.maturities = mats;
    res.bid_residuals = diag_bid.residuals;
    res.ask_residuals = diag_ask.residuals;
    res.mid_residuals = diag_mid.residuals;
    for (auto& w : diag_bid.warnings) res.report.warnings.push_back("bid curve: " + w);
    for (auto& w : diag_ask.warnings) res.report.warnings.push_back("ask curve: " + w);
    for (auto& w : diag_mid.warnings) res.report.warnings.push_back("mid curve: " + w);
    res.report.prices = ois_prices(res.model, ois);
    res.report.objective = bidask_objective(res.report.prices);
    return res;
}

// ---------------------------------------------------------------------------------------------
// Swap and basis conditions

/// Per-period LIBOR leg pieces for one tenor out to the longest maturity.
struct TenorLegs {
    double delta{};
    std::vector<double> starts;
    std::vector<double> ends;
    std::vector<LiborLegParts> parts;

    TenorLegs(const ModelSpec& m, double period, double horizon) : delta(period) {
        const auto ts = TenorStructure::regular(0.0, horizon, period);
        const auto x = m.spot_state();
        const PeriodTransforms pt(m, period);
        for (std::size_t j = 0; j < ts.size(); ++j) {
            starts.push_back(ts.previous(j));
            ends.push_back(ts.dates[j]);
            parts.push_back(libor_leg_parts(m, pt, 0.0, ts.previous(j), ts.dates[j], x));
        }
    }

    /// Cumulative floating-leg PV after each period for a given funding shift.
    [[nodiscard]] std::vector<double> cumulative_pv(const PiecewiseShift& c0) const {
        std::vector<double> out(parts.size());
        double acc = 0.0;
        for (std::size_t j = 0; j < parts.size(); ++j) {
            acc += parts[j].pv(c0.integral(starts[j], ends[j]));
            out[j] = acc;
        }
        return out;
    }
};

/// Swap/basis conditions with bands fixed by the OIS curve of a reference model.
class SwapConditionSet {
public:
    SwapConditionSet(const ModelSpec& ois_model, std::vector<SwapCondition> conditions)
        : conditions_(std::move(conditions)) {
        for (const auto& c : conditions_) {
            bands_.push_back(c.band(annuity(ois_model, c.reference.fixed), annuity(ois_model, c.spread_schedule())));
            horizon_ = std::max(horizon_, c.maturity);
            if (std::none_of(tenors_.begin(), tenors_.end(), [&](double t) { return std::abs(t - c.target.delta) < 1e-12; }))
                tenors_.push_back(c.target.delta);
        }
        std::sort(tenors_.begin(), tenors_.end());
    }

    [[nodiscard]] std::size_t size() const { return conditions_.size(); }
    [[nodiscard]] const std::vector<SwapCondition>& conditions() const { return conditions_; }
    [[nodiscard]] std::pair<double, double> band(std::size_t i) const { return bands_[i]; }

    [[nodiscard]] std::vector<TenorLegs> legs(const ModelSpec& m) const {
        std::vector<TenorLegs> out;
        for (double t : tenors_) out.emplace_back(m, t, horizon_);
        return out;
    }

    /// Model floating-leg PV of every condition.
    [[nodiscard]] std::vector<double> leg_pvs(const std::vector<TenorLegs>& legs, const PiecewiseShift& c0) const {
        std::vector<std::vector<double>> cum;
        for (const auto& l : legs) cum.push_back(l.cumulative_pv(c0));
        std::vector<double> out;
        for (const auto& c : conditions_) {
            std::size_t k = 0;
            while (std::abs(legs[k].delta - c.target.delta) > 1e-12) ++k;
            out.push_back(cum[k][c.target.size() - 1]);
        }
        return out;
    }

    [[nodiscard]] std::vector<BandedPrice> prices(std::span<const double> pvs) const {
        std::vector<BandedPrice> out;
        for (std::size_t i = 0; i < conditions_.size(); ++i)
            out.push_back({to_string(conditions_[i].kind), conditions_[i].maturity, pvs[i], bands_[i].first, bands_[i].second});
        return out;
    }

    [[nodiscard]] std::vector<BandedPrice> prices(const ModelSpec& m) const {
        return prices(leg_pvs(legs(m), m.phi.shift));
    }

    [[nodiscard]] double objective(std::span<const double> pvs) const {
        double total = 0.0;
        for (std::size_t i = 0; i < pvs.size(); ++i) {
            if (!std::isfinite(pvs[i])) return std::numeric_limits<double>::infinity();
            total += hinge_term(pvs[i], bands_[i].first, bands_[i].second);
        }
        return total;
    }

private:
    std::vector<SwapCondition> conditions_;
    std::vector<std::pair<double, double>> bands_;
    std::vector<double> tenors_;
    double horizon_ = 0.0;
};

struct SwapStageResult {
    ModelSpec model;
    StageReport report;
    double mu = 0.0;
    double penalty = 0.0;
};

namespace detail {

/// Fits loadings (b optional, c always), a constant funding shift and any added factors.
/// b0 stays as in the base model; the constant shift is stored in phi.
inline SwapStageResult fit_swap_loadings(const ModelSpec& base, const SwapConditionSet& set, std::size_t total_factors,
                                         bool fit_credit, const CalibrationConfig& cfg, const std::string& stage,
                                         std::uint64_t salt) {
    const std::size_t d0 = base.dim();
    if (total_factors < d0) throw DimensionError("cannot drop factors in the swap stage");
    const std::size_t added = total_factors - d0;
    const std::size_t D = total_factors;
    Bounds bounds;
    if (fit_credit)
        for (std::size_t i = 0; i < D; ++i) bounds.add(cfg.bounds.loading.lo, cfg.bounds.loading.hi);
    for (std::size_t i = 0; i < D; ++i) bounds.add(cfg.bounds.loading.lo, cfg.bounds.loading.hi);
    bounds.add(cfg.bounds.d0.lo, cfg.bounds.d0.hi);
    const std::size_t factor_at = bounds.dim();
    for (std::size_t i = 0; i < added; ++i) detail::add_factor_bounds(bounds, cfg.bounds);

    const auto build = [&](std::span<const double> x) {
        ModelSpec m = base;
        for (std::size_t i = 0; i < added; ++i) {
            m.factors.push_back(detail::factor_from(x, factor_at + 4 * i));
            m.rc.loading.push_back(0.0);
        }
        std::size_t at = 0;
        if (fit_credit) {
            m.lambda.loading.assign(x.begin(), x.begin() + static_cast<long>(D));
            at = D;
        } else {
            m.lambda.loading.resize(D, 0.0);
        }
        m.phi.loading.assign(x.begin() + static_cast<long>(at), x.begin() + static_cast<long>(at + D));
        m.phi.shift = PiecewiseShift(x[at + D]);
        return m;
    };
    const Objective objective = [&](std::span<const double> x) {
        const auto m = build(x);
        return set.objective(set.leg_pvs(set.legs(m), m.phi.shift));
    };
    SwapStageResult res;
    res.report.stage = stage;
    res.report.optimizer = run_optimizer(objective, bounds, cfg, cfg.stage2_iter, salt);
    res.model = build(res.report.optimizer.x);
    res.report.prices = set.prices(res.model);
    res.report.objective = bidask_objective(res.report.prices);
    return res;
}

inline constexpr double monthly_walk_step = 2e-5;

/// Monthly piecewise funding shift on top of fixed loadings, warm-started from the constant.
inline SwapStageResult fit_monthly_shift(const SwapStageResult& previous, const SwapConditionSet& set, double mu,
                                         const CalibrationConfig& cfg, const std::string& stage, std::uint64_t salt) {
    constexpr std::size_t months = 120;
    std::vector<double> knots(months + 1);
    for (std::size_t k = 0; k <= months; ++k) knots[k] = static_cast<double>(k) / 12.0;
    const auto legs = set.legs(previous.model);
    const double start_value = previous.model.phi.shift(0.0);

    const double hinge_prev = previous.report.objective;
    const double weight = mu >= 0.0 ? mu : hinge_prev / (static_cast<double>(months - 1) * 1e-8);

    // no instrument may end up further outside its band than at the previous stage
    std::vector<double> caps;
    for (const auto& p : previous.report.prices) caps.push_back(hinge_term(p.price, p.bid, p.ask) * (1.0 + 1e-9) + 1e-300);

    Bounds bounds;
    for (std::size_t k = 0; k < months; ++k) bounds.add(cfg.bounds.d0.lo, cfg.bounds.d0.hi);
    const Objective objective = [&](std::span<const double> x) {
        const PiecewiseShift shift(knots, std::vector<double>(x.begin(), x.end()));
        const auto pvs = set.leg_pvs(legs, shift);
        double hinge = 0.0;
        for (std::size_t i = 0; i < pvs.size(); ++i) {
            const auto [bid, ask] = set.band(i);
            const double term = hinge_term(pvs[i], bid, ask);
            if (!(term <= caps[i])) return std::numeric_limits<double>::infinity();
            hinge += term;
        }
        return hinge + weight * smoothness_penalty(x);
    };
    // population seeded around the warm start: smooth random-walk perturbations of a few bp
    std::vector<std::vector<double>> initial{std::vector<double>(months, start_value)};
    const std::size_t pop = cfg.de_pop == 0 ? 15 * months : cfg.de_pop;
    std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ULL + salt + 0x5EED);
    std::normal_distribution<double> step(0.0, monthly_walk_step);
    while (initial.size() < pop) {
        std::vector<double> member(months);
        double level = 0.0;
        for (std::size_t k = 0; k < months; ++k) {
            level += step(rng);
            member[k] = std::clamp(start_value + level, cfg.bounds.d0.lo, cfg.bounds.d0.hi);
        }
        initial.push_back(std::move(member));
    }
    SwapStageResult res;
    res.report.stage = stage;
    res.mu = weight;
    res.report.optimizer = run_optimizer(objective, bounds, cfg, cfg.stage3_iter, salt, initial);
    res.model = previous.model;
    res.model.phi.shift = PiecewiseShift(knots, res.report.optimizer.x);
    res.penalty = weight * smoothness_penalty(res.report.optimizer.x);
    res.report.prices = set.prices(res.model);
    res.report.objective = bidask_objective(res.report.prices);
    return res;
}

}  // namespace detail

inline SwapConditionSet swap_conditions(const QuoteSet& qs, const ModelSpec& ois_model,
                                        std::vector<std::string>* warnings = nullptr) {
    require_quotes(qs, QuoteKind::irs);
    auto inst = build_instruments(qs);
    if (warnings) warnings->insert(warnings->end(), inst.warnings.begin(), inst.warnings.end());
    return SwapConditionSet(ois_model, std::move(inst.swaps));
}

/// Stage 2: b, c and constant d0 (plus added factors with a = 0 when expanding the factor count).
inline SwapStageResult stage2_basis(const QuoteSet& qs, const Stage1Result& stage1, const CalibrationConfig& cfg) {
    std::vector<std::string> warnings;
    const auto set = swap_conditions(qs, stage1.model, &warnings);
    ModelSpec base = stage1.model;
    base.lambda = zero_projection(base.dim());
    base.phi = zero_projection(base.dim());
    auto res = detail::fit_swap_loadings(base, set, cfg.total_factors(), true, cfg, "stage2_basis", 2);
    res.report.warnings = std::move(warnings);
    return res;
}

/// Stage 3: monthly d0 with penalty mu * sum (d0_{k+1} - d0_k)^2; mu < 0 scales it to the stage-2 objective.
inline SwapStageResult stage3_d0_term_structure(const QuoteSet& qs, const Stage1Result& stage1,
                                                const SwapStageResult& stage2, const CalibrationConfig& cfg) {
    const auto set = swap_conditions(qs, stage1.model);
    return detail::fit_monthly_shift(stage2, set, cfg.mu, cfg, "stage3_d0", 3);
}

// ---------------------------------------------------------------------------------------------
// CDS

/// Survival and default-density pieces on a fixed CDS mesh for one bank loading. Shifts only
/// enter through exponentials, so re-pricing under new b0 knots is cheap.
class CdsCurveEngine {
public:
    CdsCurveEngine(const ModelSpec& m, std::vector<double> loading, double horizon, double recovery, double mesh_step)
        : recovery_(recovery), rc_shift_(m.rc.shift) {
        if (loading.size() != m.dim()) throw DimensionError("bank loading length differs from factor count");
        const BankCredit probe{"", PiecewiseShift(0.0), loading};
        const auto x = m.spot_state();
        schedule_ = TenorStructure::regular(0.0, horizon, 0.25);
        CdsSpec spec{schedule_, recovery, 0.0, mesh_step};
        spec.validate();
        const auto gamma = detail::survival_gamma(m, probe);
        const auto factor_part = [&](double u, double& log_s, double& weight) {
            log_s = 0.0;
            weight = 0.0;
            for (std::size_t i = 0; i < m.dim(); ++i) {
                const auto s = transform_sensitivity(m.factors[i], u, 0.0, gamma[i]);
                log_s += s.phi + s.psi * x[i];
                weight += loading[i] * (s.dphi + s.dpsi * x[i]);
            }
        };
        for (std::size_t k = 0; k < schedule_.size(); ++k) {
            const double begin = schedule_.previous(k);
            const double end = schedule_.dates[k];
            const auto n = static_cast<std::size_t>(std::llround((end - begin) / mesh_step));
            const double step = (end - begin) / static_cast<double>(n);
            Period p{begin, end, step, {}, {}, {}, 0.0};
            for (std::size_t j = 0; j < n; ++j) {
                const double mid = begin + (static_cast<double>(j) + 0.5) * step;
                double ls, w;
                factor_part(mid, ls, w);
                p.mids.push_back(mid);
                p.log_s.push_back(ls);
                p.weight.push_back(w);
            }
            double ls_end, w_end;
            factor_part(end, ls_end, w_end);
            p.log_s_end = ls_end;
            periods_.push_back(std::move(p));
        }
    }

    /// Par spreads at the requested maturities (multiples of 0.25 up to the horizon).
    [[nodiscard]] std::vector<double> par_spreads(const PiecewiseShift& bank_shift, std::span<const double> maturities) const {
        std::vector<double> out;
        double protection = 0.0, annuity = 0.0, accrued = 0.0;
        std::size_t next = 0;
        for (const auto& p : periods_) {
            for (std::size_t j = 0; j < p.mids.size(); ++j) {
                const double t = p.mids[j];
                const double surv = std::exp(-rc_shift_.integral(0.0, t) - bank_shift.integral(0.0, t) + p.log_s[j]);
                const double mass = (bank_shift(t) + p.weight[j]) * surv * p.step;
                protection += mass;
                accrued += (t - p.begin) * mass;
            }
            annuity += (p.end - p.begin) *
                       std::exp(-rc_shift_.integral(0.0, p.end) - bank_shift.integral(0.0, p.end) + p.log_s_end);
            while (next < maturities.size() && std::abs(maturities[next] - p.end) < 1e-9) {
                out.push_back(cds_par_spread(CdsLegs{(1.0 - recovery_) * protection, annuity, accrued}));
                ++next;
            }
        }
        if (out.size() != maturities.size()) throw MeshError("CDS maturities must be increasing quarter multiples");
        return out;
    }

private:
    struct Period {
        double begin, end, step;
        std::vector<double> mids, log_s, weight;
        double log_s_end;
    };
    double recovery_;
    PiecewiseShift rc_shift_;
    TenorStructure schedule_;
    std::vector<Period> periods_;
};

struct BankFit {
    BankCredit credit;
    std::vector<double> maturities;
    std::vector<double> market;
    std::vector<double> model;
    OptimResult optimizer;
    std::vector<std::string> warnings;

    [[nodiscard]] double max_error_bp() const {
        double e = 0.0;
        for (std::size_t k = 0; k < market.size(); ++k) e = std::max(e, std::abs(model[k] - market[k]) * 1e4);
        return e;
    }
};

namespace detail {

/// One shift value per CDS bucket, left to right, each repricing its quote exactly. The search
/// starts at the value giving zero intensity at the spot state.
inline PiecewiseShift bootstrap_bank_shift(const ModelSpec& m, const std::string& name, const std::vector<double>& loading,
                                           std::span<const double> maturities, std::span<const double> market,
                                           double start, const CalibrationConfig& cfg) {
    const auto x = m.spot_state();
    double floor = 0.0;
    for (std::size_t i = 0; i < loading.size(); ++i) floor += loading[i] * x[i];
    const CdsCurveEngine engine(m, loading, maturities.back(), cfg.recovery, cfg.mesh_step);
    std::vector<double> values(maturities.size(), std::max(start, -floor));
    auto shift = PiecewiseShift::from_maturities(maturities, values);
    for (std::size_t k = 0; k < maturities.size(); ++k) {
        const std::span<const double> upto(maturities.data(), k + 1);
        const auto residual = [&](double v) {
            for (std::size_t j = k; j < values.size(); ++j) values[j] = v;
            shift.set_values(values);
            return engine.par_spreads(shift, upto).back() - market[k];
        };
        double lo = -floor;
        double hi = 1.0;
        if (residual(lo) > 0.0)
            throw NegativeIntensity(name + ": the " + std::to_string(maturities[k]) +
                                    "y quote needs a negative intensity at the spot state");
        if (residual(hi) < 0.0) throw BootstrapError(name + ": CDS quote beyond 100% intensity");
        while (hi - lo > 1e-14) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            (residual(mid) < 0.0 ? lo : hi) = mid;
        }
        residual(std::abs(residual(lo)) <= std::abs(residual(hi)) ? lo : hi);
    }
    return shift;
}

}  // namespace detail

/// Fits the loading with a constant shift globally, then bootstraps one shift value per
/// CDS maturity bucket so each quote is repriced exactly.
inline BankFit calibrate_bank_cds(const ModelSpec& m, const std::string& name, std::span<const CdsCondition> quotes,
                                  const CalibrationConfig& cfg) {
    if (quotes.empty()) throw MissingQuote("no CDS quotes for " + name);
    BankFit fit;
    for (const auto& q : quotes) {
        fit.maturities.push_back(q.maturity);
        fit.market.push_back(q.spread);
    }
    for (std::size_t k = 1; k < fit.maturities.size(); ++k)
        if (!(fit.maturities[k] > fit.maturities[k - 1])) throw DomainError("CDS maturities must increase");
    const double horizon = fit.maturities.back();
    const std::size_t d = m.dim();
    const auto x = m.spot_state();

    if (std::all_of(fit.market.begin(), fit.market.end(), [](double s) { return s == 0.0; })) {
        fit.credit = zero_credit(d, name);
        fit.credit.shift = PiecewiseShift::from_maturities(fit.maturities, std::vector<double>(fit.maturities.size(), 0.0));
        fit.model.assign(fit.market.size(), 0.0);
        return fit;
    }

    Bounds bounds;
    for (std::size_t i = 0; i < d; ++i) bounds.add(cfg.bounds.loading.lo, cfg.bounds.loading.hi);
    bounds.add(cfg.bounds.bank_shift.lo, cfg.bounds.bank_shift.hi);
    const Objective objective = [&](std::span<const double> p) {
        const std::vector<double> loading(p.begin(), p.begin() + static_cast<long>(d));
        double floor = 0.0;
        for (std::size_t i = 0; i < d; ++i) floor += loading[i] * x[i];
        if (p[d] + floor < 0.0) return std::numeric_limits<double>::infinity();
        const CdsCurveEngine engine(m, loading, horizon, cfg.recovery, cfg.mesh_step);
        const auto model = engine.par_spreads(PiecewiseShift(p[d]), fit.maturities);
        double total = 0.0;
        for (std::size_t k = 0; k < model.size(); ++k) {
            const double r = (model[k] - fit.market[k]) / std::max(std::abs(fit.market[k]), 1e-6);
            total += r * r;
        }
        return total;
    };
    fit.optimizer = detail::run_optimizer(objective, bounds, cfg, cfg.cds_iter, detail::name_salt(name));
    const std::vector<double> fitted(fit.optimizer.x.begin(), fit.optimizer.x.begin() + static_cast<long>(d));

    // Exact bootstrap; if a bucket would need a negative intensity under the fitted loading,
    // retry with the loading scaled down, ending at a deterministic intensity.
    std::vector<double> loading;
    std::optional<PiecewiseShift> shift;
    std::optional<NegativeIntensity> failure;
    for (const double scale : {1.0, 0.5, 0.25, 0.125, 0.0625, 0.0}) {
        loading = fitted;
        for (auto& b : loading) b *= scale;
        try {
            shift = detail::bootstrap_bank_shift(m, name, loading, fit.maturities, fit.market, fit.optimizer.x[d], cfg);
            if (scale < 1.0) fit.warnings.push_back(name + ": loading scaled by " + std::to_string(scale) +
                                                    " to keep the intensity nonnegative");
            break;
        } catch (const NegativeIntensity& e) {
            failure = e;
        }
    }
    if (!shift) throw *failure;
    const CdsCurveEngine engine(m, loading, horizon, cfg.recovery, cfg.mesh_step);
    fit.credit = {name, *shift, loading};
    fit.credit.check_nonnegative(x);
    fit.model = engine.par_spreads(*shift, fit.maturities);
    return fit;
}

/// Componentwise mean of loadings and pointwise mean of shifts on the union knot grid.
inline BankCredit panel_mean(std::span<const BankCredit> banks) {
    if (banks.empty()) throw EmptyPanel("panel average of an empty bank set");
    const std::size_t d = banks.front().loading.size();
    std::vector<double> grid;
    for (const auto& b : banks) {
        if (b.loading.size() != d) throw DimensionError("panel banks have different factor counts");
        for (double k : b.shift.knots()) grid.push_back(k);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }), grid.end());
    const double n = static_cast<double>(banks.size());
    std::vector<double> values(grid.size() > 1 ? grid.size() - 1 : 1, 0.0);
    std::vector<double> loading(d, 0.0);
    for (const auto& b : banks) {
        for (std::size_t i = 0; i < d; ++i) loading[i] += b.loading[i] / n;
        for (std::size_t k = 0; k < values.size(); ++k) values[k] += b.shift(grid[k]) / n;
    }
    BankCredit out{"panel", grid.size() > 1 ? PiecewiseShift(grid, values) : PiecewiseShift(values[0]), loading};
    return out;
}

/// Panel intensity lambda: mean coefficients with the systemic level Lambda removed from the shift.
inline SpreadProjection panel_average(std::span<const BankCredit> banks, double Lambda) {
    const auto mean = panel_mean(banks);
    std::vector<double> values(mean.shift.values().begin(), mean.shift.values().end());
    for (auto& v : values) v -= Lambda;
    const std::vector<double> knots(mean.shift.knots().begin(), mean.shift.knots().end());
    return {PiecewiseShift(knots, values), mean.loading};
}

/// Funding-liquidity component with credit pinned: loading c and constant c0, then monthly c0.
inline SwapStageResult stage_liquidity(const ModelSpec& model_with_credit, const QuoteSet& qs,
                                       const CalibrationConfig& cfg) {
    std::vector<std::string> warnings;
    const auto set = swap_conditions(qs, model_with_credit, &warnings);
    auto constant = detail::fit_swap_loadings(model_with_credit, set, model_with_credit.dim(), false, cfg,
                                              "liquidity_constant", 5);
    auto res = detail::fit_monthly_shift(constant, set, cfg.mu, cfg, "liquidity", 6);
    res.report.warnings = std::move(warnings);
    return res;
}

struct DecompositionPoint {
    double t{};
    double credit{};     // q * lambda(t, y0)
    double liquidity{};  // phi(t, y0)
};

inline std::vector<DecompositionPoint> spread_decomposition(const ModelSpec& m, std::span<const double> times) {
    const auto x = m.spot_state();
    std::vector<DecompositionPoint> out;
    for (double t : times) out.push_back({t, m.q * m.lambda.at(t, x), m.phi.at(t, x)});
    return out;
}

}  // namespace rollover
