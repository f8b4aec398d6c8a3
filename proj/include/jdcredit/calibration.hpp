#pragma once

// Per firm-day MAPE calibration of the jump-diffusion and diffusion models to a
// CDS term structure, and the panel driver that produces model spreads,
// first differences and calibration errors.

#include <jdcredit/hash.hpp>
#include <jdcredit/optimize.hpp>
#include <jdcredit/parallel.hpp>
#include <jdcredit/pricing.hpp>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/seed_seq.hpp>
#include <boost/random/uniform_01.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <iterator>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace jdcredit {

enum class ModelTag { JumpDiffusion, Diffusion };

[[nodiscard]] constexpr std::string_view to_string(ModelTag m) noexcept
{
    return m == ModelTag::JumpDiffusion ? "jd" : "d";
}

[[nodiscard]] inline ModelTag parse_model_tag(std::string_view s)
{
    if (s == "jd" || s == "jump-diffusion")
        return ModelTag::JumpDiffusion;
    if (s == "d" || s == "diffusion")
        return ModelTag::Diffusion;
    throw Error(ErrorCode::InvalidArgument, "unknown model tag '" + std::string(s) + "'");
}

[[nodiscard]] constexpr std::size_t parameter_count(ModelTag m) noexcept
{
    return m == ModelTag::JumpDiffusion ? 4 : 2;
}

/// Parameter order: leverage, sigma, lambda, eta (the diffusion model uses the first two).
inline constexpr std::array<const char*, 4> kParameterNames{"leverage", "sigma", "lambda", "eta"};

struct ParameterBox {
    std::array<double, 4> lower{1.001, 0.01, 1e-4, 0.1};
    std::array<double, 4> upper{100.0, 1.5, 5.0, 50.0};
};

struct CalibrationOptions {
    double recovery = 0.6;
    double r = 0.02; // used when the panel carries no rate for a date
    std::vector<double> maturities{kCanonicalMaturities.begin(), kCanonicalMaturities.end()};
    ParameterBox box{};
    NelderMeadOptions optimizer{};
    int lhs_samples = 32;
    bool heuristic_start = true;
    bool lhs_start = true;
    bool warm_start = true;
    // Each start first minimizes the root-mean-square relative error, whose
    // smooth valley Nelder-Mead follows much further than the kinked MAPE
    // surface, then refines on MAPE itself.
    bool smooth_presolve = true;
    double presolve_f_tol = 1e-12;
    std::uint64_t seed = 20240101;
    PricingConfig pricing{};
    unsigned workers = 0; // 0: default_workers()
};

struct CalibrationResult {
    std::string firm;
    std::string date;
    ModelTag model = ModelTag::JumpDiffusion;
    double r = 0.0;
    double recovery = 0.6;
    std::vector<double> parameters;    // see kParameterNames
    std::vector<bool> at_bound;        // per parameter, within 1e-9 relative of a box edge
    std::vector<double> model_spreads; // bp, on options.maturities
    double mape = std::numeric_limits<double>::infinity();
    bool converged = false;
    bool unstable = false; // Gaver-Stehfest order check above kGsStabilityThreshold
    int iterations = 0;
    int evaluations = 0;
};

/// Mean absolute percentage error of model against market on a shared grid.
[[nodiscard]] inline double mape(const TermStructure& market, const TermStructure& model)
{
    require(!market.points.empty() && market.points.size() == model.points.size(), ErrorCode::GridMismatch,
            "market and model grids differ in size");
    double sum = 0.0;
    for (std::size_t i = 0; i < market.points.size(); ++i) {
        require(market.points[i].maturity == model.points[i].maturity, ErrorCode::GridMismatch,
                "market and model maturities differ");
        require(market.points[i].spread_bp > 0.0, ErrorCode::InvalidArgument, "market spreads must be positive");
        sum += std::abs(market.points[i].spread_bp - model.points[i].spread_bp) / market.points[i].spread_bp;
    }
    return sum / static_cast<double>(market.points.size());
}

[[nodiscard]] inline JumpDiffusionParams to_jump_params(const std::vector<double>& x, double r)
{
    require(x.size() == 4, ErrorCode::InvalidArgument, "jump-diffusion parameters need four values");
    return {.r = r, .sigma = x[1], .lambda = x[2], .eta = x[3], .leverage = x[0]};
}

[[nodiscard]] inline DiffusionParams to_diffusion_params(const std::vector<double>& x, double r)
{
    require(x.size() >= 2, ErrorCode::InvalidArgument, "diffusion parameters need two values");
    return {r, x[1], x[0]};
}

/// Model spreads in bp on the given grid.
[[nodiscard]] inline std::vector<double> model_spreads(ModelTag model, const std::vector<double>& x, double r,
                                                       double recovery, std::span<const double> maturities,
                                                       const PricingConfig& pricing = {})
{
    const TermStructure ts = model == ModelTag::JumpDiffusion
        ? price_term_structure(to_jump_params(x, r), recovery, maturities, pricing)
        : price_term_structure(to_diffusion_params(x, r), recovery, maturities);
    std::vector<double> out;
    out.reserve(ts.points.size());
    for (const auto& pt : ts.points)
        out.push_back(pt.spread_bp);
    return out;
}

namespace detail {

inline void check_grid(const TermStructure& market, std::span<const double> maturities)
{
    require(market.points.size() == maturities.size(), ErrorCode::GridMismatch,
            market.firm + " " + market.date + ": expected " + std::to_string(maturities.size()) + " maturities, got "
                + std::to_string(market.points.size()));
    for (std::size_t i = 0; i < maturities.size(); ++i)
        require(std::abs(market.points[i].maturity - maturities[i]) <= 1e-9, ErrorCode::GridMismatch,
                market.firm + " " + market.date + ": maturity " + std::to_string(market.points[i].maturity)
                    + " off the calibration grid");
}

inline double mspe_values(const TermStructure& market, const std::vector<double>& model)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) {
        const double e = (market.points[i].spread_bp - model[i]) / market.points[i].spread_bp;
        sum += e * e;
    }
    return std::sqrt(sum / static_cast<double>(model.size()));
}

inline double mape_values(const TermStructure& market, const std::vector<double>& model)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i)
        sum += std::abs(market.points[i].spread_bp - model[i]) / market.points[i].spread_bp;
    return sum / static_cast<double>(model.size());
}

/// Heuristic start: sigma from the long-end level, leverage from the short/long ratio.
inline std::vector<double> heuristic_start(const TermStructure& market, ModelTag model, double recovery)
{
    const double s_short = market.points.front().spread_bp / kBasisPoints;
    const double s_long = market.points.back().spread_bp / kBasisPoints;
    const double hazard = s_long / std::max(1.0 - recovery, 0.05);
    const double sigma = std::clamp(0.15 + 2.5 * hazard, 0.05, 1.0);
    const double ratio = s_short / std::max(s_long, 1e-12);
    const double leverage = std::clamp(1.0 + 2.0 / std::max(ratio, 0.05), 1.05, 50.0);
    if (model == ModelTag::Diffusion)
        return {leverage, sigma};
    return {leverage, sigma, 0.3, 2.0};
}

} // namespace detail

/// Calibrates one firm-day. `warm` is the previous day's solution, if any.
[[nodiscard]] inline CalibrationResult calibrate_day(const TermStructure& market, ModelTag model,
                                                     const CalibrationOptions& options = {},
                                                     std::optional<double> r = std::nullopt,
                                                     const std::optional<std::vector<double>>& warm = std::nullopt)
{
    detail::check_grid(market, options.maturities);
    validate(market);
    const double rate = r.value_or(options.r);
    const std::size_t n = parameter_count(model);

    // Optimization coordinates are logs of the parameters.
    std::vector<double> lo(n), hi(n);
    for (std::size_t i = 0; i < n; ++i) {
        require(options.box.lower[i] > 0.0 && options.box.lower[i] < options.box.upper[i], ErrorCode::InvalidArgument,
                "invalid parameter box");
        lo[i] = std::log(options.box.lower[i]);
        hi[i] = std::log(options.box.upper[i]);
    }
    auto to_natural = [&](const std::vector<double>& z) {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i)
            x[i] = std::clamp(std::exp(z[i]), options.box.lower[i], options.box.upper[i]);
        return x;
    };
    auto to_log = [&](const std::vector<double>& x) {
        std::vector<double> z(n);
        for (std::size_t i = 0; i < n; ++i)
            z[i] = std::clamp(std::log(std::max(x[i], 1e-300)), lo[i], hi[i]);
        return z;
    };

    int evaluations = 0;
    auto make_objective = [&](auto loss) {
        return [&, loss](const std::vector<double>& z) {
            ++evaluations;
            try {
                return loss(market, model_spreads(model, to_natural(z), rate, options.recovery, options.maturities,
                                                  options.pricing));
            } catch (const Error&) {
                return std::numeric_limits<double>::infinity();
            }
        };
    };
    const auto objective = make_objective(detail::mape_values);
    const auto smooth_objective = make_objective(detail::mspe_values);

    std::vector<std::vector<double>> starts;
    if (options.heuristic_start)
        starts.push_back(to_log(detail::heuristic_start(market, model, options.recovery)));
    if (options.lhs_start && options.lhs_samples > 0) {
        const std::uint64_t key = Fnv1a{}.update(market.firm).update("\x1f").update(market.date).digest();
        boost::random::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                                    static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
        boost::random::mt19937_64 engine(seq);
        boost::random::uniform_01<double> u01;
        const int m = options.lhs_samples;
        std::vector<std::vector<double>> design(static_cast<std::size_t>(m), std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<int> strata(static_cast<std::size_t>(m));
            std::iota(strata.begin(), strata.end(), 0);
            for (int k = m - 1; k > 0; --k) // Fisher-Yates with the engine directly for portability
                std::swap(strata[static_cast<std::size_t>(k)],
                          strata[static_cast<std::size_t>(engine() % static_cast<std::uint64_t>(k + 1))]);
            for (int k = 0; k < m; ++k)
                design[static_cast<std::size_t>(k)][i]
                    = lo[i] + (hi[i] - lo[i]) * (strata[static_cast<std::size_t>(k)] + u01(engine)) / m;
        }
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_k = 0;
        for (std::size_t k = 0; k < design.size(); ++k) {
            const double v = objective(design[k]);
            if (v < best) {
                best = v;
                best_k = k;
            }
        }
        starts.push_back(design[best_k]);
    }
    if (options.warm_start && warm) {
        require(warm->size() == n, ErrorCode::InvalidArgument, "warm start has the wrong dimension");
        starts.push_back(to_log(*warm));
    }
    require(!starts.empty(), ErrorCode::InvalidArgument, "no calibration start enabled");

    CalibrationResult result;
    result.firm = market.firm;
    result.date = market.date;
    result.model = model;
    result.r = rate;
    result.recovery = options.recovery;

    double best_initial = std::numeric_limits<double>::infinity();
    std::optional<NelderMeadResult> best;
    bool best_converged = false;
    for (const auto& z0 : starts) {
        const double f0 = objective(z0);
        best_initial = std::min(best_initial, f0);
        if (!std::isfinite(f0))
            continue;
        std::vector<double> z = z0;
        if (options.smooth_presolve) {
            NelderMeadOptions pre_options = options.optimizer;
            pre_options.f_tol = options.presolve_f_tol;
            const NelderMeadResult pre = nelder_mead(smooth_objective, z0, lo, hi, pre_options);
            result.iterations += pre.iterations;
            z = pre.x;
        }
        NelderMeadResult run = nelder_mead(objective, z, lo, hi, options.optimizer);
        result.iterations += run.iterations;
        if (!best || run.f < best->f) {
            best_converged = run.converged;
            best = std::move(run);
        }
    }
    result.evaluations = evaluations;
    if (!best || !std::isfinite(best->f))
        throw Error(ErrorCode::AllStartsFailed, market.firm + " " + market.date + ": every start failed to price");

    result.parameters = to_natural(best->x);
    result.model_spreads = model_spreads(model, result.parameters, rate, options.recovery, options.maturities,
                                         options.pricing);
    result.mape = detail::mape_values(market, result.model_spreads);
    result.converged = best_converged && result.mape <= best_initial;
    result.at_bound.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = result.parameters[i];
        result.at_bound[i] = x <= options.box.lower[i] * (1.0 + 1e-9) || x >= options.box.upper[i] * (1.0 - 1e-9);
    }
    if (model == ModelTag::JumpDiffusion) {
        const auto p = to_jump_params(result.parameters, rate);
        for (double t : options.maturities) {
            try {
                if (gs_order_divergence(p, {t, 0.0, options.recovery}, options.pricing) > kGsStabilityThreshold) {
                    result.unstable = true;
                    break;
                }
            } catch (const Error&) {
                result.unstable = true;
                break;
            }
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Panel
// ---------------------------------------------------------------------------

/// One per-maturity series value set for a firm-day (bp).
struct SeriesRow {
    std::string firm;
    std::string date;
    std::vector<double> values;
};

struct CalibrationFailure {
    std::string firm;
    std::string date;
    ErrorCode code = ErrorCode::InvalidArgument;
    std::string message;
};

struct PanelCalibration {
    std::vector<CalibrationResult> results;   // sorted by (firm, date)
    std::vector<SeriesRow> model_differences; // model spread change from the previous calibrated day
    std::vector<SeriesRow> errors;            // model minus market
    std::vector<CalibrationFailure> failures;
};

/// Calibrates every firm-day. Firms run in parallel; dates within a firm run in
/// order so each day can start from the previous solution. `rates` maps dates
/// to the risk-free rate; missing dates fall back to options.r.
[[nodiscard]] inline PanelCalibration calibrate_panel(const std::vector<TermStructure>& panel, ModelTag model,
                                                      const CalibrationOptions& options = {},
                                                      const std::map<std::string, double>& rates = {})
{
    std::map<std::string, std::vector<const TermStructure*>> by_firm;
    for (const auto& ts : panel)
        by_firm[ts.firm].push_back(&ts);
    std::vector<std::pair<std::string, std::vector<const TermStructure*>>> firms(by_firm.begin(), by_firm.end());
    for (auto& [firm, days] : firms) {
        std::stable_sort(days.begin(), days.end(), [](auto* a, auto* b) { return a->date < b->date; });
        for (std::size_t i = 1; i < days.size(); ++i)
            require(days[i]->date != days[i - 1]->date, ErrorCode::IntegrityViolation,
                    "duplicate firm-day " + firm + " " + days[i]->date);
    }

    struct FirmOutput {
        std::vector<CalibrationResult> results;
        std::vector<SeriesRow> differences;
        std::vector<SeriesRow> errors;
        std::vector<CalibrationFailure> failures;
    };
    std::vector<FirmOutput> outputs(firms.size());

    parallel_for(
        firms.size(),
        [&](std::size_t f) {
            FirmOutput& out = outputs[f];
            std::optional<std::vector<double>> warm;
            std::optional<std::vector<double>> previous_spreads;
            for (const TermStructure* ts : firms[f].second) {
                const auto rate_it = rates.find(ts->date);
                const double rate = rate_it == rates.end() ? options.r : rate_it->second;
                try {
                    CalibrationResult res = calibrate_day(*ts, model, options, rate, warm);
                    SeriesRow err{ts->firm, ts->date, {}};
                    for (std::size_t i = 0; i < res.model_spreads.size(); ++i)
                        err.values.push_back(res.model_spreads[i] - ts->points[i].spread_bp);
                    out.errors.push_back(std::move(err));
                    out.results.push_back(std::move(res));
                    const auto& spreads = out.results.back().model_spreads;
                    if (previous_spreads) {
                        SeriesRow diff{ts->firm, ts->date, {}};
                        for (std::size_t i = 0; i < spreads.size(); ++i)
                            diff.values.push_back(spreads[i] - (*previous_spreads)[i]);
                        out.differences.push_back(std::move(diff));
                    }
                    warm = out.results.back().parameters;
                    previous_spreads = spreads;
                } catch (const Error& e) {
                    out.failures.push_back({ts->firm, ts->date, e.code(), e.what()});
                    // A failed day breaks the chain: no difference row across the gap.
                    previous_spreads.reset();
                }
            }
        },
        options.workers == 0 ? default_workers() : options.workers);

    PanelCalibration panel_out;
    for (auto& out : outputs) {
        std::move(out.results.begin(), out.results.end(), std::back_inserter(panel_out.results));
        std::move(out.differences.begin(), out.differences.end(), std::back_inserter(panel_out.model_differences));
        std::move(out.errors.begin(), out.errors.end(), std::back_inserter(panel_out.errors));
        std::move(out.failures.begin(), out.failures.end(), std::back_inserter(panel_out.failures));
    }
    return panel_out;
}

} // namespace jdcredit
