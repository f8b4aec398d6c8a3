#pragma once

#include <jdcredit/diagnostics.hpp>
#include <jdcredit/inversion.hpp>
#include <jdcredit/laplace.hpp>
#include <jdcredit/model_core.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace jdcredit {

/// Canonical CDS maturity grid in years.
inline constexpr std::array<double, 10> kCanonicalMaturities{0.5, 1, 2, 3, 4, 5, 7, 10, 20, 30};

inline constexpr double kBasisPoints = 1e4;

struct TermPoint {
    double maturity = 0.0;  // years
    double spread_bp = 0.0; // basis points
};

struct TermStructure {
    std::string firm;
    std::string date; // ISO-8601
    std::vector<TermPoint> points;
};

inline void validate(const TermStructure& ts)
{
    require(!ts.points.empty(), ErrorCode::InvalidArgument, "empty term structure");
    for (std::size_t i = 0; i < ts.points.size(); ++i) {
        require(ts.points[i].spread_bp > 0.0 && std::isfinite(ts.points[i].spread_bp),
                ErrorCode::InvalidArgument, "spreads must be positive");
        if (i > 0)
            require(ts.points[i].maturity > ts.points[i - 1].maturity, ErrorCode::InvalidArgument,
                    "maturities must be strictly increasing");
    }
}

struct PricingConfig {
    int gs_order = kDefaultGaverStehfestOrder;
    double lambda_floor = kLambdaFloor;
};

[[nodiscard]] inline DiffusionParams diffusion_counterpart(const JumpDiffusionParams& p)
{
    return DiffusionParams{p.r, p.sigma, p.leverage};
}

[[nodiscard]] inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// ---------------------------------------------------------------------------
// Diffusion model
// ---------------------------------------------------------------------------

/// Barrier survival probability of a geometric Brownian motion.
[[nodiscard]] inline double survival_probability_diffusion(const DiffusionParams& p, double tenor)
{
    validate(p);
    require(tenor > 0.0, ErrorCode::InvalidArgument, "tenor must be positive");
    const double x = std::log(p.leverage);
    if (x == 0.0)
        return 0.0;
    const double m = p.drift();
    const double s = p.sigma * std::sqrt(tenor);
    const double first = normal_cdf((x + m * tenor) / s);
    const double n2 = normal_cdf((-x + m * tenor) / s);
    double second = 0.0;
    if (n2 > 0.0)
        second = std::exp(-2.0 * m / (p.sigma * p.sigma) * x + std::log(n2));
    return std::clamp(first - second, 0.0, 1.0);
}

struct QuadratureConfig {
    double abs_tol = 1e-9;
    int max_evaluations = 200000;
    bool composite_fallback = true;
    int fallback_nodes = 200;
};

namespace detail {

template <typename F>
double composite_simpson(F&& f, double a, double b, int intervals)
{
    if (intervals % 2 == 1)
        ++intervals;
    const double h = (b - a) / intervals;
    double sum = f(a) + f(b);
    for (int i = 1; i < intervals; ++i)
        sum += f(a + i * h) * ((i % 2 == 1) ? 4.0 : 2.0);
    return sum * h / 3.0;
}

template <typename F>
struct AdaptiveSimpson {
    F& f;
    int budget;
    int evaluations = 0;

    double recurse(double a, double b, double fa, double fm, double fb, double whole, double tol, int depth)
    {
        const double m = 0.5 * (a + b);
        const double flm = f(0.5 * (a + m));
        const double frm = f(0.5 * (m + b));
        evaluations += 2;
        if (evaluations > budget)
            throw Error(ErrorCode::QuadratureFailure, "adaptive Simpson budget exhausted");
        const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        const double delta = left + right - whole;
        // The first few levels always split, so a coarse lucky agreement cannot stop early.
        if (depth < kMaxDepth - kMinDepth && (depth <= 0 || std::abs(delta) <= 15.0 * tol))
            return left + right + delta / 15.0;
        return recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    }

    static constexpr int kMaxDepth = 50;
    static constexpr int kMinDepth = 4;
};

} // namespace detail

/// Adaptive Simpson quadrature with an evaluation budget.
template <typename F>
[[nodiscard]] double integrate(F&& f, double a, double b, const QuadratureConfig& config = {})
{
    try {
        detail::AdaptiveSimpson<F> q{f, config.max_evaluations};
        const double fa = f(a);
        const double fm = f(0.5 * (a + b));
        const double fb = f(b);
        const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        const double value = q.recurse(a, b, fa, fm, fb, whole, config.abs_tol, q.kMaxDepth);
        if (!std::isfinite(value))
            throw Error(ErrorCode::QuadratureFailure, "non-finite integral");
        return value;
    } catch (const Error&) {
        if (!config.composite_fallback)
            throw;
        const double value = detail::composite_simpson(f, a, b, config.fallback_nodes);
        if (!std::isfinite(value))
            throw Error(ErrorCode::QuadratureFailure, "non-finite integral");
        return value;
    }
}

/// Risk-free-discounted survival annuity: integral over [0, tenor] of e^{-rs} P_surv(s).
[[nodiscard]] inline double survival_annuity_diffusion(const DiffusionParams& p, double tenor,
                                                       const QuadratureConfig& quad = {})
{
    const bool alive = p.leverage > 1.0;
    auto integrand = [&](double s) {
        if (s <= 0.0)
            return alive ? 1.0 : 0.0;
        return std::exp(-p.r * s) * survival_probability_diffusion(p, s);
    };
    return integrate(integrand, 0.0, tenor, quad);
}

/// Continuous-premium CDS spread (decimal per annum) in the diffusion model.
[[nodiscard]] inline double cds_spread_diffusion(const DiffusionParams& p, double recovery, double tenor,
                                                 const QuadratureConfig& quad = {})
{
    validate(p);
    require(tenor > 0.0, ErrorCode::InvalidArgument, "tenor must be positive");
    require(recovery >= 0.0 && recovery <= 1.0, ErrorCode::InvalidArgument, "recovery must lie in [0, 1]");
    if (recovery == 1.0)
        return 0.0;
    const double annuity = survival_annuity_diffusion(p, tenor, quad);
    if (!(annuity >= 1e-10))
        throw Error(ErrorCode::NearDefaultIllConditioned, "premium annuity vanishes");
    const double numerator = 1.0 - std::exp(-p.r * tenor) * survival_probability_diffusion(p, tenor);
    return std::max(0.0, (1.0 - recovery) * (numerator / annuity - p.r));
}

/// Defaultable coupon bond in the diffusion model (used when lambda is below the floor).
[[nodiscard]] inline double bond_price_diffusion(const DiffusionParams& p, const ContractTerms& terms,
                                                 const QuadratureConfig& quad = {})
{
    validate(p);
    validate(terms);
    const double surv = survival_probability_diffusion(p, terms.tenor);
    const double annuity = survival_annuity_diffusion(p, terms.tenor, quad);
    const double discounted_default = 1.0 - std::exp(-p.r * terms.tenor) * surv - p.r * annuity;
    return std::exp(-p.r * terms.tenor) * surv + terms.recovery * discounted_default + terms.coupon * annuity;
}

// ---------------------------------------------------------------------------
// Jump-diffusion model
// ---------------------------------------------------------------------------

[[nodiscard]] inline bool is_jumpless(const JumpDiffusionParams& p, const PricingConfig& config)
{
    return p.lambda <= config.lambda_floor;
}

/// Default probability over [0, tenor], unclipped Gaver-Stehfest output.
[[nodiscard]] inline double default_probability_raw(const JumpDiffusionParams& p, double tenor,
                                                    const PricingConfig& config = {})
{
    validate(p);
    require(tenor > 0.0, ErrorCode::InvalidArgument, "tenor must be positive");
    if (p.leverage == 1.0)
        return 1.0;
    if (is_jumpless(p, config))
        return 1.0 - survival_probability_diffusion(diffusion_counterpart(p), tenor);
    return gs_invert([&](double w) { return first_passage_transform(p, w, config.lambda_floor); }, tenor,
                     gaver_stehfest(config.gs_order));
}

[[nodiscard]] inline double default_probability(const JumpDiffusionParams& p, double tenor,
                                                const PricingConfig& config = {})
{
    const double raw = default_probability_raw(p, tenor, config);
    if (raw < -1e-6 || raw > 1.0 + 1e-6)
        warn("default probability " + std::to_string(raw) + " clipped to [0, 1]");
    return std::clamp(raw, 0.0, 1.0);
}

/// Defaultable coupon bond price per unit face.
[[nodiscard]] inline double bond_price(const JumpDiffusionParams& p, const ContractTerms& terms,
                                       const PricingConfig& config = {})
{
    validate(p);
    validate(terms);
    if (is_jumpless(p, config))
        return bond_price_diffusion(diffusion_counterpart(p), terms);
    return gs_invert(
        [&](double w) {
            return bond_transform_from_passage(terms, p.r, w, detail::shifted_passage(p, w, config.lambda_floor));
        },
        terms.tenor, gaver_stehfest(config.gs_order));
}

struct CdsLegs {
    double protection = 0.0; // inverse of the protection-leg transform
    double premium = 0.0;    // inverse of the premium-leg transform (risky annuity)
};

/// Both legs inverted with the same order and nodes; H is evaluated once per node.
[[nodiscard]] inline CdsLegs cds_legs(const JumpDiffusionParams& p, const ContractTerms& terms,
                                      const PricingConfig& config = {})
{
    validate(p);
    validate(terms);
    const auto& gs = gaver_stehfest(config.gs_order);
    const auto& w = gs.weights();
    long double protection = 0.0L;
    long double premium = 0.0L;
    for (std::size_t k = 1; k <= w.size(); ++k) {
        const double omega = GaverStehfestConfig::node(static_cast<int>(k), terms.tenor);
        PassageValue<double> shifted;
        try {
            shifted = detail::shifted_passage(p, omega, config.lambda_floor);
        } catch (const Error& e) {
            throw Error(ErrorCode::TransformEvaluationFailed, e.what());
        }
        protection += w[k - 1] * protection_leg_transform_from_passage(terms, omega, shifted);
        premium += w[k - 1] * premium_leg_transform_from_passage(p.r, omega, shifted);
    }
    const long double scale = std::numbers::ln2_v<long double> / terms.tenor;
    return {static_cast<double>(scale * protection), static_cast<double>(scale * premium)};
}

/// Continuous-premium CDS spread (decimal per annum).
[[nodiscard]] inline double cds_spread(const JumpDiffusionParams& p, const ContractTerms& terms,
                                       const PricingConfig& config = {})
{
    validate(p);
    validate(terms);
    require(p.leverage > 1.0, ErrorCode::InvalidArgument, "CDS spread requires leverage above 1");
    if (is_jumpless(p, config))
        return cds_spread_diffusion(diffusion_counterpart(p), terms.recovery, terms.tenor);
    const CdsLegs legs = cds_legs(p, terms, config);
    if (!(legs.premium >= 1e-10))
        throw Error(ErrorCode::NearDefaultIllConditioned,
                    "premium leg inverse " + std::to_string(legs.premium) + " below 1e-10");
    return legs.protection / legs.premium;
}

/// Threshold on the order-to-order change of inverted quantities above which a
/// pricing is reported as unstable.
inline constexpr double kGsStabilityThreshold = 1e-3;

/// Largest absolute change of the default probability and both CDS legs when
/// the Gaver-Stehfest order drops by one.
[[nodiscard]] inline double gs_order_divergence(const JumpDiffusionParams& p, const ContractTerms& terms,
                                                const PricingConfig& config = {})
{
    require(config.gs_order >= 2, ErrorCode::InvalidArgument, "order comparison needs order >= 2");
    if (is_jumpless(p, config))
        return 0.0;
    PricingConfig lower = config;
    lower.gs_order = config.gs_order - 1;
    const CdsLegs a = cds_legs(p, terms, config);
    const CdsLegs b = cds_legs(p, terms, lower);
    const double pd = std::abs(default_probability_raw(p, terms.tenor, config)
                               - default_probability_raw(p, terms.tenor, lower));
    return std::max({std::abs(a.protection - b.protection), std::abs(a.premium - b.premium), pd});
}

/// Yield spread of a zero-coupon, zero-recovery bond over its jump-free counterpart.
/// Such a bond is worth exp(-rT) times the survival probability, so the spread is
/// -log1p(-D / S) / T with S the jump-free survival probability and D the
/// default-probability gap. D is inverted from the difference of the two
/// first-passage transforms, which avoids cancelling two prices close to one.
[[nodiscard]] inline double green_spread(const JumpDiffusionParams& p, double tenor,
                                         const PricingConfig& config = {})
{
    validate(p);
    require(tenor > 0.0, ErrorCode::InvalidArgument, "tenor must be positive");
    const DiffusionParams d = diffusion_counterpart(p);
    const double survival = survival_probability_diffusion(d, tenor);
    require(survival > 0.0, ErrorCode::NearDefaultIllConditioned, "green spread undefined for a worthless bond");
    if (is_jumpless(p, config))
        return 0.0;
    const double x_hat = p.log_leverage();
    const double gap = gs_invert(
        [&](double w) {
            const double jump = first_passage_expectation(p, w, config.lambda_floor);
            const double diffusion = std::exp(-diffusion_root(d.drift(), d.sigma, w) * x_hat);
            return (jump - diffusion) / w;
        },
        tenor, gaver_stehfest(config.gs_order));
    require(gap < survival, ErrorCode::NearDefaultIllConditioned, "green spread undefined for a worthless bond");
    return -std::log1p(-gap / survival) / tenor;
}

// ---------------------------------------------------------------------------
// Term structures
// ---------------------------------------------------------------------------

namespace detail {

template <typename PriceFn>
TermStructure price_grid(std::span<const double> maturities, PriceFn&& price)
{
    require(!maturities.empty(), ErrorCode::InvalidArgument, "empty maturity grid");
    TermStructure ts;
    ts.points.reserve(maturities.size());
    for (std::size_t i = 0; i < maturities.size(); ++i) {
        if (i > 0)
            require(maturities[i] > maturities[i - 1], ErrorCode::InvalidArgument,
                    "maturity grid must be increasing");
        try {
            ts.points.push_back({maturities[i], price(maturities[i]) * kBasisPoints});
        } catch (const Error& e) {
            throw Error(e.code(), "maturity " + std::to_string(maturities[i]) + ": " + e.what());
        }
    }
    return ts;
}

} // namespace detail

[[nodiscard]] inline TermStructure price_term_structure(const JumpDiffusionParams& p, double recovery,
                                                        std::span<const double> maturities = kCanonicalMaturities,
                                                        const PricingConfig& config = {})
{
    return detail::price_grid(maturities, [&](double t) { return cds_spread(p, {t, 0.0, recovery}, config); });
}

[[nodiscard]] inline TermStructure price_term_structure(const DiffusionParams& p, double recovery,
                                                        std::span<const double> maturities = kCanonicalMaturities)
{
    return detail::price_grid(maturities, [&](double t) { return cds_spread_diffusion(p, recovery, t); });
}

} // namespace jdcredit
