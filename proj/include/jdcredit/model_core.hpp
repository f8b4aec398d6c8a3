#pragma once

// Firm-value dynamics with one-sided exponential downward jumps.
//
// The log-leverage x = ln(V/V_def) follows
//     dx = psi dt + sigma dW + dJ,
// where J is compound Poisson with intensity lambda and jump sizes
// Y ~ -Exp(eta). Default is the first time x <= 0.

#include <jdcredit/error.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <utility>

namespace jdcredit {

/// Intensities below this are treated as jumpless; pricing routes to the
/// diffusion formulas.
inline constexpr double kLambdaFloor = 1e-6;

struct JumpDiffusionParams {
    double r = 0.0;        // risk-free rate, continuous compounding
    double sigma = 0.2;    // diffusion volatility
    double lambda = 0.0;   // jump intensity
    double eta = 1.0;      // jump-size parameter, mean log jump 1/eta
    double leverage = 2.0; // V_t / V_def

    [[nodiscard]] double log_leverage() const { return std::log(leverage); }
};

struct ContractTerms {
    double tenor = 1.0;
    double coupon = 0.0;   // continuous coupon rate b
    double recovery = 0.0; // recovery of face value
};

struct DiffusionParams {
    double r = 0.0;
    double sigma = 0.2;
    double leverage = 2.0; // S_t / S_def

    [[nodiscard]] double drift() const { return r - 0.5 * sigma * sigma; }
};

struct RootPair {
    double beta = 0.0;            // root above eta
    double gamma = 0.0;           // root in (0, eta)
    double beta_minus_eta = 0.0;  // beta - eta at full relative precision
    double eta_minus_gamma = 0.0; // eta - gamma at full relative precision
};

inline void validate(const JumpDiffusionParams& p)
{
    require(std::isfinite(p.r), ErrorCode::InvalidArgument, "r must be finite");
    require(p.sigma > 0.0 && std::isfinite(p.sigma), ErrorCode::InvalidArgument,
            "sigma must be positive");
    require(p.lambda >= 0.0 && std::isfinite(p.lambda), ErrorCode::InvalidArgument,
            "lambda must be non-negative");
    require(p.eta > 0.0 && std::isfinite(p.eta), ErrorCode::InvalidArgument, "eta must be positive");
    require(p.leverage >= 1.0 && std::isfinite(p.leverage), ErrorCode::InvalidArgument,
            "leverage must be >= 1");
}

inline void validate(const ContractTerms& t)
{
    require(t.tenor > 0.0 && std::isfinite(t.tenor), ErrorCode::InvalidArgument,
            "tenor must be positive");
    require(t.coupon >= 0.0, ErrorCode::InvalidArgument, "coupon must be non-negative");
    require(t.recovery >= 0.0 && t.recovery <= 1.0, ErrorCode::InvalidArgument,
            "recovery must lie in [0, 1]");
}

inline void validate(const DiffusionParams& p)
{
    require(p.sigma > 0.0 && std::isfinite(p.sigma), ErrorCode::InvalidArgument,
            "sigma must be positive");
    require(p.leverage >= 1.0 && std::isfinite(p.leverage), ErrorCode::InvalidArgument,
            "leverage must be >= 1");
}

/// xi = E[e^Y - 1] = eta/(eta+1) - 1, written as -1/(eta+1) to avoid cancellation.
[[nodiscard]] inline double jump_compensator(const JumpDiffusionParams& p)
{
    return -1.0 / (p.eta + 1.0);
}

/// Risk-neutral drift of the log firm value.
[[nodiscard]] inline double log_drift(const JumpDiffusionParams& p)
{
    return p.r - 0.5 * p.sigma * p.sigma - p.lambda * jump_compensator(p);
}

/// Cumulant exponent G(q) = sigma^2 q^2 / 2 - psi q + lambda (eta/(eta-q) - 1).
[[nodiscard]] inline double g_of_q(const JumpDiffusionParams& p, double q, double pole_guard = 1e-14)
{
    if (std::abs(q - p.eta) < pole_guard * std::max(1.0, p.eta))
        throw Error(ErrorCode::PoleAtEta, "G(q) evaluated at the pole q = eta");
    const double psi = log_drift(p);
    return 0.5 * p.sigma * p.sigma * q * q - psi * q + p.lambda * q / (p.eta - q);
}

namespace detail {

// G written in terms of the signed pole distance d = eta - q, so that roots
// close to the pole keep their relative precision. Extended precision keeps
// the cancellation between terms below the residual tolerance.
inline double g_at(const JumpDiffusionParams& p, double psi, double d)
{
    const long double q = static_cast<long double>(p.eta) - d;
    const long double s2 = static_cast<long double>(p.sigma) * p.sigma;
    return static_cast<double>(0.5L * s2 * q * q - psi * q + p.lambda * q / d);
}

inline double g_prime_at(const JumpDiffusionParams& p, double psi, double q, double d)
{
    return p.sigma * p.sigma * q - psi + p.lambda * p.eta / (d * d);
}

// Magnitude of the terms in G; sets the floating-point noise level of a residual.
inline double g_scale(const JumpDiffusionParams& p, double psi, double q, double d)
{
    return 0.5 * p.sigma * p.sigma * q * q + std::abs(psi * q) + std::abs(p.lambda * q / d);
}

// Solves G(q(s)) = omega for the unsigned pole distance s on a bracket, where
// q(s) = eta - side * s. `s_up` is the end of the bracket where G exceeds omega.
// Newton steps that leave the bracket fall back to bisection.
inline double solve_distance(const JumpDiffusionParams& p, double psi, double omega, int side, double s_down,
                             double s_up)
{
    auto f = [&](double s) { return g_at(p, psi, side * s) - omega; };
    auto df = [&](double s) {
        // dG/ds = dG/dq * dq/ds = -side * G'(q)
        return -side * g_prime_at(p, psi, p.eta - side * s, side * s);
    };
    // Picks the representable distance with the smallest residual near s.
    auto polish = [&](double s) {
        double best = s;
        double best_abs = std::abs(f(s));
        for (double dir : {-1.0, 1.0}) {
            double t = s;
            for (int k = 0; k < 4; ++k) {
                t = std::nextafter(t, dir * std::numeric_limits<double>::infinity());
                const double v = std::abs(f(t));
                if (v < best_abs) {
                    best_abs = v;
                    best = t;
                }
            }
        }
        return best;
    };
    double s = 0.5 * (s_down + s_up);
    for (int iter = 0; iter < 400; ++iter) {
        const double value = f(s);
        if (value == 0.0)
            return s;
        if (value < 0.0)
            s_down = s;
        else
            s_up = s;
        double next = s - value / df(s);
        const double lo = std::min(s_down, s_up);
        const double hi = std::max(s_down, s_up);
        if (!(next > lo && next < hi) || !std::isfinite(next))
            next = 0.5 * (s_down + s_up);
        if (std::abs(next - s) <= 2.0 * std::numeric_limits<double>::epsilon() * std::abs(s))
            return polish(next);
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi)
            return polish(std::abs(f(lo)) < std::abs(f(hi)) ? lo : hi);
        s = next;
    }
    throw Error(ErrorCode::NoConvergence, "root iteration budget exhausted");
}

} // namespace detail

/// |G(root) - omega| for both roots, evaluated with the carried pole distances.
[[nodiscard]] inline std::pair<double, double> root_residuals(const JumpDiffusionParams& p, double omega,
                                                              const RootPair& roots)
{
    const double psi = log_drift(p);
    return {std::abs(detail::g_at(p, psi, -roots.beta_minus_eta) - omega),
            std::abs(detail::g_at(p, psi, roots.eta_minus_gamma) - omega)};
}

/// The two positive roots of G(q) = omega: gamma in (0, eta), beta in (eta, inf).
[[nodiscard]] inline RootPair solve_roots(const JumpDiffusionParams& p, double omega,
                                          double lambda_floor = kLambdaFloor)
{
    require(omega > 0.0 && std::isfinite(omega), ErrorCode::InvalidArgument,
            "omega must be positive");
    if (p.lambda <= lambda_floor)
        throw Error(ErrorCode::DegenerateJumpless,
                    "lambda below floor; use the diffusion formulas");

    const double psi = log_drift(p);
    auto g_below = [&](double s) { return detail::g_at(p, psi, s); };
    auto g_above = [&](double s) { return detail::g_at(p, psi, -s); };

    // gamma: G(0) = 0 < omega and G -> +inf as q -> eta from below.
    double s_gamma = 1e-9 * p.eta;
    while (g_below(s_gamma) <= omega) {
        s_gamma *= 1e-2;
        if (s_gamma < 1e-300)
            throw Error(ErrorCode::NoConvergence, "cannot bracket gamma below eta");
    }
    const double eta_minus_gamma = detail::solve_distance(p, psi, omega, +1, p.eta, s_gamma);

    // beta: G -> -inf as q -> eta from above, +inf as q -> inf.
    double s_low = 1e-9 * p.eta;
    while (g_above(s_low) >= omega) {
        s_low *= 1e-2;
        if (s_low < 1e-300)
            throw Error(ErrorCode::NoConvergence, "cannot bracket beta above eta");
    }
    double s_high = p.eta + 1.0;
    while (g_above(s_high) <= omega) {
        s_high *= 2.0;
        if (!std::isfinite(s_high))
            throw Error(ErrorCode::NoConvergence, "cannot bracket beta from above");
    }
    const double beta_minus_eta = detail::solve_distance(p, psi, omega, -1, s_low, s_high);

    RootPair roots{p.eta + beta_minus_eta, p.eta - eta_minus_gamma, beta_minus_eta, eta_minus_gamma};
    const auto [res_beta, res_gamma] = root_residuals(p, omega, roots);
    const double tol_beta =
        1e-12 * std::max({1.0, omega, 1e-3 * detail::g_scale(p, psi, roots.beta, -beta_minus_eta)});
    const double tol_gamma =
        1e-12 * std::max({1.0, omega, 1e-3 * detail::g_scale(p, psi, roots.gamma, eta_minus_gamma)});
    if (!(res_beta <= tol_beta) || !(res_gamma <= tol_gamma))
        throw Error(ErrorCode::NoConvergence, "root residual above tolerance");
    return roots;
}

/// Positive root of the jumpless quadratic sigma^2 q^2 / 2 - psi q = omega.
[[nodiscard]] inline double diffusion_root(double psi, double sigma, double omega)
{
    const double s2 = sigma * sigma;
    return (psi + std::sqrt(psi * psi + 2.0 * s2 * omega)) / s2;
}

// ---------------------------------------------------------------------------
// Complex arguments, used only by the Bromwich cross-check.
// ---------------------------------------------------------------------------

struct ComplexRootPair {
    std::complex<double> beta;
    std::complex<double> gamma;
};

/// Roots of G(q) = omega with positive real part, for complex omega with
/// Re(omega) > 0. Solves the cubic obtained by clearing the pole.
[[nodiscard]] inline ComplexRootPair solve_roots(const JumpDiffusionParams& p, std::complex<double> omega)
{
    using C = std::complex<double>;
    const double a = 0.5 * p.sigma * p.sigma;
    const double psi = log_drift(p);
    // -a q^3 + (a eta + psi) q^2 + (omega + lambda - psi eta) q - omega eta = 0, made monic.
    const C c2 = -(a * p.eta + psi) / a;
    const C c1 = -(omega + p.lambda - psi * p.eta) / a;
    const C c0 = omega * p.eta / a;
    auto poly = [&](C q) { return ((q + c2) * q + c1) * q + c0; };
    auto dpoly = [&](C q) { return (3.0 * q + 2.0 * c2) * q + c1; };

    // Durand-Kerner.
    std::array<C, 3> z{C(0.4, 0.9), C(0.4, 0.9) * C(0.4, 0.9), C(0.4, 0.9) * C(0.4, 0.9) * C(0.4, 0.9)};
    const double scale = 1.0 + std::abs(c2) + std::sqrt(std::abs(c1)) + std::cbrt(std::abs(c0));
    for (auto& zi : z)
        zi *= scale;
    for (int iter = 0; iter < 500; ++iter) {
        double change = 0.0;
        for (std::size_t i = 0; i < 3; ++i) {
            C denom = 1.0;
            for (std::size_t j = 0; j < 3; ++j)
                if (j != i)
                    denom *= (z[i] - z[j]);
            const C step = poly(z[i]) / denom;
            z[i] -= step;
            change = std::max(change, std::abs(step) / (1.0 + std::abs(z[i])));
        }
        if (change < 1e-15)
            break;
    }
    for (auto& zi : z)
        for (int k = 0; k < 3; ++k) {
            const C d = dpoly(zi);
            if (std::abs(d) > 0.0)
                zi -= poly(zi) / d;
        }

    std::array<C, 2> pos{};
    int n = 0;
    for (const auto& zi : z)
        if (zi.real() > 0.0 && n < 2)
            pos[static_cast<std::size_t>(n++)] = zi;
    if (n != 2)
        throw Error(ErrorCode::ContourFailure, "expected two roots with positive real part");
    // gamma is the branch continuing the real root below eta.
    if (std::abs(pos[0]) > std::abs(pos[1]))
        return {pos[0], pos[1]};
    return {pos[1], pos[0]};
}

} // namespace jdcredit
