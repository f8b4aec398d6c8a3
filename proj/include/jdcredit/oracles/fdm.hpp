#pragma once

// Finite-difference solver for the first-passage problem of the log-leverage
// process with downward exponential jumps. Independent of the transform code.

#include <jdcredit/model_core.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace jdcredit {

struct FdmGrid {
    double x_max = 0.0; // 0 selects the default truncation
    int nx = 2000;      // target number of space steps on [0, x_max]
    int nt = 1000;      // time steps
    int rannacher_steps = 4; // implicit Euler half-steps replacing the first CN step pairs
};

struct FdmResult {
    double value = 0.0;          // fine-grid solution at x_hat
    double coarse = 0.0;         // same problem on the grid with doubled steps
    double error_estimate = 0.0; // |fine - coarse| / 3
};

inline constexpr double kFdmTolerance = 1e-4;

/// Default truncation x_hat + 8 sigma sqrt(T) + 3 / eta + max(psi, 0) T.
[[nodiscard]] inline double fdm_default_x_max(const JumpDiffusionParams& p, double tenor)
{
    const double jump_reach = p.lambda > 0.0 ? 3.0 / p.eta : 0.0;
    return p.log_leverage() + 8.0 * p.sigma * std::sqrt(tenor) + jump_reach + std::max(log_drift(p), 0.0) * tenor;
}

namespace detail {

// Uniform grid with x_hat on node i_hat.
struct FdmSpace {
    double h;
    int n;     // nodes 0..n
    int i_hat;
};

inline FdmSpace fdm_space(double x_hat, double x_max, int nx)
{
    require(nx >= 4, ErrorCode::InvalidArgument, "FDM grid needs at least 4 space steps");
    const double h0 = x_max / nx;
    const int i_hat = std::max(1, static_cast<int>(std::lround(x_hat / h0)));
    const double h = x_hat / i_hat;
    const int n = std::max(i_hat + 2, static_cast<int>(std::ceil(x_max / h)));
    return {h, n, i_hat};
}

// J[u]_i = integral over [0, x_i] of u(z) eta exp(-eta (x_i - z)) dz for the
// piecewise-linear interpolant of u, with u_0 the barrier value.
class JumpIntegral {
public:
    JumpIntegral(double eta, double h)
    {
        decay_ = std::exp(-eta * h);
        const double eh = eta * h;
        const double one_minus = -std::expm1(-eh);
        const double ratio = eh > 1e-4 ? one_minus / eh : 1.0 - eh / 2.0 + eh * eh / 6.0;
        w_prev_ = ratio - decay_;
        w_cur_ = one_minus - w_prev_;
    }

    void apply(const std::vector<double>& u, std::vector<double>& out) const
    {
        out[0] = 0.0;
        for (std::size_t i = 1; i < u.size(); ++i)
            out[i] = decay_ * out[i - 1] + w_cur_ * u[i] + w_prev_ * u[i - 1];
    }

private:
    double decay_, w_cur_, w_prev_;
};

// Solves a tridiagonal system in place (Thomas algorithm); diag and rhs are overwritten.
inline void solve_tridiagonal(const std::vector<double>& lower, std::vector<double>& diag,
                              const std::vector<double>& upper, std::vector<double>& rhs)
{
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

// Survival probability on one grid. Unknowns are nodes 1..n; node 0 is the
// absorbing barrier (u = 0) and node n carries a zero-slope condition.
inline double fdm_survival_once(const JumpDiffusionParams& p, double tenor, double x_max, int nx, int nt,
                                int rannacher_steps)
{
    const double x_hat = p.log_leverage();
    const FdmSpace g = fdm_space(x_hat, x_max, nx);
    const int m = g.n; // unknowns 1..n
    const double s2 = p.sigma * p.sigma;
    const double psi = log_drift(p);
    const double a = 0.5 * s2 / (g.h * g.h);
    const double c = psi / (2.0 * g.h);
    const double lo = a - c, di = -2.0 * a - p.lambda, up = a + c;

    std::vector<double> u(static_cast<std::size_t>(m + 1), 1.0);
    u[0] = 0.0;
    const JumpIntegral jump(p.eta, g.h);
    std::vector<double> ju(u.size()), ju_new(u.size()), explicit_part(u.size()), rhs, diag, lower, upper, next;
    rhs.resize(static_cast<std::size_t>(m));
    diag.resize(rhs.size());
    lower.resize(rhs.size());
    upper.resize(rhs.size());

    // Applies the differential part L to u at node i (1..m).
    auto diff_op = [&](const std::vector<double>& v, int i) {
        const double right = i < m ? v[static_cast<std::size_t>(i + 1)] : v[static_cast<std::size_t>(i - 1)];
        return lo * v[static_cast<std::size_t>(i - 1)] + di * v[static_cast<std::size_t>(i)] + up * right;
    };

    auto step = [&](double dt, double theta) {
        jump.apply(u, ju);
        for (int i = 1; i <= m; ++i)
            explicit_part[static_cast<std::size_t>(i)] =
                u[static_cast<std::size_t>(i)]
                + (1.0 - theta) * dt * (diff_op(u, i) + p.lambda * ju[static_cast<std::size_t>(i)]);
        next = u;
        ju_new = ju;
        for (int iter = 0; iter < 100; ++iter) {
            for (int i = 1; i <= m; ++i) {
                const std::size_t k = static_cast<std::size_t>(i - 1);
                lower[k] = -theta * dt * lo;
                diag[k] = 1.0 - theta * dt * di;
                upper[k] = -theta * dt * up;
                rhs[k] = explicit_part[static_cast<std::size_t>(i)]
                    + theta * dt * p.lambda * ju_new[static_cast<std::size_t>(i)];
            }
            // Zero slope at x_max: ghost node u_{m+1} = u_{m-1}.
            lower[static_cast<std::size_t>(m - 1)] -= theta * dt * up;
            solve_tridiagonal(lower, diag, upper, rhs);
            double change = 0.0;
            for (int i = 1; i <= m; ++i) {
                const double v = rhs[static_cast<std::size_t>(i - 1)];
                change = std::max(change, std::abs(v - next[static_cast<std::size_t>(i)]));
                next[static_cast<std::size_t>(i)] = v;
            }
            if (p.lambda == 0.0 || change < 1e-14)
                break;
            jump.apply(next, ju_new);
        }
        u.swap(next);
    };

    const double dt = tenor / nt;
    int done = 0;
    const int startup = std::min(rannacher_steps, nt);
    for (; done < startup; ++done) {
        step(0.5 * dt, 1.0);
        step(0.5 * dt, 1.0);
    }
    for (; done < nt; ++done)
        step(dt, 0.5);
    return std::clamp(u[static_cast<std::size_t>(g.i_hat)], 0.0, 1.0);
}

} // namespace detail

/// Survival probability P(t_d > tenor) with a Richardson error estimate from
/// the grid with doubled space and time steps.
[[nodiscard]] inline FdmResult fdm_survival_detailed(const JumpDiffusionParams& p, double tenor,
                                                     const FdmGrid& grid = {})
{
    validate(p);
    require(tenor > 0.0, ErrorCode::InvalidArgument, "tenor must be positive");
    require(grid.nt >= 2 && grid.nx >= 8, ErrorCode::InvalidArgument, "FDM grid too small");
    if (p.leverage == 1.0)
        return {};
    const double x_max = grid.x_max > 0.0 ? grid.x_max : fdm_default_x_max(p, tenor);
    require(x_max > p.log_leverage(), ErrorCode::InvalidArgument, "x_max must exceed the log-leverage");
    FdmResult r;
    r.value = detail::fdm_survival_once(p, tenor, x_max, grid.nx, grid.nt, grid.rannacher_steps);
    r.coarse = detail::fdm_survival_once(p, tenor, x_max, grid.nx / 2, grid.nt / 2, grid.rannacher_steps);
    r.error_estimate = std::abs(r.value - r.coarse) / 3.0;
    return r;
}

/// Survival probability; throws GridTooCoarse when the error estimate exceeds 1e-4.
[[nodiscard]] inline double fdm_survival(const JumpDiffusionParams& p, double tenor, const FdmGrid& grid = {})
{
    const FdmResult r = fdm_survival_detailed(p, tenor, grid);
    if (r.error_estimate > kFdmTolerance)
        throw Error(ErrorCode::GridTooCoarse,
                    "FDM error estimate " + std::to_string(r.error_estimate) + " above tolerance");
    return r.value;
}

/// E[exp(-omega t_d)] from the stationary equation (L - omega) v = 0, v = 1 at
/// and below the barrier, zero slope at x_max. Solved by fixed-point iteration
/// on the jump term, which contracts with factor lambda / (lambda + omega).
[[nodiscard]] inline double fdm_passage_expectation(const JumpDiffusionParams& p, double omega, double x_max = 0.0,
                                                    int nx = 4000)
{
    validate(p);
    require(omega > 0.0, ErrorCode::InvalidArgument, "omega must be positive");
    const double x_hat = p.log_leverage();
    if (x_hat == 0.0)
        return 1.0;
    const double psi = log_drift(p);
    if (x_max <= 0.0) {
        // Far enough that v has decayed: v ~ exp(-gamma x) with gamma bounded below
        // by the root of the drift-diffusion part.
        const double slowest = std::min(diffusion_root(psi, p.sigma, omega), p.eta);
        x_max = x_hat + 40.0 / std::max(slowest, 1e-3);
    }
    const detail::FdmSpace g = detail::fdm_space(x_hat, x_max, nx);
    const int m = g.n;
    const double s2 = p.sigma * p.sigma;
    const double a = 0.5 * s2 / (g.h * g.h);
    const double c = psi / (2.0 * g.h);
    const double lo = a - c, di = -2.0 * a - p.lambda - omega, up = a + c;

    std::vector<double> v(static_cast<std::size_t>(m + 1), 0.0), jv(v.size()), lower, diag, upper, rhs;
    v[0] = 1.0;
    const detail::JumpIntegral jump(p.eta, g.h);
    for (int iter = 0; iter < 100000; ++iter) {
        // Jump integral over the absorbed half-line contributes exp(-eta x).
        std::vector<double> inside = v;
        inside[0] = 1.0;
        jump.apply(inside, jv);
        lower.assign(static_cast<std::size_t>(m), -lo);
        diag.assign(static_cast<std::size_t>(m), -di);
        upper.assign(static_cast<std::size_t>(m), -up);
        rhs.resize(static_cast<std::size_t>(m));
        for (int i = 1; i <= m; ++i) {
            const double x = i * g.h;
            rhs[static_cast<std::size_t>(i - 1)] = p.lambda * (jv[static_cast<std::size_t>(i)] + std::exp(-p.eta * x));
        }
        rhs[0] += lo * 1.0;
        lower[static_cast<std::size_t>(m - 1)] -= up;
        detail::solve_tridiagonal(lower, diag, upper, rhs);
        double change = 0.0;
        for (int i = 1; i <= m; ++i) {
            change = std::max(change, std::abs(rhs[static_cast<std::size_t>(i - 1)] - v[static_cast<std::size_t>(i)]));
            v[static_cast<std::size_t>(i)] = rhs[static_cast<std::size_t>(i - 1)];
        }
        if (change < 1e-13)
            return v[static_cast<std::size_t>(g.i_hat)];
    }
    throw Error(ErrorCode::NoConvergence, "stationary FDM iteration did not converge");
}

} // namespace jdcredit
