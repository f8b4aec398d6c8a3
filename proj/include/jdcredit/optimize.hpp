#pragma once

// Box-constrained Nelder-Mead with dimension-adaptive coefficients
// (Gao and Han). Trial points are projected onto the box.

#include <jdcredit/error.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace jdcredit {

struct NelderMeadOptions {
    double f_tol = 1e-6;          // stop when max f - min f over the simplex falls below this
    int max_evaluations = 2000;   // per start, restarts included
    double initial_step = 0.1;    // initial edge as a fraction of the box width
    int restarts = 1;             // fresh simplices around the incumbent after convergence
    bool record_history = false;
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = std::numeric_limits<double>::infinity();
    int evaluations = 0;
    int iterations = 0;
    bool converged = false;
    std::vector<std::vector<double>> history; // per round: best simplex value after each iteration, if recorded
};

namespace detail {

inline std::vector<double> project(std::vector<double> x, const std::vector<double>& lo,
                                   const std::vector<double>& hi)
{
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = std::clamp(x[i], lo[i], hi[i]);
    return x;
}

} // namespace detail

/// Minimizes f over the box [lower, upper] starting from x0. Non-finite
/// objective values are treated as +inf.
[[nodiscard]] inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                                  const std::vector<double>& x0, const std::vector<double>& lower,
                                                  const std::vector<double>& upper,
                                                  const NelderMeadOptions& options = {})
{
    const std::size_t n = x0.size();
    require(n >= 1 && lower.size() == n && upper.size() == n, ErrorCode::InvalidArgument,
            "dimension mismatch in optimizer inputs");
    for (std::size_t i = 0; i < n; ++i)
        require(lower[i] < upper[i], ErrorCode::InvalidArgument, "empty optimization box");

    const double dn = static_cast<double>(n);
    const double alpha = 1.0;
    const double beta = 1.0 + 2.0 / dn;
    const double gamma = 0.75 - 1.0 / (2.0 * dn);
    const double delta = n > 1 ? 1.0 - 1.0 / dn : 0.5;

    NelderMeadResult result;
    auto eval = [&](const std::vector<double>& x) {
        ++result.evaluations;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    std::vector<double> incumbent = detail::project(x0, lower, upper);
    double incumbent_f = eval(incumbent);

    for (int round = 0; round <= options.restarts; ++round) {
        // Initial simplex: incumbent plus one step per coordinate, flipped if it leaves the box.
        std::vector<std::vector<double>> pts(n + 1, incumbent);
        std::vector<double> vals(n + 1, incumbent_f);
        for (std::size_t i = 0; i < n; ++i) {
            const double step = options.initial_step * (upper[i] - lower[i]);
            pts[i + 1][i] += (pts[i + 1][i] + step <= upper[i]) ? step : -step;
            pts[i + 1] = detail::project(pts[i + 1], lower, upper);
            vals[i + 1] = eval(pts[i + 1]);
        }

        bool converged = false;
        std::vector<std::size_t> order(n + 1);
        if (options.record_history)
            result.history.emplace_back();
        while (result.evaluations < options.max_evaluations) {
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
            const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
            if (std::isfinite(vals[worst]) && vals[worst] - vals[best] <= options.f_tol) {
                converged = true;
                break;
            }
            ++result.iterations;

            std::vector<double> centroid(n, 0.0);
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t i = 0; i < n; ++i)
                    centroid[i] += pts[order[k]][i] / dn;

            auto along = [&](double t) {
                std::vector<double> x(n);
                for (std::size_t i = 0; i < n; ++i)
                    x[i] = centroid[i] + t * (pts[worst][i] - centroid[i]);
                return detail::project(std::move(x), lower, upper);
            };

            const auto xr = along(-alpha);
            const double fr = eval(xr);
            if (fr < vals[best]) {
                const auto xe = along(-alpha * beta);
                const double fe = eval(xe);
                if (fe < fr) {
                    pts[worst] = xe;
                    vals[worst] = fe;
                } else {
                    pts[worst] = xr;
                    vals[worst] = fr;
                }
            } else if (fr < vals[second]) {
                pts[worst] = xr;
                vals[worst] = fr;
            } else {
                const bool outside = fr < vals[worst];
                const auto xc = along(outside ? -alpha * gamma : gamma);
                const double fc = eval(xc);
                if (fc < (outside ? fr : vals[worst])) {
                    pts[worst] = xc;
                    vals[worst] = fc;
                } else {
                    for (std::size_t k = 1; k <= n; ++k) {
                        auto& p = pts[order[k]];
                        for (std::size_t i = 0; i < n; ++i)
                            p[i] = pts[best][i] + delta * (p[i] - pts[best][i]);
                        p = detail::project(std::move(p), lower, upper);
                        vals[order[k]] = eval(p);
                    }
                }
            }
            if (options.record_history)
                result.history.back().push_back(*std::min_element(vals.begin(), vals.end()));
        }

        const auto it = std::min_element(vals.begin(), vals.end());
        const bool improved = *it < incumbent_f - options.f_tol;
        if (*it < incumbent_f) {
            incumbent_f = *it;
            incumbent = pts[static_cast<std::size_t>(it - vals.begin())];
        }
        result.converged = converged;
        if (!converged || !improved || result.evaluations >= options.max_evaluations)
            break;
    }
    result.x = incumbent;
    result.f = incumbent_f;
    return result;
}

} // namespace jdcredit
