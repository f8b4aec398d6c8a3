#pragma once

#include <jdcredit/error.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace jdcredit::stats {

[[nodiscard]] inline double mean(std::span<const double> x)
{
    require(!x.empty(), ErrorCode::InvalidArgument, "mean of an empty sample");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Unbiased sample variance (divisor n - 1), two-pass.
[[nodiscard]] inline double sample_variance(std::span<const double> x)
{
    require(x.size() >= 2, ErrorCode::InvalidArgument, "sample variance needs two observations");
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x)
        ss += (v - m) * (v - m);
    return ss / static_cast<double>(x.size() - 1);
}

[[nodiscard]] inline double sample_sd(std::span<const double> x) { return std::sqrt(sample_variance(x)); }

/// Quantile of an ascending-sorted sample, linear interpolation between order
/// statistics at h = (n - 1) p (Hyndman-Fan type 7).
[[nodiscard]] inline double quantile_sorted(std::span<const double> sorted, double p)
{
    require(!sorted.empty(), ErrorCode::InvalidArgument, "quantile of an empty sample");
    require(p >= 0.0 && p <= 1.0, ErrorCode::InvalidArgument, "quantile level outside [0, 1]");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

[[nodiscard]] inline double quantile(std::vector<double> x, double p)
{
    std::sort(x.begin(), x.end());
    return quantile_sorted(x, p);
}

/// Median; for even sizes the midpoint of the central pair.
[[nodiscard]] inline double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

[[nodiscard]] inline double correlation(std::span<const double> x, std::span<const double> y)
{
    require(x.size() == y.size() && x.size() >= 2, ErrorCode::InvalidArgument,
            "correlation needs two equal-length samples of size >= 2");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    require(sxx > 0.0 && syy > 0.0, ErrorCode::ZeroVariance, "correlation of a constant sample");
    return sxy / std::sqrt(sxx * syy);
}

} // namespace jdcredit::stats
