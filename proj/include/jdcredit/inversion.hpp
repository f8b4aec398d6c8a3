#pragma once

// Numerical Laplace inversion. Gaver-Stehfest is the pricing path; the
// Bromwich (Euler-summation) inversion is kept as a validation tool.

#include <jdcredit/error.hpp>

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <type_traits>
#include <vector>

namespace jdcredit {

inline constexpr int kMaxGaverStehfestOrder = 10;
inline constexpr int kDefaultGaverStehfestOrder = 8;

namespace detail {

inline long double binomial(int n, int k)
{
    if (k < 0 || k > n)
        return 0.0L;
    long double c = 1.0L;
    for (int i = 1; i <= k; ++i)
        c = c * static_cast<long double>(n - k + i) / static_cast<long double>(i);
    return c;
}

} // namespace detail

/// The 2M Gaver-Stehfest weights alpha_1..alpha_2M, accumulated in long double.
[[nodiscard]] inline std::vector<long double> gs_weights(int m)
{
    if (m > kMaxGaverStehfestOrder)
        throw Error(ErrorCode::OrderTooLarge,
                    "Gaver-Stehfest order above " + std::to_string(kMaxGaverStehfestOrder));
    require(m >= 1, ErrorCode::InvalidArgument, "Gaver-Stehfest order must be >= 1");

    long double m_factorial = 1.0L;
    for (int i = 2; i <= m; ++i)
        m_factorial *= i;

    std::vector<long double> weights(static_cast<std::size_t>(2 * m));
    for (int k = 1; k <= 2 * m; ++k) {
        long double sum = 0.0L;
        for (int j = (k + 1) / 2; j <= std::min(k, m); ++j) {
            sum += std::pow(static_cast<long double>(j), m + 1) * detail::binomial(m, j)
                * detail::binomial(2 * j, j) * detail::binomial(j, k - j);
        }
        const long double sign = ((m + k) % 2 == 0) ? 1.0L : -1.0L;
        weights[static_cast<std::size_t>(k - 1)] = sign * sum / m_factorial;
    }
    return weights;
}

class GaverStehfestConfig {
public:
    explicit GaverStehfestConfig(int m = kDefaultGaverStehfestOrder) : m_(m), weights_(gs_weights(m)) {}

    [[nodiscard]] int order() const { return m_; }
    [[nodiscard]] const std::vector<long double>& weights() const { return weights_; }

    /// Node k (1-based) for a given horizon: k ln2 / horizon.
    [[nodiscard]] static double node(int k, double horizon) { return k * std::numbers::ln2 / horizon; }

private:
    int m_;
    std::vector<long double> weights_;
};

/// Shared immutable configuration per order.
[[nodiscard]] inline const GaverStehfestConfig& gaver_stehfest(int m = kDefaultGaverStehfestOrder)
{
    static const std::array<GaverStehfestConfig, kMaxGaverStehfestOrder> configs = [] {
        return std::array<GaverStehfestConfig, kMaxGaverStehfestOrder>{
            GaverStehfestConfig(1), GaverStehfestConfig(2), GaverStehfestConfig(3),
            GaverStehfestConfig(4), GaverStehfestConfig(5), GaverStehfestConfig(6),
            GaverStehfestConfig(7), GaverStehfestConfig(8), GaverStehfestConfig(9),
            GaverStehfestConfig(10)};
    }();
    if (m > kMaxGaverStehfestOrder)
        throw Error(ErrorCode::OrderTooLarge,
                    "Gaver-Stehfest order above " + std::to_string(kMaxGaverStehfestOrder));
    require(m >= 1, ErrorCode::InvalidArgument, "Gaver-Stehfest order must be >= 1");
    return configs[static_cast<std::size_t>(m - 1)];
}

/// Phi(horizon) ~ (ln2 / horizon) sum_k alpha_k F(k ln2 / horizon).
/// The weighted sum amplifies rounding in F by roughly sum_k |alpha_k| / k, so
/// a transform returning long double is evaluated at extended-precision nodes.
template <typename Transform>
[[nodiscard]] double gs_invert(Transform&& transform, double horizon,
                               const GaverStehfestConfig& config = gaver_stehfest())
{
    require(horizon > 0.0 && std::isfinite(horizon), ErrorCode::InvalidArgument,
            "inversion horizon must be positive");
    using Node = std::conditional_t<
        std::is_same_v<std::remove_cvref_t<std::invoke_result_t<Transform&, long double>>, long double>,
        long double, double>;
    const auto& w = config.weights();
    const long double scale = std::numbers::ln2_v<long double> / horizon;
    long double sum = 0.0L;
    for (std::size_t k = 1; k <= w.size(); ++k) {
        const Node omega = static_cast<Node>(static_cast<long double>(k) * scale);
        long double value;
        try {
            value = transform(omega);
        } catch (const Error& e) {
            throw Error(ErrorCode::TransformEvaluationFailed, e.what());
        }
        sum += w[k - 1] * value;
    }
    return static_cast<double>(scale * sum);
}

struct BromwichConfig {
    double a = 18.4; // damping; discretization error is about exp(-a)
    int terms = 21;  // partial sums before Euler averaging
    int euler = 11;  // binomial averaging depth
};

/// Inversion along the Bromwich line Re(s) = a / (2 horizon), trapezoidal rule
/// accelerated by Euler summation. Needs complex evaluations of the transform.
template <typename Transform>
[[nodiscard]] double bromwich_invert(Transform&& transform, double horizon, const BromwichConfig& config = {})
{
    using C = std::complex<double>;
    require(horizon > 0.0 && std::isfinite(horizon), ErrorCode::InvalidArgument,
            "inversion horizon must be positive");
    const double shift = config.a / (2.0 * horizon);
    const double step = std::numbers::pi / horizon;

    auto term = [&](int k) -> double {
        C value;
        try {
            value = transform(C(shift, k * step));
        } catch (const Error& e) {
            throw Error(ErrorCode::ContourFailure, e.what());
        }
        if (!std::isfinite(value.real()))
            throw Error(ErrorCode::ContourFailure, "non-finite transform value on the contour");
        return value.real();
    };

    std::vector<double> partial(static_cast<std::size_t>(config.terms + config.euler + 1));
    double sum = 0.5 * term(0);
    partial[0] = sum;
    for (int k = 1; k <= config.terms + config.euler; ++k) {
        sum += ((k % 2 == 0) ? 1.0 : -1.0) * term(k);
        partial[static_cast<std::size_t>(k)] = sum;
    }
    double averaged = 0.0;
    for (int j = 0; j <= config.euler; ++j)
        averaged += static_cast<double>(detail::binomial(config.euler, j)) * partial[static_cast<std::size_t>(config.terms + j)];
    averaged /= std::pow(2.0, config.euler);

    const double result = std::exp(config.a / 2.0) / horizon * averaged;
    if (!std::isfinite(result))
        throw Error(ErrorCode::ContourFailure, "Bromwich sum diverged");
    return result;
}

} // namespace jdcredit
