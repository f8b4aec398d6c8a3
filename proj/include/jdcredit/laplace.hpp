#pragma once

// Closed-form Laplace transforms (in maturity) of the default probability,
// the defaultable coupon bond and the two CDS legs.

#include <jdcredit/model_core.hpp>

#include <algorithm>
#include <complex>

namespace jdcredit {

namespace detail {

inline constexpr double kMaxExponent = 700.0;

inline double capped_exp_neg(double z) { return std::exp(-std::min(z, kMaxExponent)); }

inline std::complex<double> capped_exp_neg(std::complex<double> z)
{
    return std::exp(-std::complex<double>(std::min(z.real(), kMaxExponent), z.imag()));
}

inline double expm1_neg(double z) { return std::expm1(-std::min(z, kMaxExponent)); }

// exp(-z) - 1 without cancellation for small |z|.
inline std::complex<double> expm1_neg(std::complex<double> z)
{
    const double x = -std::min(z.real(), kMaxExponent);
    const double y = -z.imag();
    const double half_sin = std::sin(0.5 * y);
    return {std::expm1(x) * std::cos(y) - 2.0 * half_sin * half_sin, std::exp(x) * std::sin(y)};
}

} // namespace detail

/// E[exp(-omega t_d)] together with its complement 1 - E, each evaluated
/// without cancellation.
template <typename Scalar>
struct PassageValue {
    Scalar expectation;
    Scalar complement;
};

namespace detail {

template <typename Scalar>
PassageValue<Scalar> passage_value(double eta, Scalar beta, Scalar gamma, Scalar beta_minus_eta,
                                   Scalar eta_minus_gamma, double x_hat)
{
    // The two coefficients sum to one.
    const Scalar denom = eta * (beta_minus_eta + eta_minus_gamma);
    const Scalar c_beta = gamma * beta_minus_eta / denom;
    const Scalar c_gamma = beta * eta_minus_gamma / denom;
    return {c_beta * capped_exp_neg(beta * x_hat) + c_gamma * capped_exp_neg(gamma * x_hat),
            -(c_beta * expm1_neg(beta * x_hat) + c_gamma * expm1_neg(gamma * x_hat))};
}

} // namespace detail

[[nodiscard]] inline PassageValue<double> first_passage_value(const JumpDiffusionParams& p, double omega,
                                                              double lambda_floor = kLambdaFloor)
{
    const RootPair roots = solve_roots(p, omega, lambda_floor);
    return detail::passage_value(p.eta, roots.beta, roots.gamma, roots.beta_minus_eta, roots.eta_minus_gamma,
                                 p.log_leverage());
}

[[nodiscard]] inline PassageValue<std::complex<double>> first_passage_value(const JumpDiffusionParams& p,
                                                                            std::complex<double> omega)
{
    const ComplexRootPair roots = solve_roots(p, omega);
    return detail::passage_value(p.eta, roots.beta, roots.gamma, roots.beta - p.eta, p.eta - roots.gamma,
                                 p.log_leverage());
}

/// E[exp(-omega t_d)], the bracketed term of the first-passage transform.
[[nodiscard]] inline double first_passage_expectation(const JumpDiffusionParams& p, double omega,
                                                      double lambda_floor = kLambdaFloor)
{
    return first_passage_value(p, omega, lambda_floor).expectation;
}

[[nodiscard]] inline std::complex<double> first_passage_expectation(const JumpDiffusionParams& p,
                                                                    std::complex<double> omega)
{
    return first_passage_value(p, omega).expectation;
}

/// H(omega) = E[exp(-omega t_d)] / omega, the transform of the default probability.
template <typename Scalar>
[[nodiscard]] Scalar first_passage_transform(const JumpDiffusionParams& p, Scalar omega)
{
    return first_passage_expectation(p, omega) / omega;
}

[[nodiscard]] inline double first_passage_transform(const JumpDiffusionParams& p, double omega,
                                                    double lambda_floor)
{
    return first_passage_expectation(p, omega, lambda_floor) / omega;
}

namespace detail {

inline void check_shift(const JumpDiffusionParams& p, double omega)
{
    require(omega > 0.0 && omega + p.r > 0.0, ErrorCode::InvalidArgument,
            "transform argument requires omega > max(0, -r)");
}
inline void check_shift(const JumpDiffusionParams& p, std::complex<double> omega)
{
    require(omega.real() > 0.0 && omega.real() + p.r > 0.0, ErrorCode::InvalidArgument,
            "transform argument requires Re(omega) > max(0, -r)");
}

} // namespace detail

// The bond and premium-leg transforms carry 1/r factors that cancel
// identically. Writing H(w + r) = E / (w + r) and using 1 - E directly gives
// forms that hold for any r, including r = 0, and stay accurate when E is
// close to 0 or 1:
//   bond       (1 - E)(w + b) / (w (w + r)) + recovery E / w
//   premium    (1 - E) / (w (w + r))
//   protection (1 - recovery) E / w
// Each takes the passage value at the shifted argument w + r.

template <typename Scalar>
[[nodiscard]] Scalar bond_transform_from_passage(const ContractTerms& terms, double r, Scalar omega,
                                                 const PassageValue<Scalar>& shifted)
{
    return shifted.complement * (omega + terms.coupon) / (omega * (omega + r))
        + terms.recovery * shifted.expectation / omega;
}

template <typename Scalar>
[[nodiscard]] Scalar premium_leg_transform_from_passage(double r, Scalar omega, const PassageValue<Scalar>& shifted)
{
    return shifted.complement / (omega * (omega + r));
}

template <typename Scalar>
[[nodiscard]] Scalar protection_leg_transform_from_passage(const ContractTerms& terms, Scalar omega,
                                                           const PassageValue<Scalar>& shifted)
{
    return (1.0 - terms.recovery) * shifted.expectation / omega;
}

namespace detail {

inline PassageValue<double> shifted_passage(const JumpDiffusionParams& p, double omega,
                                            double lambda_floor = kLambdaFloor)
{
    check_shift(p, omega);
    return first_passage_value(p, omega + p.r, lambda_floor);
}

inline PassageValue<std::complex<double>> shifted_passage(const JumpDiffusionParams& p, std::complex<double> omega)
{
    check_shift(p, omega);
    return first_passage_value(p, omega + p.r);
}

} // namespace detail

template <typename Scalar>
[[nodiscard]] Scalar bond_transform(const JumpDiffusionParams& p, const ContractTerms& terms, Scalar omega)
{
    return bond_transform_from_passage(terms, p.r, omega, detail::shifted_passage(p, omega));
}

template <typename Scalar>
[[nodiscard]] Scalar premium_leg_transform(const JumpDiffusionParams& p, const ContractTerms& /*terms*/,
                                           Scalar omega)
{
    return premium_leg_transform_from_passage(p.r, omega, detail::shifted_passage(p, omega));
}

template <typename Scalar>
[[nodiscard]] Scalar protection_leg_transform(const JumpDiffusionParams& p, const ContractTerms& terms,
                                              Scalar omega)
{
    if (terms.recovery == 1.0) {
        detail::check_shift(p, omega);
        return Scalar(0.0);
    }
    return protection_leg_transform_from_passage(terms, omega, detail::shifted_passage(p, omega));
}

} // namespace jdcredit
