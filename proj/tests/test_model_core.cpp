#include <jdcredit/model_core.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace jdcredit;

namespace {

JumpDiffusionParams random_params(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    JumpDiffusionParams p;
    p.r = -0.01 + 0.07 * u(rng);
    p.sigma = 0.02 + 0.8 * u(rng);
    p.lambda = std::exp(std::log(1e-3) + u(rng) * std::log(5.0 / 1e-3));
    p.eta = std::exp(std::log(0.2) + u(rng) * std::log(40.0 / 0.2));
    p.leverage = 1.0 + 20.0 * u(rng);
    return p;
}

} // namespace

TEST(JumpCompensator, MatchesClosedForm)
{
    EXPECT_DOUBLE_EQ(jump_compensator({.eta = 1.0}), -0.5);
    EXPECT_DOUBLE_EQ(jump_compensator({.eta = 3.0}), -0.25);
    EXPECT_NEAR(jump_compensator({.eta = 1e9}), 0.0, 1e-8);
}

TEST(JumpCompensator, StaysInOpenUnitInterval)
{
    for (double eta : {1e-6, 0.1, 1.0, 10.0, 1e6}) {
        const double xi = jump_compensator({.eta = eta});
        EXPECT_GT(xi, -1.0);
        EXPECT_LT(xi, 0.0);
    }
}

TEST(LogDrift, DirectSubstitution)
{
    EXPECT_NEAR(log_drift({.r = 0.02, .sigma = 0.2, .lambda = 0.0, .eta = 1.0}), 0.0, 1e-15);
    EXPECT_NEAR(log_drift({.r = 0.02, .sigma = 0.2, .lambda = 0.4, .eta = 1.0}), 0.2, 1e-15);
    EXPECT_NEAR(log_drift({.r = 0.05, .sigma = 0.3, .lambda = 0.1, .eta = 3.0}), 0.03, 1e-15);
}

TEST(LogDrift, ContinuousAtZeroIntensity)
{
    JumpDiffusionParams p{.r = 0.03, .sigma = 0.25, .lambda = 0.0, .eta = 2.0};
    const double at_zero = log_drift(p);
    p.lambda = 1e-10;
    EXPECT_NEAR(log_drift(p), at_zero, 1e-10);
}

TEST(GOfQ, VanishesAtOrigin)
{
    std::mt19937_64 rng(1);
    for (int i = 0; i < 100; ++i)
        EXPECT_EQ(g_of_q(random_params(rng), 0.0), 0.0);
}

TEST(GOfQ, PureDiffusionQuadratic)
{
    // psi = 0.02 - 0.02 = 0, so G(q) = 0.02 q^2.
    const JumpDiffusionParams p{.r = 0.02, .sigma = 0.2, .lambda = 0.0, .eta = 100.0};
    EXPECT_NEAR(g_of_q(p, 7.0710678), 1.0, 1e-6);
}

TEST(GOfQ, HandEvaluatedWithJumps)
{
    // psi = 0.4/3; G(1) = 0.02 - 0.4/3 + 0.4 = 43/150.
    const JumpDiffusionParams p{.r = 0.02, .sigma = 0.2, .lambda = 0.4, .eta = 2.0};
    EXPECT_NEAR(log_drift(p), 0.4 / 3.0, 1e-15);
    EXPECT_NEAR(g_of_q(p, 1.0), 43.0 / 150.0, 1e-14);
}

TEST(GOfQ, PoleThrows)
{
    const JumpDiffusionParams p{.r = 0.02, .sigma = 0.2, .lambda = 0.4, .eta = 2.0};
    try {
        (void)g_of_q(p, 2.0);
        FAIL() << "expected PoleAtEta";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::PoleAtEta);
    }
}

TEST(SolveRoots, Fig2ParamsResidualAndOrdering)
{
    const JumpDiffusionParams p{.r = 0.02, .sigma = 0.2, .lambda = 0.4, .eta = 2.0, .leverage = 4.0};
    const RootPair roots = solve_roots(p, 1.0);
    EXPECT_LT(roots.gamma, 2.0);
    EXPECT_GT(roots.gamma, 0.0);
    EXPECT_GT(roots.beta, 2.0);
    EXPECT_LE(std::abs(g_of_q(p, roots.beta) - 1.0), 1e-12);
    EXPECT_LE(std::abs(g_of_q(p, roots.gamma) - 1.0), 1e-12);
}

TEST(SolveRoots, JumplessLimitMatchesQuadraticRoot)
{
    const JumpDiffusionParams p{.r = 0.02, .sigma = 0.2, .lambda = 1e-8, .eta = 2.0, .leverage = 4.0};
    const double omega = 0.5;
    const RootPair roots = solve_roots(p, omega, /*lambda_floor=*/0.0);
    const double expected = diffusion_root(log_drift(p), p.sigma, omega);
    // The diffusion root may sit above eta, in which case beta takes over its role.
    const double candidate = expected < p.eta ? roots.gamma : roots.beta;
    EXPECT_NEAR(candidate, expected, 1e-4);
}

TEST(SolveRoots, BelowFloorIsDegenerate)
{
    const JumpDiffusionParams p{.r = 0.02, .sigma = 0.2, .lambda = 1e-7, .eta = 2.0};
    try {
        (void)solve_roots(p, 1.0);
        FAIL() << "expected DegenerateJumpless";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateJumpless);
    }
}

TEST(SolveRoots, RejectsNonPositiveOmega)
{
    EXPECT_THROW((void)solve_roots({.lambda = 0.4}, 0.0), Error);
}

TEST(SolveRoots, BothRootsIncreaseWithOmega)
{
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        const auto p = random_params(rng);
        const RootPair a = solve_roots(p, 0.3);
        const RootPair b = solve_roots(p, 0.6);
        EXPECT_GT(b.beta, a.beta);
        EXPECT_GT(b.gamma, a.gamma);
    }
}

TEST(SolveRootsProperty, ResidualAndBracketSweep)
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const auto p = random_params(rng);
        const double omega = std::exp(std::log(1e-3) + u(rng) * std::log(1e3 / 1e-3));
        // A single crossing on each branch: sign changes at the bracket ends.
        const double eps = 1e-9 * p.eta;
        ASSERT_LT(g_of_q(p, eps) - omega, 0.0);
        ASSERT_GT(g_of_q(p, p.eta - eps) - omega, 0.0);
        ASSERT_LT(g_of_q(p, p.eta + eps) - omega, 0.0);

        const RootPair roots = solve_roots(p, omega);
        ASSERT_LT(0.0, roots.gamma);
        ASSERT_LT(roots.gamma, p.eta);
        ASSERT_LT(p.eta, roots.beta);
        const double tol = 1e-12 * std::max(1.0, omega);
        const auto [res_beta, res_gamma] = root_residuals(p, omega, roots);
        EXPECT_LE(res_beta, tol) << "draw " << i;
        EXPECT_LE(res_gamma, tol) << "draw " << i;
        EXPECT_NEAR(roots.beta - p.eta, roots.beta_minus_eta, 1e-12 * roots.beta);
    }
}

TEST(SolveRootsComplex, AgreesWithRealSolverOnRealAxis)
{
    const JumpDiffusionParams p{.r = 0.02, .sigma = 0.2, .lambda = 0.4, .eta = 2.0, .leverage = 4.0};
    const RootPair real = solve_roots(p, 0.7);
    const ComplexRootPair cplx = solve_roots(p, std::complex<double>(0.7, 0.0));
    EXPECT_NEAR(cplx.beta.real(), real.beta, 1e-10);
    EXPECT_NEAR(cplx.gamma.real(), real.gamma, 1e-10);
    EXPECT_NEAR(cplx.beta.imag(), 0.0, 1e-10);
}

TEST(Validation, RejectsInvalidParams)
{
    EXPECT_THROW(validate(JumpDiffusionParams{.sigma = 0.0}), Error);
    EXPECT_THROW(validate(JumpDiffusionParams{.lambda = -1.0}), Error);
    EXPECT_THROW(validate(JumpDiffusionParams{.eta = 0.0}), Error);
    EXPECT_THROW(validate(JumpDiffusionParams{.leverage = 0.9}), Error);
    EXPECT_THROW(validate(ContractTerms{.tenor = 0.0}), Error);
    EXPECT_THROW(validate(ContractTerms{.tenor = 1.0, .recovery = 1.2}), Error);
}
