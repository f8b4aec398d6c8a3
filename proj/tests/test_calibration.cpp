#include <jdcredit/calibration.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace jdcredit;

namespace {

TermStructure with_spreads(std::vector<double> maturities, std::vector<double> spreads)
{
    TermStructure ts{"F", "2020-01-01", {}};
    for (std::size_t i = 0; i < maturities.size(); ++i)
        ts.points.push_back({maturities[i], spreads[i]});
    return ts;
}

TermStructure priced(const JumpDiffusionParams& p, std::string firm, std::string date)
{
    TermStructure ts = price_term_structure(p, 0.6);
    ts.firm = std::move(firm);
    ts.date = std::move(date);
    return ts;
}

double max_abs_error(const CalibrationResult& r, const TermStructure& market)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < market.points.size(); ++i)
        worst = std::max(worst, std::abs(r.model_spreads[i] - market.points[i].spread_bp));
    return worst;
}

const JumpDiffusionParams kReference{.r = 0.02, .sigma = 0.2, .lambda = 0.4, .eta = 2.0, .leverage = 4.0};

} // namespace

TEST(Mape, IdenticalIsZero)
{
    const auto ts = with_spreads({1, 2, 3}, {50, 60, 70});
    EXPECT_EQ(mape(ts, ts), 0.0);
}

TEST(Mape, TwoPointExample)
{
    EXPECT_NEAR(mape(with_spreads({1, 2}, {100, 200}), with_spreads({1, 2}, {110, 180})), 0.1, 1e-15);
}

TEST(Mape, ZeroModelIsOne)
{
    const std::vector<double> m(kCanonicalMaturities.begin(), kCanonicalMaturities.end());
    EXPECT_DOUBLE_EQ(mape(with_spreads(m, std::vector<double>(10, 100.0)), with_spreads(m, std::vector<double>(10, 0.0))),
                     1.0);
}

TEST(Mape, GridMismatch)
{
    try {
        (void)mape(with_spreads({1, 2}, {100, 200}), with_spreads({1, 3}, {100, 200}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::GridMismatch);
    }
    EXPECT_THROW((void)mape(with_spreads({1, 2}, {100, 200}), with_spreads({1}, {100})), Error);
}

TEST(NelderMead, QuadraticBowl)
{
    const auto f = [](const std::vector<double>& x) {
        return (x[0] - 1.0) * (x[0] - 1.0) + 10.0 * (x[1] + 0.5) * (x[1] + 0.5);
    };
    NelderMeadOptions opt;
    opt.f_tol = 1e-14;
    const auto res = nelder_mead(f, {3.0, 3.0}, {-5.0, -5.0}, {5.0, 5.0}, opt);
    EXPECT_TRUE(res.converged);
    EXPECT_NEAR(res.x[0], 1.0, 1e-5);
    EXPECT_NEAR(res.x[1], -0.5, 1e-5);
}

TEST(NelderMead, RespectsBoxAtActiveBound)
{
    const auto f = [](const std::vector<double>& x) { return (x[0] - 10.0) * (x[0] - 10.0) + x[1] * x[1]; };
    const auto res = nelder_mead(f, {0.0, 1.0}, {-1.0, -1.0}, {2.0, 2.0});
    EXPECT_LE(res.x[0], 2.0);
    EXPECT_NEAR(res.x[0], 2.0, 1e-3);
}

TEST(NelderMead, RosenbrockWithinBudget)
{
    const auto f = [](const std::vector<double>& x) {
        return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
    };
    NelderMeadOptions opt;
    opt.f_tol = 1e-14;
    opt.restarts = 3;
    const auto res = nelder_mead(f, {-1.2, 1.0}, {-3.0, -3.0}, {3.0, 3.0}, opt);
    EXPECT_NEAR(res.x[0], 1.0, 1e-4);
    EXPECT_LE(res.evaluations, opt.max_evaluations + 3);
}

TEST(NelderMead, NonFiniteTreatedAsInfinite)
{
    const auto f = [](const std::vector<double>& x) { return x[0] < 0.0 ? std::nan("") : x[0] * x[0] + 1.0; };
    const auto res = nelder_mead(f, {1.0}, {-1.0}, {2.0});
    EXPECT_NEAR(res.x[0], 0.0, 1e-3);
    EXPECT_TRUE(std::isfinite(res.f));
}

TEST(NelderMead, BestValueMonotoneWithinEachRound)
{
    const auto market = priced(kReference, "F", "d");
    const auto f = [&](const std::vector<double>& z) {
        try {
            const auto p = to_jump_params({std::exp(z[0]), std::exp(z[1]), std::exp(z[2]), std::exp(z[3])}, 0.02);
            return mape(market, price_term_structure(p, 0.6));
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    NelderMeadOptions opt;
    opt.record_history = true;
    opt.max_evaluations = 600;
    opt.restarts = 2;
    const auto res = nelder_mead(f, {std::log(2.0), std::log(0.4), std::log(1.0), std::log(4.0)},
                                 {std::log(1.001), std::log(0.01), std::log(1e-4), std::log(0.1)},
                                 {std::log(100.0), std::log(1.5), std::log(5.0), std::log(50.0)}, opt);
    ASSERT_FALSE(res.history.empty());
    for (const auto& round : res.history)
        for (std::size_t i = 1; i < round.size(); ++i)
            EXPECT_LE(round[i], round[i - 1]);
}

TEST(NelderMead, RejectsBadInputs)
{
    const auto f = [](const std::vector<double>& x) { return x[0]; };
    EXPECT_THROW((void)nelder_mead(f, {0.0}, {1.0}, {0.0}), Error);
    EXPECT_THROW((void)nelder_mead(f, {0.0, 1.0}, {0.0}, {1.0}), Error);
}

TEST(CalibrateDay, SelfConsistencyAtReferenceParameters)
{
    const auto market = priced(kReference, "F", "2020-01-02");
    const auto res = calibrate_day(market, ModelTag::JumpDiffusion);
    EXPECT_LE(res.mape, 1e-3);
    EXPECT_LE(max_abs_error(res, market), 0.5);
    EXPECT_TRUE(res.converged);
    EXPECT_FALSE(res.unstable);
    EXPECT_EQ(res.parameters.size(), 4u);
    EXPECT_EQ(res.model_spreads.size(), 10u);
    for (double s : res.model_spreads)
        EXPECT_GT(s, 0.0);
}

TEST(CalibrateDay, DiffusionSelfConsistency)
{
    const DiffusionParams d{0.02, 0.3, 3.0};
    TermStructure market = price_term_structure(d, 0.6);
    market.firm = "D";
    market.date = "2020-01-02";
    const auto res = calibrate_day(market, ModelTag::Diffusion);
    EXPECT_LE(res.mape, 1e-3);
    EXPECT_LE(max_abs_error(res, market), 0.5);
    EXPECT_EQ(res.parameters.size(), 2u);
}

TEST(CalibrateDay, FlatOneBasisPointDiffusionBoundaryRun)
{
    // The near-riskless corner (leverage at its upper bound) prices every
    // maturity at essentially zero, i.e. MAPE 1. A thin-cushion, low-volatility
    // firm does better, so the fit is interior.
    const std::vector<double> m(kCanonicalMaturities.begin(), kCanonicalMaturities.end());
    const auto market = with_spreads(m, std::vector<double>(10, 1.0));
    const auto res = calibrate_day(market, ModelTag::Diffusion);
    EXPECT_TRUE(res.converged);
    EXPECT_TRUE(std::isfinite(res.mape));
    const auto corner = model_spreads(ModelTag::Diffusion, {100.0, 0.01}, 0.02, 0.6, kCanonicalMaturities);
    double corner_mape = 0.0;
    for (double s : corner)
        corner_mape += std::abs(1.0 - s) / 10.0;
    EXPECT_NEAR(corner_mape, 1.0, 1e-9);
    EXPECT_LT(res.mape, corner_mape);
}

TEST(CalibrateDay, MissingMaturityIsGridMismatch)
{
    auto market = priced(kReference, "F", "d");
    market.points.erase(market.points.begin() + 5);
    try {
        (void)calibrate_day(market, ModelTag::JumpDiffusion);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::GridMismatch);
    }
}

TEST(CalibrateDay, ParametersInsideBox)
{
    const auto market = priced({.r = 0.02, .sigma = 0.3, .lambda = 1.0, .eta = 1.0, .leverage = 2.5}, "F", "d");
    const auto res = calibrate_day(market, ModelTag::JumpDiffusion);
    const ParameterBox box;
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_GE(res.parameters[i], box.lower[i]);
        EXPECT_LE(res.parameters[i], box.upper[i]);
    }
}

TEST(CalibrateDay, DeterministicReplay)
{
    const auto market = priced({.r = 0.01, .sigma = 0.25, .lambda = 0.2, .eta = 3.0, .leverage = 3.0}, "F", "d");
    CalibrationOptions opt;
    opt.optimizer.max_evaluations = 300;
    const auto a = calibrate_day(market, ModelTag::JumpDiffusion, opt);
    const auto b = calibrate_day(market, ModelTag::JumpDiffusion, opt);
    EXPECT_EQ(a.parameters, b.parameters);
    EXPECT_EQ(a.model_spreads, b.model_spreads);
    EXPECT_EQ(a.mape, b.mape);
    EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(CalibrateDay, AllStartsFailed)
{
    // Spreads are positive, but the box excludes every priceable point.
    auto market = priced(kReference, "F", "d");
    CalibrationOptions opt;
    opt.pricing.gs_order = 0; // every evaluation throws
    try {
        (void)calibrate_day(market, ModelTag::JumpDiffusion, opt);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::AllStartsFailed);
    }
}

TEST(CalibrateDay, ModelTagParsing)
{
    EXPECT_EQ(parse_model_tag("jd"), ModelTag::JumpDiffusion);
    EXPECT_EQ(parse_model_tag("diffusion"), ModelTag::Diffusion);
    EXPECT_THROW((void)parse_model_tag("heston"), Error);
}

TEST(CalibratePanel, CountsForTwoFirmsThreeDays)
{
    std::vector<TermStructure> panel;
    for (const char* firm : {"A", "B"})
        for (const char* date : {"2020-01-01", "2020-01-02", "2020-01-03"})
            panel.push_back(priced(kReference, firm, date));
    CalibrationOptions opt;
    opt.optimizer.max_evaluations = 200;
    opt.workers = 2;
    const auto out = calibrate_panel(panel, ModelTag::JumpDiffusion, opt);
    EXPECT_EQ(out.results.size(), 6u);
    EXPECT_EQ(out.model_differences.size(), 4u);
    EXPECT_EQ(out.errors.size(), 6u);
    EXPECT_TRUE(out.failures.empty());
    EXPECT_EQ(out.results.front().firm, "A");
    EXPECT_EQ(out.results.back().firm, "B");
    EXPECT_EQ(out.model_differences.front().date, "2020-01-02");
}

TEST(CalibratePanel, FailuresAreRecordedNotFatal)
{
    std::vector<TermStructure> panel{priced(kReference, "A", "2020-01-01"), priced(kReference, "A", "2020-01-02")};
    panel[1].points.pop_back();
    CalibrationOptions opt;
    opt.optimizer.max_evaluations = 200;
    const auto out = calibrate_panel(panel, ModelTag::JumpDiffusion, opt);
    EXPECT_EQ(out.results.size(), 1u);
    ASSERT_EQ(out.failures.size(), 1u);
    EXPECT_EQ(out.failures[0].code, ErrorCode::GridMismatch);
    EXPECT_TRUE(out.model_differences.empty());
}

TEST(CalibratePanel, DuplicateFirmDayRejected)
{
    std::vector<TermStructure> panel{priced(kReference, "A", "2020-01-01"), priced(kReference, "A", "2020-01-01")};
    EXPECT_THROW((void)calibrate_panel(panel, ModelTag::JumpDiffusion), Error);
}

TEST(CalibratePanel, SelfConsistentErrorsAndWarmStart)
{
    // Two firms drifting slowly over five days.
    std::vector<TermStructure> panel;
    std::vector<JumpDiffusionParams> truth{kReference,
                                           {.r = 0.02, .sigma = 0.15, .lambda = 0.2, .eta = 5.0, .leverage = 3.0}};
    for (std::size_t f = 0; f < truth.size(); ++f)
        for (int d = 0; d < 5; ++d) {
            auto p = truth[f];
            p.leverage *= 1.0 + 0.01 * d;
            p.sigma *= 1.0 - 0.005 * d;
            panel.push_back(priced(p, "F" + std::to_string(f), "2020-01-0" + std::to_string(d + 1)));
        }
    const auto warm = calibrate_panel(panel, ModelTag::JumpDiffusion);
    CalibrationOptions cold_opt;
    cold_opt.warm_start = false;
    const auto cold = calibrate_panel(panel, ModelTag::JumpDiffusion, cold_opt);
    ASSERT_EQ(warm.results.size(), panel.size());
    ASSERT_EQ(cold.results.size(), panel.size());
    int no_worse = 0;
    for (std::size_t i = 0; i < panel.size(); ++i) {
        for (double e : warm.errors[i].values)
            EXPECT_LE(std::abs(e), 0.5);
        if (warm.results[i].mape <= cold.results[i].mape)
            ++no_worse;
    }
    EXPECT_GE(no_worse, static_cast<int>(0.95 * panel.size()));
}

TEST(CalibratePanel, RatesByDate)
{
    std::vector<TermStructure> panel{priced(kReference, "A", "2020-01-01")};
    CalibrationOptions opt;
    opt.optimizer.max_evaluations = 100;
    const auto out = calibrate_panel(panel, ModelTag::Diffusion, opt, {{"2020-01-01", 0.035}});
    ASSERT_EQ(out.results.size(), 1u);
    EXPECT_EQ(out.results[0].r, 0.035);
}
