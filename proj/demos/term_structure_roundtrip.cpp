// Prices a jump-diffusion CDS term structure, calibrates both models back to
// it and prints the fitted spreads side by side.

#include <jdcredit/calibration.hpp>

#include <cstdio>

int main()
{
    using namespace jdcredit;
    const JumpDiffusionParams truth{0.02, 0.2, 0.4, 2.0, 4.0};
    TermStructure market = price_term_structure(truth, 0.6);
    market.firm = "DEMO";
    market.date = "2024-01-02";

    CalibrationOptions options;
    options.r = truth.r;
    const CalibrationResult jd = calibrate_day(market, ModelTag::JumpDiffusion, options);
    const CalibrationResult d = calibrate_day(market, ModelTag::Diffusion, options);

    std::printf("%8s %12s %12s %12s\n", "maturity", "market_bp", "jd_bp", "diffusion_bp");
    for (std::size_t i = 0; i < market.points.size(); ++i)
        std::printf("%8.1f %12.4f %12.4f %12.4f\n", market.points[i].maturity, market.points[i].spread_bp,
                    jd.model_spreads[i], d.model_spreads[i]);
    std::printf("MAPE  jump-diffusion %.2e  diffusion %.2e\n", jd.mape, d.mape);
    std::printf("jump-diffusion fit: leverage %.4f sigma %.4f lambda %.4f eta %.4f\n", jd.parameters[0],
                jd.parameters[1], jd.parameters[2], jd.parameters[3]);
    return 0;
}
