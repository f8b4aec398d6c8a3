// Command-line front end: price, calibrate, factors, regress, validate,
// simulate, figures.

#include <jdcredit/pipeline.hpp>
#include <jdcredit/synthetic.hpp>
#include <jdcredit/validation.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>

namespace {

using namespace jdcredit;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitComputation = 1;
constexpr int kExitInput = 2;

void report_error(std::string_view code, std::string_view message, int exit_code)
{
    const nlohmann::json j{{"error", code}, {"message", message}, {"exit", exit_code}};
    std::cerr << j.dump() << '\n';
}

void progress(const std::string& message)
{
    std::cerr << message << '\n';
}

std::string format_bp(double v) { return format_fixed(v, 4); }

// ---------------------------------------------------------------------------

struct PriceArgs {
    std::string model = "jd";
    double leverage = 4.0, sigma = 0.2, lambda = 0.4, eta = 2.0, r = 0.02, recovery = 0.6;
    std::vector<double> maturities{kCanonicalMaturities.begin(), kCanonicalMaturities.end()};
    int gs_order = kDefaultGaverStehfestOrder;
    std::string out;
};

int run_price(const PriceArgs& a)
{
    const ModelTag tag = parse_model_tag(a.model);
    TermStructure ts;
    if (tag == ModelTag::JumpDiffusion) {
        PricingConfig cfg;
        cfg.gs_order = a.gs_order;
        ts = price_term_structure(JumpDiffusionParams{a.r, a.sigma, a.lambda, a.eta, a.leverage}, a.recovery,
                                  a.maturities, cfg);
    } else {
        ts = price_term_structure(DiffusionParams{a.r, a.sigma, a.leverage}, a.recovery, a.maturities);
    }
    if (!a.out.empty()) {
        CsvWriter w(a.out, {"schema_version", "model", "maturity", "spread_bp", "spread_bp_display"});
        for (const auto& p : ts.points)
            w.row({std::to_string(kSchemaVersion), std::string(to_string(tag)), format_double(p.maturity),
                   format_double(p.spread_bp), format_bp(p.spread_bp)});
        return kExitOk;
    }
    for (const auto& p : ts.points)
        std::cout << format_double(p.maturity) << ',' << format_bp(p.spread_bp) << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct CalibrateArgs {
    std::string bundle, out, model = "jd";
    double recovery = 0.6;
    unsigned workers = 0;
    std::uint64_t seed = 20240101;
    int schema_version = kSchemaVersion;
    int staleness = 20;
    bool no_winsorize = false;
};

int run_calibrate(const CalibrateArgs& a)
{
    const ModelTag tag = parse_model_tag(a.model);
    LoadOptions lo;
    lo.staleness_limit = a.staleness;
    lo.winsorize_spreads = !a.no_winsorize;
    const DatasetBundle b = load_bundle(a.bundle, a.schema_version, lo);
    for (const auto& e : b.excluded)
        progress("excluded " + e.firm + ": " + e.reason);
    progress("calibrating " + std::to_string(b.cds.size()) + " firm-days (" + std::string(to_string(tag)) + ")");

    CalibrationOptions co;
    co.recovery = a.recovery;
    co.seed = a.seed;
    co.workers = a.workers;
    const PanelCalibration pc = calibrate_panel(b.cds, tag, co, b.rates);

    std::map<std::pair<std::string, std::string>, const TermStructure*> market;
    for (const auto& ts : b.cds)
        market[{ts.firm, ts.date}] = &ts;
    std::vector<StoredCalibration> store;
    for (const auto& r : pc.results) {
        StoredCalibration s{r, {}, {}};
        for (const auto& p : market.at({r.firm, r.date})->points) {
            s.maturities.push_back(p.maturity);
            s.market_bp.push_back(p.spread_bp);
        }
        store.push_back(std::move(s));
    }
    fs::create_directories(a.out);
    write_calibration_store(a.out, store, pc.failures);
    {
        CsvWriter w(fs::path(a.out) / "exclusions.csv", {"schema_version", "firm", "reason"});
        for (const auto& e : b.excluded)
            w.row({std::to_string(kSchemaVersion), e.firm, e.reason});
    }
    RunManifest m;
    m.command = "calibrate";
    m.seed = a.seed;
    m.config = {{"model", to_string(tag)},
                {"recovery", a.recovery},
                {"schema_version", a.schema_version},
                {"staleness_limit", a.staleness},
                {"winsorize", !a.no_winsorize},
                {"maturities", co.maturities},
                {"gs_order", co.pricing.gs_order},
                {"lhs_samples", co.lhs_samples},
                {"f_tol", co.optimizer.f_tol},
                {"max_evaluations", co.optimizer.max_evaluations}};
    m.inputs = b.file_hashes;
    m.write(fs::path(a.out) / "manifest.json");

    std::size_t unconverged = 0;
    for (const auto& r : pc.results)
        unconverged += r.converged ? 0 : 1;
    progress("done: " + std::to_string(pc.results.size()) + " calibrated, " + std::to_string(unconverged)
             + " not converged, " + std::to_string(pc.failures.size()) + " failed");
    return pc.results.empty() && !pc.failures.empty() ? kExitComputation : kExitOk;
}

// ---------------------------------------------------------------------------

struct FactorsArgs {
    std::string bundle, out;
    int schema_version = kSchemaVersion;
    bool freeze_groups = false;
    std::string volatility = "std";
};

int run_factors(const FactorsArgs& a)
{
    const DatasetBundle b = load_bundle(a.bundle, a.schema_version);
    FactorOptions fo;
    fo.freeze_groups = a.freeze_groups;
    require(a.volatility == "std" || a.volatility == "variance", ErrorCode::InvalidArgument,
            "--volatility must be 'std' or 'variance'");
    fo.volatility_measure = a.volatility == "std" ? VolatilityMeasure::StandardDeviation : VolatilityMeasure::Variance;
    const FactorTable t = build_factor_table(b, fo);
    for (const auto& s : t.skipped)
        progress("skipped " + s);
    const fs::path out(a.out);
    if (out.has_parent_path())
        fs::create_directories(out.parent_path());
    write_factor_table(out, t.rows);
    progress("wrote " + std::to_string(t.rows.size()) + " factor rows");
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct RegressArgs {
    std::string calibration, factors, spec, out;
    unsigned workers = 0;
};

int run_regress(const RegressArgs& a)
{
    nlohmann::json spec_json;
    try {
        spec_json = nlohmann::json::parse(read_file(a.spec));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("regression spec: ") + e.what());
    }
    const RegressionSpec spec = parse_regression_spec(spec_json);
    const auto store = read_calibration_store(a.calibration);
    const auto factors = read_factor_table(a.factors);
    progress("regressing " + std::to_string(spec.quantiles.size()) + " quantiles x "
             + std::to_string(spec.maturities.size()) + " maturities");
    const RegressionReport report = run_regressions(store, factors, spec, a.workers);
    write_regression_report(a.out, report, spec);
    for (const auto& v : report.vif)
        if (v.flagged)
            progress("VIF above " + format_double(kVifThreshold) + ": " + v.regressor + " at "
                     + format_double(v.maturity) + "y (" + format_double(v.vif) + ")");

    RunManifest m;
    m.command = "regress";
    m.seed = spec.seed;
    m.config = spec.to_json();
    m.inputs["calibration.csv"] = fnv1a(read_file(fs::path(a.calibration) / "calibration.csv"));
    m.inputs["spreads.csv"] = fnv1a(read_file(fs::path(a.calibration) / "spreads.csv"));
    m.inputs["factors.csv"] = fnv1a(read_file(a.factors));
    m.write(fs::path(a.out) / "manifest.json");
    progress("wrote " + std::to_string(report.coefficients.size()) + " coefficients, "
             + std::to_string(report.failures.size()) + " failed fits");
    return report.coefficients.empty() ? kExitComputation : kExitOk;
}

// ---------------------------------------------------------------------------

int run_validate(int draws)
{
    ValidationOptions o;
    o.par_bond_draws = draws;
    bool ok = true;
    for (const auto& c : run_validation(o)) {
        std::printf("%-45s max error %.3e  tolerance %.0e  %s\n", c.name.c_str(), c.max_error, c.tolerance,
                    c.passed() ? "PASS" : "FAIL");
        ok = ok && c.passed();
    }
    return ok ? kExitOk : kExitComputation;
}

// ---------------------------------------------------------------------------

int run_simulate(const SimulationOptions& o, const std::string& out)
{
    const SimulatedData sim = simulate_bundle(o);
    write_bundle(out, sim.bundle);
    write_truth(fs::path(out) / "truth.csv", sim.truth);
    {
        CsvWriter w(fs::path(out) / "transition_factor.csv", {"schema_version", "date", "value"});
        for (const auto& x : sim.transition_factor)
            w.row({std::to_string(kSchemaVersion), x.date, format_double(x.value)});
    }
    progress("wrote " + std::to_string(o.firms) + " firms x " + std::to_string(o.days) + " days to " + out);
    return kExitOk;
}

// ---------------------------------------------------------------------------

// Tidy plot data: bond price, CDS spread and green spread against tenor for
// several eta, at V = 4, V_def = 1, r = 0.02, sigma = 0.2, lambda = 0.4.
int run_figures(const std::string& out)
{
    fs::create_directories(out);
    const std::vector<double> etas{1.0, 2.0, 4.0, 8.0, 16.0};
    std::vector<double> tenors;
    for (double t = 0.5; t <= 30.0 + 1e-9; t += 0.5)
        tenors.push_back(t);
    const std::string v = std::to_string(kSchemaVersion);
    CsvWriter bond(fs::path(out) / "bond_price.csv", {"schema_version", "eta", "tenor", "price"});
    CsvWriter cds(fs::path(out) / "cds_spread.csv", {"schema_version", "eta", "tenor", "spread_bp"});
    CsvWriter green(fs::path(out) / "green_spread.csv", {"schema_version", "eta", "tenor", "spread_bp"});
    for (double eta : etas) {
        const JumpDiffusionParams p{0.02, 0.2, 0.4, eta, 4.0};
        for (double t : tenors) {
            bond.row({v, format_double(eta), format_double(t), format_double(bond_price(p, {t, 0.0, 0.6}))});
            cds.row({v, format_double(eta), format_double(t),
                     format_double(cds_spread(p, {t, 0.0, 0.6}) * kBasisPoints)});
            green.row({v, format_double(eta), format_double(t), format_double(green_spread(p, t) * kBasisPoints)});
        }
    }
    progress("wrote bond_price.csv, cds_spread.csv, green_spread.csv to " + out);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Jump-diffusion structural credit model: pricing, calibration, factors, regressions"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "jdcredit 0.1.0");

    PriceArgs pa;
    auto* price = app.add_subcommand("price", "Price a CDS term structure");
    price->add_option("--model", pa.model, "jd or d")->capture_default_str();
    price->add_option("--leverage", pa.leverage, "V / V_def")->capture_default_str();
    price->add_option("--sigma", pa.sigma)->capture_default_str();
    price->add_option("--lambda", pa.lambda)->capture_default_str();
    price->add_option("--eta", pa.eta)->capture_default_str();
    price->add_option("--r", pa.r)->capture_default_str();
    price->add_option("--recovery", pa.recovery)->capture_default_str();
    price->add_option("--maturities", pa.maturities, "Maturity grid in years")->delimiter(',');
    price->add_option("--gs-order", pa.gs_order)->capture_default_str();
    price->add_option("--out", pa.out, "Write CSV here instead of standard output");

    CalibrateArgs ca;
    auto* calibrate = app.add_subcommand("calibrate", "Calibrate every firm-day of a bundle");
    calibrate->add_option("--bundle", ca.bundle)->required();
    calibrate->add_option("--out", ca.out)->required();
    calibrate->add_option("--model", ca.model)->capture_default_str();
    calibrate->add_option("--recovery", ca.recovery)->capture_default_str();
    calibrate->add_option("--workers", ca.workers, "0 reads JDCREDIT_WORKERS or uses all cores");
    calibrate->add_option("--seed", ca.seed)->capture_default_str();
    calibrate->add_option("--schema-version", ca.schema_version)->capture_default_str();
    calibrate->add_option("--staleness", ca.staleness, "Max identical consecutive quotes")->capture_default_str();
    calibrate->add_flag("--no-winsorize", ca.no_winsorize);

    FactorsArgs fa;
    auto* factors = app.add_subcommand("factors", "Build the factor table from a bundle");
    factors->add_option("--bundle", fa.bundle)->required();
    factors->add_option("--out", fa.out, "Factor table CSV path")->required();
    factors->add_option("--schema-version", fa.schema_version)->capture_default_str();
    factors->add_flag("--freeze-groups", fa.freeze_groups, "Keep the first date's green/brown groups");
    factors->add_option("--volatility", fa.volatility, "std or variance")->capture_default_str();

    RegressArgs ra;
    auto* regress = app.add_subcommand("regress", "Two-step panel quantile regressions");
    regress->add_option("--calibration", ra.calibration, "Calibration store directory")->required();
    regress->add_option("--factors", ra.factors, "Factor table CSV")->required();
    regress->add_option("--spec", ra.spec, "Regression spec JSON")->required();
    regress->add_option("--out", ra.out)->required();
    regress->add_option("--workers", ra.workers);

    int draws = 1000;
    auto* validate_cmd = app.add_subcommand("validate", "Oracle agreement and exactness checks");
    validate_cmd->add_option("--par-bond-draws", draws)->capture_default_str();

    SimulationOptions so;
    std::string sim_out;
    auto* simulate = app.add_subcommand("simulate", "Write a synthetic bundle with known parameters");
    simulate->add_option("--out", sim_out)->required();
    simulate->add_option("--firms", so.firms)->capture_default_str();
    simulate->add_option("--days", so.days)->capture_default_str();
    simulate->add_option("--history", so.history_days, "Price-only leading days")->capture_default_str();
    simulate->add_option("--seed", so.seed)->capture_default_str();
    simulate->add_option("--loading", so.transition_loading)->capture_default_str();
    simulate->add_option("--noise", so.quote_noise, "Relative quote noise")->capture_default_str();

    std::string fig_out;
    auto* figures = app.add_subcommand("figures", "Write tidy plot data for price and spread sensitivities");
    figures->add_option("--out", fig_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_error("InvalidArgument", e.what(), kExitInput);
        return kExitInput;
    }

    try {
        if (*price)
            return run_price(pa);
        if (*calibrate)
            return run_calibrate(ca);
        if (*factors)
            return run_factors(fa);
        if (*regress)
            return run_regress(ra);
        if (*validate_cmd)
            return run_validate(draws);
        if (*simulate)
            return run_simulate(so, sim_out);
        if (*figures)
            return run_figures(fig_out);
    } catch (const Error& e) {
        const int code = is_input_error(e.code()) ? kExitInput : kExitComputation;
        report_error(to_string(e.code()), e.what(), code);
        return code;
    } catch (const std::exception& e) {
        report_error("Internal", e.what(), kExitComputation);
        return kExitComputation;
    }
    return kExitOk;
}
