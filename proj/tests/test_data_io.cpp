#include <jdcredit/pipeline.hpp>
#include <jdcredit/synthetic.hpp>
#include <jdcredit/validation.hpp>

#include <gtest/gtest.h>

#include <cstring>
#include <unistd.h>
#include <fstream>
#include <random>

using namespace jdcredit;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir()
    {
        static int counter = 0;
        path_ = fs::temp_directory_path()
            / ("jdcredit_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    [[nodiscard]] const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

// Toy bundle: firms x days with distinct, slowly varying quotes.
DatasetBundle toy_bundle(int firms, int days)
{
    SimulationOptions o;
    o.firms = firms;
    o.days = days;
    o.history_days = 5;
    o.seed = 11;
    return simulate_bundle(o).bundle;
}

void write_text(const fs::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::string read_text(const fs::path& p) { return read_file(p); }

ErrorCode code_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::InvalidArgument;
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

} // namespace

TEST(FormatDouble, ShortestRoundTrip)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 10000; ++i) {
        const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
        const std::string s = format_double(v);
        EXPECT_TRUE(bit_equal(std::stod(s), v)) << s;
    }
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_fixed(189.32451, 4), "189.3245");
}

TEST(Csv, ParsesHeaderRowsAndCrlf)
{
    std::istringstream in("schema_version,a,b\r\n1,x,2.5\r\n\r\n1,y,3\r\n");
    const CsvTable t = parse_csv(in, "t.csv");
    ASSERT_EQ(t.size(), 2u);
    EXPECT_EQ(t.text(1, 1), "y");
    EXPECT_DOUBLE_EQ(t.number(0, 2), 2.5);
    t.require_schema_version(1);
}

TEST(Csv, FieldCountMismatchIsSchemaError)
{
    std::istringstream in("a,b\n1\n");
    EXPECT_EQ(code_of([&] { (void)parse_csv(in, "t.csv"); }), ErrorCode::SchemaMismatch);
}

TEST(Csv, RequireColumnsNamesTheColumn)
{
    std::istringstream in("schema_version,firm,day\n");
    const CsvTable t = parse_csv(in, "t.csv");
    try {
        t.require_columns({"schema_version", "firm", "date"});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SchemaMismatch);
        EXPECT_NE(std::string(e.what()).find("'date'"), std::string::npos);
    }
}

TEST(Csv, RejectsBadNumbersAndDates)
{
    std::istringstream in("schema_version,date,v\n1,2024-13-01,abc\n1,2024-01-02,1e400\n");
    const CsvTable t = parse_csv(in, "t.csv");
    EXPECT_EQ(code_of([&] { (void)t.date(0, 1); }), ErrorCode::SchemaMismatch);
    EXPECT_EQ(code_of([&] { (void)t.number(0, 2); }), ErrorCode::SchemaMismatch);
    EXPECT_EQ(code_of([&] { (void)t.number(1, 2); }), ErrorCode::SchemaMismatch);
    EXPECT_EQ(t.date(1, 1), "2024-01-02");
}

TEST(Csv, WrongSchemaVersionRejected)
{
    std::istringstream in("schema_version,x\n2,1\n");
    const CsvTable t = parse_csv(in, "t.csv");
    EXPECT_EQ(code_of([&] { t.require_schema_version(1); }), ErrorCode::SchemaMismatch);
}

TEST(LoadBundle, WellFormedToyBundleHasNoExclusions)
{
    TempDir dir;
    const DatasetBundle b = toy_bundle(3, 10);
    write_bundle(dir.path(), b);
    const DatasetBundle loaded = load_bundle(dir.path());
    EXPECT_TRUE(loaded.excluded.empty());
    EXPECT_EQ(loaded.cds.size(), 30u);
    EXPECT_EQ(loaded.prices.size(), 3u);
    EXPECT_EQ(loaded.file_hashes.size(), 5u);
    EXPECT_EQ(loaded.rates.size(), 10u);
}

TEST(LoadBundle, MissingMaturityExcludesFirm)
{
    TempDir dir;
    DatasetBundle b = toy_bundle(3, 10);
    for (auto& ts : b.cds)
        if (ts.firm == "F002")
            std::erase_if(ts.points, [](const TermPoint& p) { return p.maturity == 20.0; });
    write_bundle(dir.path(), b);
    const DatasetBundle loaded = load_bundle(dir.path());
    ASSERT_EQ(loaded.excluded.size(), 1u);
    EXPECT_EQ(loaded.excluded[0].firm, "F002");
    EXPECT_NE(loaded.excluded[0].reason.find("20y"), std::string::npos);
    EXPECT_EQ(loaded.cds.size(), 20u);
    EXPECT_EQ(loaded.prices.count("F002"), 0u);
}

TEST(LoadBundle, DuplicateQuoteIsIntegrityViolation)
{
    TempDir dir;
    write_bundle(dir.path(), toy_bundle(3, 5));
    const fs::path cds = dir.path() / "cds.csv";
    std::string text = read_text(cds);
    const auto first_row_end = text.find('\n', text.find('\n') + 1);
    const std::string first_row = text.substr(text.find('\n') + 1, first_row_end - text.find('\n'));
    write_text(cds, text + first_row);
    try {
        (void)load_bundle(dir.path());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::IntegrityViolation);
        EXPECT_NE(std::string(e.what()).find("F001"), std::string::npos);
    }
}

TEST(LoadBundle, HeaderMismatchIsSchemaError)
{
    TempDir dir;
    write_bundle(dir.path(), toy_bundle(3, 5));
    const fs::path p = dir.path() / "prices.csv";
    std::string text = read_text(p);
    text.replace(text.find("close"), 5, "price");
    write_text(p, text);
    try {
        (void)load_bundle(dir.path());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SchemaMismatch);
        EXPECT_NE(std::string(e.what()).find("close"), std::string::npos);
    }
}

TEST(LoadBundle, MissingFileIsSchemaError)
{
    TempDir dir;
    write_bundle(dir.path(), toy_bundle(3, 5));
    fs::remove(dir.path() / "rates.csv");
    EXPECT_EQ(code_of([&] { (void)load_bundle(dir.path()); }), ErrorCode::SchemaMismatch);
}

TEST(LoadBundle, StaleQuotesExcludeFirm)
{
    TempDir dir;
    DatasetBundle b = toy_bundle(3, 25);
    for (auto& ts : b.cds)
        if (ts.firm == "F003")
            ts.points[3].spread_bp = 100.0;
    write_bundle(dir.path(), b);
    const DatasetBundle loaded = load_bundle(dir.path());
    ASSERT_EQ(loaded.excluded.size(), 1u);
    EXPECT_EQ(loaded.excluded[0].firm, "F003");
    EXPECT_NE(loaded.excluded[0].reason.find("stale"), std::string::npos);

    LoadOptions relaxed;
    relaxed.staleness_limit = 30;
    EXPECT_TRUE(load_bundle(dir.path(), kSchemaVersion, relaxed).excluded.empty());
}

TEST(LoadBundle, MissingRatingOrEmissionsOrPricesExcludes)
{
    TempDir dir;
    DatasetBundle b = toy_bundle(4, 5);
    for (auto& f : b.fundamentals) {
        if (f.firm == "F001")
            f.rating.reset();
        if (f.firm == "F002")
            f.scope1 = std::nan("");
    }
    b.prices.erase("F003");
    write_bundle(dir.path(), b);
    const DatasetBundle loaded = load_bundle(dir.path());
    std::map<std::string, std::string> reasons;
    for (const auto& e : loaded.excluded)
        reasons[e.firm] = e.reason;
    ASSERT_EQ(reasons.size(), 3u);
    EXPECT_NE(reasons["F001"].find("rating"), std::string::npos);
    EXPECT_NE(reasons["F002"].find("emissions"), std::string::npos);
    EXPECT_NE(reasons["F003"].find("prices"), std::string::npos);
    EXPECT_EQ(loaded.cds.size(), 5u);
}

TEST(LoadBundle, WinsorizesEachMaturityColumn)
{
    TempDir dir;
    DatasetBundle b = toy_bundle(5, 20);
    b.cds[7].points[2].spread_bp = 1e5;
    write_bundle(dir.path(), b);
    const DatasetBundle loaded = load_bundle(dir.path());
    std::vector<double> column;
    for (const auto& ts : b.cds)
        column.push_back(ts.points[2].spread_bp);
    const double cap = stats::quantile(column, 0.99);
    EXPECT_DOUBLE_EQ(loaded.cds[7].points[2].spread_bp, cap);
    EXPECT_LT(cap, 1e5);

    LoadOptions raw;
    raw.winsorize_spreads = false;
    EXPECT_EQ(load_bundle(dir.path(), kSchemaVersion, raw).cds[7].points[2].spread_bp, 1e5);
}

TEST(LoadBundle, FileHashesTrackContent)
{
    TempDir a, c;
    write_bundle(a.path(), toy_bundle(3, 5));
    write_bundle(c.path(), toy_bundle(3, 5));
    EXPECT_EQ(load_bundle(a.path()).file_hashes, load_bundle(c.path()).file_hashes);
    write_text(c.path() / "carbon.csv", read_text(c.path() / "carbon.csv") + "1,2030-01-01,99\n");
    const auto h = load_bundle(c.path()).file_hashes;
    EXPECT_NE(h.at("carbon.csv"), load_bundle(a.path()).file_hashes.at("carbon.csv"));
    EXPECT_EQ(h.at("cds.csv"), load_bundle(a.path()).file_hashes.at("cds.csv"));
}

TEST(CalibrationStore, RoundTripIsBitIdentical)
{
    TempDir dir;
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<StoredCalibration> rows;
    for (int i = 0; i < 20; ++i) {
        StoredCalibration s;
        auto& r = s.result;
        r.firm = "F" + std::to_string(i % 4);
        r.date = "2024-01-0" + std::to_string(1 + i / 4);
        r.model = i % 2 ? ModelTag::Diffusion : ModelTag::JumpDiffusion;
        r.r = 0.02 * u(rng);
        r.recovery = 0.6;
        for (std::size_t k = 0; k < parameter_count(r.model); ++k)
            r.parameters.push_back(u(rng) * 10.0);
        r.mape = u(rng) * 1e-7;
        r.converged = i % 3 != 0;
        r.unstable = i % 5 == 0;
        r.iterations = i;
        r.evaluations = 10 * i;
        for (double m : kCanonicalMaturities) {
            s.maturities.push_back(m);
            s.market_bp.push_back(1000.0 * u(rng));
            r.model_spreads.push_back(1000.0 * u(rng) / 3.0);
        }
        rows.push_back(std::move(s));
    }
    write_calibration_store(dir.path(), rows, {{"F9", "2024-01-01", ErrorCode::AllStartsFailed, "no, finite start"}});
    const auto back = read_calibration_store(dir.path());
    ASSERT_EQ(back.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& a = rows[i].result;
        const auto& b = back[i].result;
        EXPECT_EQ(a.firm, b.firm);
        EXPECT_EQ(a.date, b.date);
        EXPECT_EQ(a.model, b.model);
        EXPECT_TRUE(bit_equal(a.r, b.r));
        EXPECT_TRUE(bit_equal(a.mape, b.mape));
        EXPECT_EQ(a.converged, b.converged);
        EXPECT_EQ(a.unstable, b.unstable);
        EXPECT_EQ(a.evaluations, b.evaluations);
        ASSERT_EQ(a.parameters.size(), b.parameters.size());
        for (std::size_t k = 0; k < a.parameters.size(); ++k)
            EXPECT_TRUE(bit_equal(a.parameters[k], b.parameters[k]));
        ASSERT_EQ(a.model_spreads.size(), b.model_spreads.size());
        for (std::size_t k = 0; k < a.model_spreads.size(); ++k) {
            EXPECT_TRUE(bit_equal(a.model_spreads[k], b.model_spreads[k]));
            EXPECT_TRUE(bit_equal(rows[i].market_bp[k], back[i].market_bp[k]));
            EXPECT_TRUE(bit_equal(rows[i].maturities[k], back[i].maturities[k]));
        }
    }
    // Display column carries four decimals.
    const CsvTable spreads = read_csv(dir.path() / "spreads.csv");
    const std::string display = spreads.text(0, spreads.column("model_bp_display"));
    EXPECT_EQ(display.size() - display.find('.') - 1, 4u);
    EXPECT_EQ(read_csv(dir.path() / "failures.csv").size(), 1u);
}

TEST(FactorTableStore, RoundTripIsBitIdentical)
{
    TempDir dir;
    const std::vector<FactorRow> rows{{"2024-01-02", "TR_median", "", "", 5.0, 12.345678901234567},
                                      {"2024-01-02", "MRI", "F1", "BBB", 0.5, 1.0 / 3.0},
                                      {"2024-01-02", "CP", "", "", std::nullopt, 80.125}};
    write_factor_table(dir.path() / "f.csv", rows);
    const auto back = read_factor_table(dir.path() / "f.csv");
    ASSERT_EQ(back.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(back[i].date, rows[i].date);
        EXPECT_EQ(back[i].factor, rows[i].factor);
        EXPECT_EQ(back[i].firm, rows[i].firm);
        EXPECT_EQ(back[i].bucket, rows[i].bucket);
        EXPECT_EQ(back[i].maturity, rows[i].maturity);
        EXPECT_TRUE(bit_equal(back[i].value, rows[i].value));
    }
}

TEST(RunManifest, HashesConfigAndInputs)
{
    RunManifest a;
    a.command = "calibrate";
    a.config = {{"model", "jd"}, {"recovery", 0.6}};
    a.seed = 7;
    a.inputs["cds.csv"] = fnv1a("abc");
    RunManifest b = a;
    EXPECT_EQ(a.to_json(), b.to_json());
    b.config["recovery"] = 0.5;
    EXPECT_NE(a.config_hash(), b.config_hash());
    EXPECT_EQ(a.to_json()["inputs"]["cds.csv"], RunManifest::hex(fnv1a("abc")));
    EXPECT_EQ(RunManifest::hex(0xcbf29ce484222325ull), "cbf29ce484222325");
}

TEST(Fnv1a, KnownVectors)
{
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
    EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ull);
}

TEST(BusinessDays, SkipsWeekends)
{
    const auto d = business_days("2024-01-05", 3); // Friday
    ASSERT_EQ(d.size(), 3u);
    EXPECT_EQ(d[0], "2024-01-05");
    EXPECT_EQ(d[1], "2024-01-08");
    EXPECT_EQ(d[2], "2024-01-09");
}

TEST(Simulate, DeterministicAndPricedFromTruth)
{
    SimulationOptions o;
    o.firms = 4;
    o.days = 3;
    o.history_days = 2;
    const SimulatedData a = simulate_bundle(o);
    const SimulatedData b = simulate_bundle(o);
    ASSERT_EQ(a.bundle.cds.size(), 12u);
    ASSERT_EQ(a.truth.size(), 12u);
    for (std::size_t i = 0; i < a.bundle.cds.size(); ++i)
        for (std::size_t k = 0; k < 10; ++k)
            EXPECT_TRUE(bit_equal(a.bundle.cds[i].points[k].spread_bp, b.bundle.cds[i].points[k].spread_bp));
    std::map<std::pair<std::string, std::string>, TruthRow> truth;
    for (const auto& t : a.truth)
        truth[{t.firm, t.date}] = t;
    for (const auto& ts : a.bundle.cds) {
        const TruthRow& t = truth.at({ts.firm, ts.date});
        const auto ref = price_term_structure(JumpDiffusionParams{o.r, t.sigma, t.lambda, t.eta, t.leverage},
                                              o.recovery);
        for (std::size_t k = 0; k < 10; ++k)
            EXPECT_DOUBLE_EQ(ts.points[k].spread_bp, ref.points[k].spread_bp);
    }
    EXPECT_EQ(a.bundle.prices.at("F001").size(), 5u);
}

TEST(FactorTable, ProducesAllFactorFamilies)
{
    SimulationOptions o;
    o.firms = 12;
    o.days = 4;
    o.history_days = 256;
    const DatasetBundle b = simulate_bundle(o).bundle;
    const FactorTable t = build_factor_table(b);
    EXPECT_TRUE(t.skipped.empty());
    std::map<std::string, std::size_t> counts;
    for (const auto& r : t.rows)
        ++counts[r.factor];
    EXPECT_EQ(counts["TR_median"], 4u * 10u);
    EXPECT_EQ(counts["TR_wasserstein"], 4u * 10u);
    EXPECT_EQ(counts["CP"], 260u);
    EXPECT_EQ(counts["return"], 12u * 259u);
    EXPECT_EQ(counts["vol"], 12u * 5u);
    EXPECT_GT(counts["MRI"], 12u * 4u * 10u);

    // TR values agree with a direct recomputation on the first CDS date.
    const std::string date = b.cds.front().date;
    const auto grouping = classify_green_brown(b.fundamentals);
    std::vector<double> g, br;
    for (const auto& ts : b.cds)
        if (ts.date == date) {
            if (std::count(grouping.green.begin(), grouping.green.end(), ts.firm))
                g.push_back(ts.points[5].spread_bp);
            if (std::count(grouping.brown.begin(), grouping.brown.end(), ts.firm))
                br.push_back(ts.points[5].spread_bp);
        }
    for (const auto& r : t.rows)
        if (r.date == date && r.maturity == 5.0 && r.factor == "TR_wasserstein")
            EXPECT_DOUBLE_EQ(r.value, tr_wasserstein(g, br));
}

TEST(FactorTable, FreezeFlagKeepsFirstGrouping)
{
    SimulationOptions o;
    o.firms = 12;
    o.days = 3;
    o.history_days = 0;
    o.start_date = "2021-12-30";
    DatasetBundle b = simulate_bundle(o).bundle;
    // Reverse emission intensities in 2022 so daily regrouping changes groups.
    std::vector<double> intensity2021;
    for (const auto& f : b.fundamentals)
        if (f.year == 2021)
            intensity2021.push_back(f.scope1);
    for (auto& f : b.fundamentals)
        if (f.year == 2022) {
            f.scope1 = 1e9 / f.scope1;
            f.scope2 = 0.0;
        }
    FactorOptions daily, frozen;
    frozen.freeze_groups = true;
    const auto a = build_factor_table(b, daily).rows;
    const auto c = build_factor_table(b, frozen).rows;
    auto tr = [](const std::vector<FactorRow>& rows, const std::string& date) {
        for (const auto& r : rows)
            if (r.factor == "TR_median" && r.date == date && r.maturity == 5.0)
                return r.value;
        return std::nan("");
    };
    EXPECT_EQ(tr(a, "2021-12-30"), tr(c, "2021-12-30"));
    EXPECT_NE(tr(a, "2022-01-03"), tr(c, "2022-01-03"));
}

TEST(RegressionSpec, ParsesAndValidates)
{
    const auto s = parse_regression_spec(nlohmann::json::parse(
        R"({"dependent":"error","regressors":["return","vol","tr_wasserstein"],"quantiles":[0.5],"maturities":[5],"bootstrap_reps":0,"seed":3})"));
    EXPECT_EQ(s.dependent, Dependent::Error);
    EXPECT_EQ(s.regressors.size(), 3u);
    EXPECT_EQ(s.seed, 3u);
    EXPECT_EQ(code_of([] { (void)parse_regression_spec(nlohmann::json::parse(R"({"regressors":["esg"]})")); }),
              ErrorCode::SchemaMismatch);
    EXPECT_EQ(code_of([] { (void)parse_regression_spec(nlohmann::json::parse(R"({"dependent":"level"})")); }),
              ErrorCode::SchemaMismatch);
    EXPECT_EQ(code_of([] { (void)parse_regression_spec(nlohmann::json::parse(R"({"quantiles":[1.5]})")); }),
              ErrorCode::SchemaMismatch);
    EXPECT_EQ(code_of([] { (void)parse_regression_spec(nlohmann::json::parse(R"({"quantile":[0.5]})")); }),
              ErrorCode::SchemaMismatch);
    EXPECT_EQ(code_of([] { (void)parse_regression_spec(nlohmann::json::parse(R"({"seed":"x"})")); }),
              ErrorCode::SchemaMismatch);
}

TEST(AssemblePanel, DeltaBreaksAcrossMissingDaysAndDropsIncompleteRows)
{
    std::vector<StoredCalibration> store;
    auto add = [&](const std::string& firm, const std::string& date, double model, double market) {
        StoredCalibration s;
        s.result.firm = firm;
        s.result.date = date;
        s.result.model_spreads = {model};
        s.maturities = {5.0};
        s.market_bp = {market};
        store.push_back(s);
    };
    add("A", "2024-01-01", 100, 101);
    add("A", "2024-01-02", 110, 108);
    add("A", "2024-01-04", 120, 125);
    add("B", "2024-01-01", 50, 50);
    add("B", "2024-01-02", 55, 50);
    add("B", "2024-01-03", 53, 50);
    std::vector<FactorRow> f;
    for (const std::string d : {"2024-01-01", "2024-01-02", "2024-01-03", "2024-01-04"}) {
        f.push_back({d, "TR_median", "", "", 5.0, static_cast<double>(d.back() - '0') * 2.0});
        f.push_back({d, "TR_median", "", "", 10.0, 999.0});
    }
    RegressionSpec spec;
    spec.regressors = {"dtr_median"};
    const auto delta = assemble_panel(store, f, spec, 5.0);
    // A: 01-02 (10); 01-04 has no 01-03 row so no delta. B: 01-02 (5), 01-03 (-2).
    ASSERT_EQ(delta.panel.rows.size(), 3u);
    EXPECT_EQ(delta.dropped_rows, 3u);
    for (const auto& r : delta.panel.rows) {
        EXPECT_DOUBLE_EQ(r.x[0], 2.0);
        if (r.firm == "A")
            EXPECT_DOUBLE_EQ(r.y, 10.0);
    }

    spec.dependent = Dependent::Error;
    spec.regressors = {"tr_median"};
    const auto err = assemble_panel(store, f, spec, 5.0);
    ASSERT_EQ(err.panel.rows.size(), 6u);
    EXPECT_DOUBLE_EQ(err.panel.rows[2].y, -5.0);
    EXPECT_DOUBLE_EQ(err.panel.rows[2].x[0], 8.0);
}

TEST(Stars, Thresholds)
{
    EXPECT_EQ(stars(0.0005), "***");
    EXPECT_EQ(stars(0.005), "**");
    EXPECT_EQ(stars(0.05), "*");
    EXPECT_EQ(stars(0.5), "");
    EXPECT_EQ(stars(std::nan("")), "");
}

TEST(Validation, AllChecksPass)
{
    ValidationOptions o;
    o.etas = {2.0};
    o.tenors = {5.0};
    o.par_bond_draws = 100;
    for (const auto& c : run_validation(o))
        EXPECT_TRUE(c.passed()) << c.name << " " << c.max_error;
}
