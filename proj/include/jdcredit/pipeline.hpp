#pragma once

// Bundle -> factor table -> regression panels -> coefficient tables.

#include <jdcredit/data_io.hpp>
#include <jdcredit/quantreg.hpp>

#include <algorithm>
#include <set>

namespace jdcredit {

// ---------------------------------------------------------------------------
// Factor table
// ---------------------------------------------------------------------------

struct FactorOptions {
    bool freeze_groups = false; // use the first date's grouping for every date
    int volatility_window = kVolatilityWindow;
    VolatilityMeasure volatility_measure = VolatilityMeasure::StandardDeviation;
};

struct FactorTable {
    std::vector<FactorRow> rows;
    std::vector<std::string> skipped; // "date: reason" for dates without a TR value
};

namespace detail {

inline int year_of(const std::string& date) { return std::stoi(date.substr(0, 4)); }

// Latest fundamentals with year <= the date's year, per firm.
inline std::vector<FirmFundamentals> fundamentals_as_of(const std::vector<FirmFundamentals>& all,
                                                        const std::string& date)
{
    std::map<std::string, const FirmFundamentals*> latest;
    const int y = year_of(date);
    for (const auto& f : all)
        if (f.year <= y) {
            auto& slot = latest[f.firm];
            if (!slot || slot->year < f.year)
                slot = &f;
        }
    std::vector<FirmFundamentals> out;
    for (const auto& [firm, f] : latest)
        out.push_back(*f);
    return out;
}

} // namespace detail

/// Returns, volatility, green/brown TR factors (median and Wasserstein), MRI
/// per bucket and per firm, and the carbon price.
[[nodiscard]] inline FactorTable build_factor_table(const DatasetBundle& bundle, const FactorOptions& options = {})
{
    FactorTable table;
    auto& rows = table.rows;

    for (const auto& [firm, prices] : bundle.prices) {
        const Series ret = stock_returns(prices);
        for (const auto& r : ret)
            rows.push_back({r.date, "return", firm, "", std::nullopt, r.value});
        if (ret.size() >= static_cast<std::size_t>(options.volatility_window))
            for (const auto& v : rolling_volatility(ret, options.volatility_window, options.volatility_measure))
                rows.push_back({v.date, "vol", firm, "", std::nullopt, v.value});
    }

    std::map<std::string, std::vector<const TermStructure*>> by_date;
    for (const auto& ts : bundle.cds)
        by_date[ts.date].push_back(&ts);

    std::optional<GreenBrownGrouping> frozen;
    for (const auto& [date, structures] : by_date) {
        const auto fundamentals = detail::fundamentals_as_of(bundle.fundamentals, date);
        std::map<std::string, RatingBucket> bucket;
        for (const auto& f : fundamentals)
            if (f.rating)
                bucket[f.firm] = rating_bucket(rating_ordinal(*f.rating, f.agency));

        std::optional<GreenBrownGrouping> grouping;
        try {
            if (options.freeze_groups && frozen)
                grouping = frozen;
            else
                grouping = classify_green_brown(fundamentals);
            if (options.freeze_groups && !frozen)
                frozen = grouping;
        } catch (const Error& e) {
            table.skipped.push_back(date + ": " + e.what());
        }
        const std::set<std::string> green(grouping ? grouping->green.begin() : std::vector<std::string>::const_iterator{},
                                          grouping ? grouping->green.end() : std::vector<std::string>::const_iterator{});
        const std::set<std::string> brown(grouping ? grouping->brown.begin() : std::vector<std::string>::const_iterator{},
                                          grouping ? grouping->brown.end() : std::vector<std::string>::const_iterator{});

        const std::size_t n_mat = structures.front()->points.size();
        for (std::size_t k = 0; k < n_mat; ++k) {
            const double maturity = structures.front()->points[k].maturity;
            std::vector<double> g, b;
            std::vector<std::pair<RatingBucket, double>> rated;
            for (const TermStructure* ts : structures) {
                const double s = ts->points[k].spread_bp;
                if (green.count(ts->firm))
                    g.push_back(s);
                if (brown.count(ts->firm))
                    b.push_back(s);
                if (const auto it = bucket.find(ts->firm); it != bucket.end())
                    rated.emplace_back(it->second, s);
            }
            if (!g.empty() && !b.empty()) {
                rows.push_back({date, "TR_median", "", "", maturity, tr_median(g, b)});
                rows.push_back({date, "TR_wasserstein", "", "", maturity, tr_wasserstein(g, b)});
            } else if (grouping) {
                table.skipped.push_back(date + ": empty green or brown group at " + format_double(maturity) + "y");
            }
            const auto medians = mri(rated);
            for (std::size_t q = 0; q < kRatingBuckets; ++q)
                if (medians[q])
                    rows.push_back({date, "MRI", "", std::string(to_string(static_cast<RatingBucket>(q))), maturity,
                                    *medians[q]});
            for (const TermStructure* ts : structures)
                if (const auto it = bucket.find(ts->firm); it != bucket.end())
                    rows.push_back({date, "MRI", ts->firm, std::string(to_string(it->second)), maturity,
                                    *medians[static_cast<std::size_t>(it->second)]});
        }
    }
    if (!bundle.carbon.empty())
        for (const auto& c : carbon_factor(bundle.carbon).values)
            rows.push_back({c.date, "CP", "", "", std::nullopt, c.value});
    return table;
}

// ---------------------------------------------------------------------------
// Regression specification
// ---------------------------------------------------------------------------

enum class Dependent { Delta, Error };

/// Regressor names accepted in a regression spec. A leading "d" denotes the
/// first difference of the level factor.
inline const std::vector<std::string> kRegressorNames{"return",         "vol",           "dvol",
                                                      "mri",            "dmri",          "tr_median",
                                                      "dtr_median",     "tr_wasserstein", "dtr_wasserstein",
                                                      "cp",             "dcp"};

struct RegressionSpec {
    Dependent dependent = Dependent::Delta;
    std::vector<std::string> regressors{"return", "dvol", "dmri", "dtr_median"};
    std::vector<double> quantiles{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<double> maturities{kCanonicalMaturities.begin(), kCanonicalMaturities.end()};
    int bootstrap_reps = 500;
    std::uint64_t seed = 20240101;

    [[nodiscard]] nlohmann::json to_json() const
    {
        return {{"dependent", dependent == Dependent::Delta ? "delta" : "error"},
                {"regressors", regressors},
                {"quantiles", quantiles},
                {"maturities", maturities},
                {"bootstrap_reps", bootstrap_reps},
                {"seed", seed}};
    }
};

[[nodiscard]] inline RegressionSpec parse_regression_spec(const nlohmann::json& j)
{
    RegressionSpec s;
    try {
        for (const auto& [key, value] : j.items())
            require(key == "dependent" || key == "regressors" || key == "quantiles" || key == "maturities"
                        || key == "bootstrap_reps" || key == "seed",
                    ErrorCode::SchemaMismatch, "regression spec: unknown field '" + key + "'");
        if (j.contains("dependent")) {
            const auto d = j.at("dependent").get<std::string>();
            require(d == "delta" || d == "error", ErrorCode::SchemaMismatch,
                    "regression spec: dependent must be 'delta' or 'error', got '" + d + "'");
            s.dependent = d == "delta" ? Dependent::Delta : Dependent::Error;
        }
        if (j.contains("regressors"))
            s.regressors = j.at("regressors").get<std::vector<std::string>>();
        if (j.contains("quantiles"))
            s.quantiles = j.at("quantiles").get<std::vector<double>>();
        if (j.contains("maturities"))
            s.maturities = j.at("maturities").get<std::vector<double>>();
        if (j.contains("bootstrap_reps"))
            s.bootstrap_reps = j.at("bootstrap_reps").get<int>();
        if (j.contains("seed"))
            s.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("regression spec: ") + e.what());
    }
    require(!s.regressors.empty(), ErrorCode::SchemaMismatch, "regression spec: empty regressor list");
    for (const auto& r : s.regressors)
        require(std::find(kRegressorNames.begin(), kRegressorNames.end(), r) != kRegressorNames.end(),
                ErrorCode::SchemaMismatch, "regression spec: unknown regressor '" + r + "'");
    for (double q : s.quantiles)
        require(q > 0.0 && q < 1.0, ErrorCode::SchemaMismatch, "regression spec: quantile outside (0, 1)");
    require(!s.quantiles.empty() && !s.maturities.empty(), ErrorCode::SchemaMismatch,
            "regression spec: quantiles and maturities must be nonempty");
    require(s.bootstrap_reps >= 0, ErrorCode::SchemaMismatch, "regression spec: negative bootstrap_reps");
    return s;
}

// ---------------------------------------------------------------------------
// Panel assembly
// ---------------------------------------------------------------------------

struct AssembledPanel {
    Panel panel;
    std::size_t dropped_rows = 0; // firm-days lacking the dependent or a regressor
};

namespace detail {

using DatedMap = std::map<std::string, double>;

// Value at `date` minus the value at the previous date of the same series.
inline std::optional<double> diff_at(const DatedMap& m, const std::string& date)
{
    const auto it = m.find(date);
    if (it == m.end() || it == m.begin())
        return std::nullopt;
    return it->second - std::prev(it)->second;
}

inline std::optional<double> level_at(const DatedMap& m, const std::string& date)
{
    const auto it = m.find(date);
    return it == m.end() ? std::nullopt : std::optional<double>(it->second);
}

inline bool same_maturity(const std::optional<double>& a, double b) { return a && std::abs(*a - b) <= 1e-9; }

} // namespace detail

/// Builds the firm-day panel for one maturity. The delta dependent is the
/// day-on-day change of the model spread; consecutive means adjacent in the
/// sorted set of calibrated dates, so a failed day breaks the chain.
[[nodiscard]] inline AssembledPanel assemble_panel(const std::vector<StoredCalibration>& store,
                                                   const std::vector<FactorRow>& factors, const RegressionSpec& spec,
                                                   double maturity)
{
    using detail::DatedMap;
    std::map<std::string, DatedMap> firm_ret, firm_vol, firm_mri;
    DatedMap tr_med, tr_w, cp;
    for (const auto& f : factors) {
        if (f.factor == "return")
            firm_ret[f.firm][f.date] = f.value;
        else if (f.factor == "vol")
            firm_vol[f.firm][f.date] = f.value;
        else if (f.factor == "MRI" && !f.firm.empty() && detail::same_maturity(f.maturity, maturity))
            firm_mri[f.firm][f.date] = f.value;
        else if (f.factor == "TR_median" && detail::same_maturity(f.maturity, maturity))
            tr_med[f.date] = f.value;
        else if (f.factor == "TR_wasserstein" && detail::same_maturity(f.maturity, maturity))
            tr_w[f.date] = f.value;
        else if (f.factor == "CP")
            cp[f.date] = f.value;
    }

    std::set<std::string> all_dates;
    std::map<std::string, DatedMap> dependent_level;
    for (const auto& s : store) {
        all_dates.insert(s.result.date);
        for (std::size_t k = 0; k < s.maturities.size(); ++k)
            if (std::abs(s.maturities[k] - maturity) <= 1e-9)
                dependent_level[s.result.firm][s.result.date] = spec.dependent == Dependent::Delta
                    ? s.result.model_spreads[k]
                    : s.result.model_spreads[k] - s.market_bp[k];
    }
    const std::vector<std::string> dates(all_dates.begin(), all_dates.end());
    auto previous_date = [&](const std::string& d) -> std::optional<std::string> {
        const auto it = std::lower_bound(dates.begin(), dates.end(), d);
        if (it == dates.begin())
            return std::nullopt;
        return *std::prev(it);
    };

    static const DatedMap empty;
    auto lookup = [](const std::map<std::string, DatedMap>& m, const std::string& firm) -> const DatedMap& {
        const auto it = m.find(firm);
        return it == m.end() ? empty : it->second;
    };

    AssembledPanel out;
    out.panel.regressors = spec.regressors;
    for (const auto& [firm, levels] : dependent_level) {
        for (const auto& [date, level] : levels) {
            std::optional<double> y = level;
            if (spec.dependent == Dependent::Delta) {
                const auto prev = previous_date(date);
                const auto it = prev ? levels.find(*prev) : levels.end();
                y = it == levels.end() ? std::nullopt : std::optional<double>(level - it->second);
            }
            std::vector<double> x;
            bool complete = y.has_value();
            for (const auto& name : spec.regressors) {
                if (!complete)
                    break;
                std::optional<double> v;
                if (name == "return")
                    v = detail::level_at(lookup(firm_ret, firm), date);
                else if (name == "vol")
                    v = detail::level_at(lookup(firm_vol, firm), date);
                else if (name == "dvol")
                    v = detail::diff_at(lookup(firm_vol, firm), date);
                else if (name == "mri")
                    v = detail::level_at(lookup(firm_mri, firm), date);
                else if (name == "dmri")
                    v = detail::diff_at(lookup(firm_mri, firm), date);
                else if (name == "tr_median")
                    v = detail::level_at(tr_med, date);
                else if (name == "dtr_median")
                    v = detail::diff_at(tr_med, date);
                else if (name == "tr_wasserstein")
                    v = detail::level_at(tr_w, date);
                else if (name == "dtr_wasserstein")
                    v = detail::diff_at(tr_w, date);
                else if (name == "cp")
                    v = detail::level_at(cp, date);
                else if (name == "dcp")
                    v = detail::diff_at(cp, date);
                complete = v.has_value();
                if (v)
                    x.push_back(*v);
            }
            if (complete)
                out.panel.rows.push_back({firm, date, *y, std::move(x)});
            else
                ++out.dropped_rows;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Regression runs
// ---------------------------------------------------------------------------

struct CoefficientRow {
    double maturity = 0.0;
    double tau = 0.0;
    std::string regressor;
    double estimate = 0.0;
    double std_error = 0.0;
    double p_value = 0.0;
    std::size_t observations = 0;
    std::size_t firms = 0;
};

struct VifRow {
    double maturity = 0.0;
    std::string regressor;
    double vif = 0.0;
    bool flagged = false;
};

struct RegressionFailure {
    double maturity = 0.0;
    double tau = 0.0;
    ErrorCode code = ErrorCode::InvalidArgument;
    std::string message;
};

struct RegressionReport {
    std::vector<CoefficientRow> coefficients;
    std::vector<VifRow> vif;
    std::vector<RegressionFailure> failures;
    std::map<double, std::size_t> dropped_rows; // by maturity
};

/// Significance stars at p < 0.001 / 0.01 / 0.1.
[[nodiscard]] inline std::string stars(double p)
{
    if (!(p == p))
        return "";
    if (p < 0.001)
        return "***";
    if (p < 0.01)
        return "**";
    if (p < 0.1)
        return "*";
    return "";
}

[[nodiscard]] inline RegressionReport run_regressions(const std::vector<StoredCalibration>& store,
                                                      const std::vector<FactorRow>& factors,
                                                      const RegressionSpec& spec, unsigned workers = 0)
{
    RegressionReport report;
    for (double maturity : spec.maturities) {
        const AssembledPanel ap = assemble_panel(store, factors, spec, maturity);
        report.dropped_rows[maturity] = ap.dropped_rows;
        if (spec.regressors.size() >= 2 && ap.panel.rows.size() > spec.regressors.size() + 1) {
            Eigen::MatrixXd X(static_cast<Eigen::Index>(ap.panel.rows.size()),
                              static_cast<Eigen::Index>(spec.regressors.size()));
            for (std::size_t i = 0; i < ap.panel.rows.size(); ++i)
                for (std::size_t k = 0; k < spec.regressors.size(); ++k)
                    X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = ap.panel.rows[i].x[k];
            try {
                const VifResult v = jdcredit::vif(X);
                for (std::size_t k = 0; k < spec.regressors.size(); ++k)
                    report.vif.push_back({maturity, spec.regressors[k], v.scores[k], v.flagged[k]});
            } catch (const Error& e) {
                report.failures.push_back({maturity, 0.0, e.code(), std::string("VIF: ") + e.what()});
            }
        }
        for (double tau : spec.quantiles) {
            try {
                PanelOptions po;
                po.bootstrap_reps = spec.bootstrap_reps;
                po.seed = spec.seed;
                po.workers = workers;
                const QuantRegFit fit = qreg_panel_two_step(ap.panel, tau, po);
                for (std::size_t k = 0; k < fit.beta.size(); ++k)
                    report.coefficients.push_back({maturity, tau, fit.regressors[k], fit.beta[k], fit.std_errors[k],
                                                   fit.p_values[k], fit.observations, fit.fixed_effects.size()});
            } catch (const Error& e) {
                report.failures.push_back({maturity, tau, e.code(), e.what()});
            }
        }
    }
    return report;
}

namespace schema {
inline const std::vector<std::string> coefficients{"schema_version", "dependent", "maturity",     "tau",
                                                   "regressor",      "estimate",  "std_error",    "p_value",
                                                   "stars",          "observations", "firms"};
inline const std::vector<std::string> vif{"schema_version", "maturity", "regressor", "vif", "flagged"};
} // namespace schema

inline void write_regression_report(const std::filesystem::path& dir, const RegressionReport& report,
                                    const RegressionSpec& spec)
{
    std::filesystem::create_directories(dir);
    const std::string v = std::to_string(kSchemaVersion);
    const std::string dep = spec.dependent == Dependent::Delta ? "delta" : "error";
    auto num = [](double x) { return std::isfinite(x) ? format_double(x) : (x != x ? "" : (x > 0 ? "inf" : "-inf")); };
    {
        CsvWriter w(dir / "coefficients.csv", schema::coefficients);
        for (const auto& c : report.coefficients)
            w.row({v, dep, format_double(c.maturity), format_double(c.tau), c.regressor, num(c.estimate),
                   num(c.std_error), num(c.p_value), stars(c.p_value), std::to_string(c.observations),
                   std::to_string(c.firms)});
    }
    {
        CsvWriter w(dir / "vif.csv", schema::vif);
        for (const auto& r : report.vif)
            w.row({v, format_double(r.maturity), r.regressor, num(r.vif), r.flagged ? "1" : "0"});
    }
    {
        CsvWriter w(dir / "regression_failures.csv", {"schema_version", "maturity", "tau", "code", "message"});
        for (const auto& f : report.failures) {
            std::string msg = f.message;
            std::replace(msg.begin(), msg.end(), ',', ';');
            w.row({v, format_double(f.maturity), format_double(f.tau), std::string(to_string(f.code)), msg});
        }
    }
}

} // namespace jdcredit
