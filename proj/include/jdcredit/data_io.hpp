#pragma once

// CSV schemas, bundle loading with exclusion rules, result stores and run
// manifests. Every file carries a schema_version column.

#include <jdcredit/calibration.hpp>
#include <jdcredit/factors.hpp>
#include <jdcredit/hash.hpp>

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace jdcredit {

inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// CSV primitives
// ---------------------------------------------------------------------------

/// Shortest decimal text that reads back to the same double.
[[nodiscard]] inline std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

[[nodiscard]] inline std::string format_fixed(double v, int decimals)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
    return std::string(buf, res.ptr);
}

class CsvTable {
public:
    CsvTable(std::string source, std::vector<std::string> header, std::vector<std::vector<std::string>> rows)
        : source_(std::move(source)), header_(std::move(header)), rows_(std::move(rows))
    {
    }

    [[nodiscard]] const std::string& source() const { return source_; }
    [[nodiscard]] std::size_t size() const { return rows_.size(); }
    [[nodiscard]] const std::vector<std::string>& header() const { return header_; }

    /// Checks that the header equals `expected` exactly, naming the first offending column.
    void require_columns(const std::vector<std::string>& expected) const
    {
        for (std::size_t i = 0; i < expected.size(); ++i)
            require(i < header_.size() && header_[i] == expected[i], ErrorCode::SchemaMismatch,
                    source_ + ": expected column '" + expected[i] + "' at position " + std::to_string(i + 1)
                        + (i < header_.size() ? ", found '" + header_[i] + "'" : ", header too short"));
        require(header_.size() == expected.size(), ErrorCode::SchemaMismatch,
                source_ + ": unexpected extra column '" + (header_.size() > expected.size() ? header_[expected.size()] : "")
                    + "'");
    }

    [[nodiscard]] std::size_t column(std::string_view name) const
    {
        for (std::size_t i = 0; i < header_.size(); ++i)
            if (header_[i] == name)
                return i;
        throw Error(ErrorCode::SchemaMismatch, source_ + ": missing column '" + std::string(name) + "'");
    }

    [[nodiscard]] const std::string& text(std::size_t row, std::size_t col) const { return rows_[row][col]; }

    [[nodiscard]] double number(std::size_t row, std::size_t col) const
    {
        const std::string& s = rows_[row][col];
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        require(res.ec == std::errc{} && res.ptr == s.data() + s.size() && std::isfinite(v), ErrorCode::SchemaMismatch,
                where(row, col) + ": '" + s + "' is not a finite number");
        return v;
    }

    [[nodiscard]] long long integer(std::size_t row, std::size_t col) const
    {
        const std::string& s = rows_[row][col];
        long long v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        require(res.ec == std::errc{} && res.ptr == s.data() + s.size(), ErrorCode::SchemaMismatch,
                where(row, col) + ": '" + s + "' is not an integer");
        return v;
    }

    [[nodiscard]] std::string date(std::size_t row, std::size_t col) const
    {
        const std::string& s = rows_[row][col];
        auto digits = [&](std::size_t a, std::size_t b) {
            for (std::size_t i = a; i < b; ++i)
                if (s[i] < '0' || s[i] > '9')
                    return false;
            return true;
        };
        bool ok = s.size() == 10 && s[4] == '-' && s[7] == '-' && digits(0, 4) && digits(5, 7) && digits(8, 10);
        if (ok) {
            const int month = std::stoi(s.substr(5, 2)), day = std::stoi(s.substr(8, 2));
            ok = month >= 1 && month <= 12 && day >= 1 && day <= 31;
        }
        require(ok, ErrorCode::SchemaMismatch, where(row, col) + ": '" + s + "' is not an ISO-8601 date");
        return s;
    }

    void require_schema_version(int version) const
    {
        const std::size_t c = column("schema_version");
        for (std::size_t r = 0; r < rows_.size(); ++r)
            require(integer(r, c) == version, ErrorCode::SchemaMismatch,
                    where(r, c) + ": schema version " + rows_[r][c] + ", expected " + std::to_string(version));
    }

private:
    [[nodiscard]] std::string where(std::size_t row, std::size_t col) const
    {
        return source_ + " line " + std::to_string(row + 2) + " column '" + header_[col] + "'";
    }

    std::string source_;
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos)
            return out;
        start = comma + 1;
    }
}

} // namespace detail

[[nodiscard]] inline CsvTable parse_csv(std::istream& in, const std::string& source)
{
    std::string line;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
            line.erase(0, 3);
        if (line.empty())
            continue;
        auto fields = detail::split_csv_line(line);
        if (header.empty()) {
            header = std::move(fields);
            continue;
        }
        require(fields.size() == header.size(), ErrorCode::SchemaMismatch,
                source + " line " + std::to_string(lineno) + ": " + std::to_string(fields.size()) + " fields, header has "
                    + std::to_string(header.size()));
        rows.push_back(std::move(fields));
    }
    require(!header.empty(), ErrorCode::SchemaMismatch, source + ": missing header");
    return {source, std::move(header), std::move(rows)};
}

[[nodiscard]] inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::SchemaMismatch, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

[[nodiscard]] inline CsvTable read_csv(const std::filesystem::path& path)
{
    std::istringstream in(read_file(path));
    return parse_csv(in, path.filename().string());
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path, std::ios::binary)
    {
        require(static_cast<bool>(out_), ErrorCode::InvalidArgument, "cannot write " + path.string());
        row(header);
    }

    void row(const std::vector<std::string>& fields)
    {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            require(fields[i].find_first_of(",\n\r") == std::string::npos, ErrorCode::InvalidArgument,
                    "field contains a separator: " + fields[i]);
            out_ << (i ? "," : "") << fields[i];
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

// ---------------------------------------------------------------------------
// Dataset bundle
// ---------------------------------------------------------------------------

namespace schema {
inline const std::vector<std::string> cds{"schema_version", "firm", "date", "maturity", "spread_bp"};
inline const std::vector<std::string> prices{"schema_version", "firm", "date", "close"};
inline const std::vector<std::string> fundamentals{"schema_version", "firm",    "year",   "scope1",
                                                   "scope2",         "revenue", "rating", "agency"};
inline const std::vector<std::string> carbon{"schema_version", "date", "price"};
inline const std::vector<std::string> rates{"schema_version", "date", "euribor6m"};
} // namespace schema

inline constexpr std::array<const char*, 5> kBundleFiles{"cds.csv", "prices.csv", "fundamentals.csv", "carbon.csv",
                                                         "rates.csv"};

struct DatasetBundle {
    std::vector<TermStructure> cds;       // sorted by (firm, date), canonical grid
    std::map<std::string, Series> prices; // by firm
    std::vector<FirmFundamentals> fundamentals;
    Series carbon;
    std::map<std::string, double> rates; // 6m rate as a decimal, by date
    std::vector<Exclusion> excluded;
    std::map<std::string, std::uint64_t> file_hashes; // FNV-1a of each input file
};

struct LoadOptions {
    std::vector<double> maturities{kCanonicalMaturities.begin(), kCanonicalMaturities.end()};
    int staleness_limit = 20;    // more consecutive identical quotes than this marks a series illiquid
    bool winsorize_spreads = true; // upper 99th percentile per maturity, pooled over firms and dates
    double winsorize_level = 0.99;
};

namespace detail {

inline void reject_duplicate(std::set<std::string>& seen, const std::string& key, const std::string& source)
{
    require(seen.insert(key).second, ErrorCode::IntegrityViolation, source + ": duplicate key (" + key + ")");
}

} // namespace detail

/// Loads and validates a bundle directory. Firms with incomplete or stale CDS
/// series, or without prices, fundamentals, emissions or a rating, are
/// excluded with a reason.
[[nodiscard]] inline DatasetBundle load_bundle(const std::filesystem::path& dir, int version = kSchemaVersion,
                                               const LoadOptions& options = {})
{
    DatasetBundle b;
    auto load = [&](const char* name, const std::vector<std::string>& columns) {
        const auto path = dir / name;
        const std::string content = read_file(path);
        b.file_hashes[name] = fnv1a(content);
        std::istringstream in(content);
        CsvTable t = parse_csv(in, name);
        t.require_columns(columns);
        t.require_schema_version(version);
        return t;
    };

    // CDS quotes: firm -> date -> maturity -> spread.
    std::map<std::string, std::map<std::string, std::map<double, double>>> quotes;
    {
        const CsvTable t = load("cds.csv", schema::cds);
        std::set<std::string> seen;
        for (std::size_t r = 0; r < t.size(); ++r) {
            const std::string firm = t.text(r, 1), date = t.date(r, 2);
            const double maturity = t.number(r, 3), spread = t.number(r, 4);
            require(!firm.empty(), ErrorCode::SchemaMismatch, "cds.csv line " + std::to_string(r + 2) + ": empty firm");
            detail::reject_duplicate(seen, firm + ", " + date + ", " + t.text(r, 3), "cds.csv");
            require(spread > 0.0, ErrorCode::IntegrityViolation,
                    "cds.csv: non-positive spread for (" + firm + ", " + date + ", " + t.text(r, 3) + ")");
            quotes[firm][date][maturity] = spread;
        }
    }
    {
        const CsvTable t = load("prices.csv", schema::prices);
        std::set<std::string> seen;
        std::map<std::string, std::map<std::string, double>> by_firm;
        for (std::size_t r = 0; r < t.size(); ++r) {
            const std::string firm = t.text(r, 1), date = t.date(r, 2);
            detail::reject_duplicate(seen, firm + ", " + date, "prices.csv");
            by_firm[firm][date] = t.number(r, 3);
        }
        for (auto& [firm, series] : by_firm)
            for (auto& [date, close] : series)
                b.prices[firm].push_back({date, close});
    }
    std::map<std::string, std::vector<FirmFundamentals>> fundamentals;
    {
        const CsvTable t = load("fundamentals.csv", schema::fundamentals);
        std::set<std::string> seen;
        for (std::size_t r = 0; r < t.size(); ++r) {
            FirmFundamentals f;
            f.firm = t.text(r, 1);
            f.year = static_cast<int>(t.integer(r, 2));
            detail::reject_duplicate(seen, f.firm + ", " + t.text(r, 2), "fundamentals.csv");
            const bool has_ghg = !t.text(r, 3).empty() && !t.text(r, 4).empty();
            f.scope1 = has_ghg ? t.number(r, 3) : std::nan("");
            f.scope2 = has_ghg ? t.number(r, 4) : std::nan("");
            f.revenue = t.number(r, 5);
            if (!t.text(r, 6).empty())
                f.rating = t.text(r, 6);
            f.agency = t.text(r, 7).empty() ? Agency::SP : parse_agency(t.text(r, 7));
            if (f.rating)
                (void)rating_ordinal(*f.rating, f.agency); // unknown symbols are schema errors
            fundamentals[f.firm].push_back(f);
        }
    }
    {
        const CsvTable t = load("carbon.csv", schema::carbon);
        std::map<std::string, double> m;
        for (std::size_t r = 0; r < t.size(); ++r) {
            const std::string date = t.date(r, 1);
            require(m.emplace(date, t.number(r, 2)).second, ErrorCode::IntegrityViolation,
                    "carbon.csv: duplicate key (" + date + ")");
        }
        for (auto& [d, v] : m)
            b.carbon.push_back({d, v});
    }
    {
        const CsvTable t = load("rates.csv", schema::rates);
        for (std::size_t r = 0; r < t.size(); ++r) {
            const std::string date = t.date(r, 1);
            require(b.rates.emplace(date, t.number(r, 2)).second, ErrorCode::IntegrityViolation,
                    "rates.csv: duplicate key (" + date + ")");
        }
    }

    for (auto& [firm, dates] : quotes) {
        std::string reason;
        for (const auto& [date, by_maturity] : dates) {
            for (double m : options.maturities)
                if (!by_maturity.count(m)) {
                    reason = "missing " + format_double(m) + "y quote on " + date;
                    break;
                }
            if (!reason.empty())
                break;
            if (by_maturity.size() != options.maturities.size()) {
                reason = "maturity off the grid on " + date;
                break;
            }
        }
        if (reason.empty())
            for (double m : options.maturities) {
                int run = 1;
                std::optional<double> last;
                for (const auto& [date, by_maturity] : dates) {
                    const double s = by_maturity.at(m);
                    run = (last && *last == s) ? run + 1 : 1;
                    last = s;
                    if (run > options.staleness_limit) {
                        reason = "stale " + format_double(m) + "y quotes: more than "
                            + std::to_string(options.staleness_limit) + " identical in a row ending " + date;
                        break;
                    }
                }
                if (!reason.empty())
                    break;
            }
        if (reason.empty() && !b.prices.count(firm))
            reason = "no equity prices";
        if (reason.empty()) {
            const auto it = fundamentals.find(firm);
            if (it == fundamentals.end())
                reason = "no fundamentals";
            else
                for (const auto& f : it->second) {
                    if (!std::isfinite(f.scope1) || !std::isfinite(f.scope2)) {
                        reason = "missing emissions for " + std::to_string(f.year);
                        break;
                    }
                    if (!f.rating) {
                        reason = "missing rating for " + std::to_string(f.year);
                        break;
                    }
                    if (!(f.revenue > 0.0)) {
                        reason = "non-positive revenue for " + std::to_string(f.year);
                        break;
                    }
                }
        }
        if (!reason.empty()) {
            b.excluded.push_back({firm, reason});
            continue;
        }
        for (const auto& [date, by_maturity] : dates) {
            TermStructure ts{firm, date, {}};
            for (double m : options.maturities)
                ts.points.push_back({m, by_maturity.at(m)});
            b.cds.push_back(std::move(ts));
        }
        for (const auto& f : fundamentals.at(firm))
            b.fundamentals.push_back(f);
    }
    for (const auto& [firm, f] : fundamentals)
        if (!quotes.count(firm))
            b.excluded.push_back({firm, "no CDS quotes"});
    for (auto it = b.prices.begin(); it != b.prices.end();)
        it = std::any_of(b.cds.begin(), b.cds.end(), [&](const auto& ts) { return ts.firm == it->first; })
            ? std::next(it)
            : b.prices.erase(it);

    if (options.winsorize_spreads && !b.cds.empty())
        for (std::size_t k = 0; k < options.maturities.size(); ++k) {
            std::vector<double> column;
            for (const auto& ts : b.cds)
                column.push_back(ts.points[k].spread_bp);
            const auto clipped = winsorize(column, options.winsorize_level);
            for (std::size_t i = 0; i < b.cds.size(); ++i)
                b.cds[i].points[k].spread_bp = clipped[i];
        }
    return b;
}

/// Writes a bundle in the schema read by load_bundle (no exclusions applied on write).
inline void write_bundle(const std::filesystem::path& dir, const DatasetBundle& b)
{
    std::filesystem::create_directories(dir);
    const std::string v = std::to_string(kSchemaVersion);
    {
        CsvWriter w(dir / "cds.csv", schema::cds);
        for (const auto& ts : b.cds)
            for (const auto& pt : ts.points)
                w.row({v, ts.firm, ts.date, format_double(pt.maturity), format_double(pt.spread_bp)});
    }
    {
        CsvWriter w(dir / "prices.csv", schema::prices);
        for (const auto& [firm, series] : b.prices)
            for (const auto& p : series)
                w.row({v, firm, p.date, format_double(p.value)});
    }
    {
        CsvWriter w(dir / "fundamentals.csv", schema::fundamentals);
        for (const auto& f : b.fundamentals)
            w.row({v, f.firm, std::to_string(f.year), std::isfinite(f.scope1) ? format_double(f.scope1) : "",
                   std::isfinite(f.scope2) ? format_double(f.scope2) : "", format_double(f.revenue),
                   f.rating.value_or(""),
                   f.agency == Agency::Moodys ? "Moodys" : (f.agency == Agency::Fitch ? "Fitch" : "SP")});
    }
    {
        CsvWriter w(dir / "carbon.csv", schema::carbon);
        for (const auto& c : b.carbon)
            w.row({v, c.date, format_double(c.value)});
    }
    {
        CsvWriter w(dir / "rates.csv", schema::rates);
        for (const auto& [date, rate] : b.rates)
            w.row({v, date, format_double(rate)});
    }
}

// ---------------------------------------------------------------------------
// Calibration store
// ---------------------------------------------------------------------------

namespace schema {
inline const std::vector<std::string> calibration{"schema_version", "firm",       "date",      "model",     "r",
                                                  "recovery",       "leverage",   "sigma",     "lambda",    "eta",
                                                  "mape",           "converged",  "unstable",  "iterations", "evaluations"};
inline const std::vector<std::string> spreads{"schema_version",   "firm",     "date",     "model",
                                              "maturity",         "model_bp", "market_bp", "model_bp_display"};
inline const std::vector<std::string> failures{"schema_version", "firm", "date", "code", "message"};
} // namespace schema

/// A calibrated firm-day together with the market quotes it was fitted to.
struct StoredCalibration {
    CalibrationResult result;
    std::vector<double> maturities;
    std::vector<double> market_bp;
};

inline void write_calibration_store(const std::filesystem::path& dir, const std::vector<StoredCalibration>& rows,
                                    const std::vector<CalibrationFailure>& failures = {})
{
    std::filesystem::create_directories(dir);
    const std::string v = std::to_string(kSchemaVersion);
    CsvWriter cal(dir / "calibration.csv", schema::calibration);
    CsvWriter spr(dir / "spreads.csv", schema::spreads);
    for (const auto& s : rows) {
        const auto& r = s.result;
        std::vector<std::string> params(4);
        for (std::size_t i = 0; i < 4; ++i)
            params[i] = i < r.parameters.size() ? format_double(r.parameters[i]) : "";
        cal.row({v, r.firm, r.date, std::string(to_string(r.model)), format_double(r.r), format_double(r.recovery),
                 params[0], params[1], params[2], params[3], format_double(r.mape), r.converged ? "1" : "0",
                 r.unstable ? "1" : "0", std::to_string(r.iterations), std::to_string(r.evaluations)});
        for (std::size_t k = 0; k < r.model_spreads.size(); ++k)
            spr.row({v, r.firm, r.date, std::string(to_string(r.model)), format_double(s.maturities[k]),
                     format_double(r.model_spreads[k]), format_double(s.market_bp[k]),
                     format_fixed(r.model_spreads[k], 4)});
    }
    CsvWriter fail(dir / "failures.csv", schema::failures);
    for (const auto& f : failures) {
        std::string msg = f.message;
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        fail.row({v, f.firm, f.date, std::string(to_string(f.code)), msg});
    }
}

[[nodiscard]] inline std::vector<StoredCalibration> read_calibration_store(const std::filesystem::path& dir,
                                                                           int version = kSchemaVersion)
{
    const CsvTable cal = read_csv(dir / "calibration.csv");
    cal.require_columns(schema::calibration);
    cal.require_schema_version(version);
    const CsvTable spr = read_csv(dir / "spreads.csv");
    spr.require_columns(schema::spreads);
    spr.require_schema_version(version);

    std::vector<StoredCalibration> out;
    std::map<std::string, std::size_t> index;
    for (std::size_t r = 0; r < cal.size(); ++r) {
        StoredCalibration s;
        auto& c = s.result;
        c.firm = cal.text(r, 1);
        c.date = cal.date(r, 2);
        c.model = parse_model_tag(cal.text(r, 3));
        c.r = cal.number(r, 4);
        c.recovery = cal.number(r, 5);
        for (std::size_t i = 0; i < parameter_count(c.model); ++i)
            c.parameters.push_back(cal.number(r, 6 + i));
        c.mape = cal.number(r, 10);
        c.converged = cal.integer(r, 11) != 0;
        c.unstable = cal.integer(r, 12) != 0;
        c.iterations = static_cast<int>(cal.integer(r, 13));
        c.evaluations = static_cast<int>(cal.integer(r, 14));
        const std::string key = c.firm + "|" + c.date + "|" + cal.text(r, 3);
        require(index.emplace(key, out.size()).second, ErrorCode::IntegrityViolation,
                "calibration.csv: duplicate key (" + c.firm + ", " + c.date + ")");
        out.push_back(std::move(s));
    }
    for (std::size_t r = 0; r < spr.size(); ++r) {
        const std::string key = spr.text(r, 1) + "|" + spr.date(r, 2) + "|" + spr.text(r, 3);
        const auto it = index.find(key);
        require(it != index.end(), ErrorCode::IntegrityViolation,
                "spreads.csv: no calibration row for (" + spr.text(r, 1) + ", " + spr.text(r, 2) + ")");
        auto& s = out[it->second];
        s.maturities.push_back(spr.number(r, 4));
        s.result.model_spreads.push_back(spr.number(r, 5));
        s.market_bp.push_back(spr.number(r, 6));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Factor table
// ---------------------------------------------------------------------------

struct FactorRow {
    std::string date;
    std::string factor;   // TR_median, TR_wasserstein, MRI, CP, return, vol
    std::string firm;     // empty for market-wide factors
    std::string bucket;   // rating bucket for MRI, else empty
    std::optional<double> maturity;
    double value = 0.0;
};

namespace schema {
inline const std::vector<std::string> factors{"schema_version", "date",     "factor", "firm",
                                              "bucket",         "maturity", "value"};
} // namespace schema

inline void write_factor_table(const std::filesystem::path& path, const std::vector<FactorRow>& rows)
{
    CsvWriter w(path, schema::factors);
    const std::string v = std::to_string(kSchemaVersion);
    for (const auto& r : rows)
        w.row({v, r.date, r.factor, r.firm, r.bucket, r.maturity ? format_double(*r.maturity) : "",
               format_double(r.value)});
}

[[nodiscard]] inline std::vector<FactorRow> read_factor_table(const std::filesystem::path& path,
                                                              int version = kSchemaVersion)
{
    const CsvTable t = read_csv(path);
    t.require_columns(schema::factors);
    t.require_schema_version(version);
    std::vector<FactorRow> rows;
    for (std::size_t r = 0; r < t.size(); ++r) {
        FactorRow f{t.date(r, 1), t.text(r, 2), t.text(r, 3), t.text(r, 4), std::nullopt, t.number(r, 6)};
        if (!t.text(r, 5).empty())
            f.maturity = t.number(r, 5);
        rows.push_back(std::move(f));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

/// Config, seed and input fingerprints of a run. Two runs with equal
/// manifests produce equal outputs.
struct RunManifest {
    std::string command;
    nlohmann::json config;
    std::uint64_t seed = 0;
    std::map<std::string, std::uint64_t> inputs;

    [[nodiscard]] std::uint64_t config_hash() const { return fnv1a(config.dump()); }

    [[nodiscard]] nlohmann::json to_json() const
    {
        nlohmann::json j;
        j["command"] = command;
        j["schema_version"] = kSchemaVersion;
        j["config"] = config;
        j["config_hash"] = hex(config_hash());
        j["seed"] = seed;
        nlohmann::json in = nlohmann::json::object();
        for (const auto& [name, h] : inputs)
            in[name] = hex(h);
        j["inputs"] = in;
        return j;
    }

    void write(const std::filesystem::path& path) const
    {
        std::ofstream out(path, std::ios::binary);
        require(static_cast<bool>(out), ErrorCode::InvalidArgument, "cannot write " + path.string());
        out << to_json().dump(2) << '\n';
    }

    [[nodiscard]] static std::string hex(std::uint64_t h)
    {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }
};

} // namespace jdcredit
