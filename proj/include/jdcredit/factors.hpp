#pragma once

// Control variables and transition-risk factors: returns, rolling volatility,
// rating buckets and MRI, green/brown grouping, TR factors, carbon price.

#include <jdcredit/error.hpp>
#include <jdcredit/stats.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace jdcredit {

struct DatedValue {
    std::string date; // ISO-8601
    double value = 0.0;
};

using Series = std::vector<DatedValue>;

namespace detail {

inline void require_increasing_dates(const Series& s, std::string_view what)
{
    for (std::size_t i = 1; i < s.size(); ++i)
        require(s[i].date > s[i - 1].date, ErrorCode::InvalidArgument,
                std::string(what) + ": dates must be strictly increasing at " + s[i].date);
}

} // namespace detail

/// Log returns; the first date is dropped.
[[nodiscard]] inline Series stock_returns(const Series& prices)
{
    detail::require_increasing_dates(prices, "prices");
    for (const auto& p : prices)
        require(p.value > 0.0 && std::isfinite(p.value), ErrorCode::NonPositivePrice,
                "non-positive price on " + p.date);
    Series out;
    for (std::size_t i = 1; i < prices.size(); ++i)
        out.push_back({prices[i].date, std::log(prices[i].value) - std::log(prices[i - 1].value)});
    return out;
}

enum class VolatilityMeasure { StandardDeviation, Variance };

inline constexpr int kVolatilityWindow = 255;

/// Annualized dispersion of the trailing `window` returns, dated at the window end.
[[nodiscard]] inline Series rolling_volatility(const Series& returns, int window = kVolatilityWindow,
                                               VolatilityMeasure measure = VolatilityMeasure::StandardDeviation,
                                               double periods_per_year = 255.0)
{
    require(window >= 2, ErrorCode::InvalidArgument, "volatility window must be at least 2");
    require(returns.size() >= static_cast<std::size_t>(window), ErrorCode::WindowTooLong,
            "window " + std::to_string(window) + " exceeds " + std::to_string(returns.size()) + " returns");
    Series out;
    std::vector<double> buf(static_cast<std::size_t>(window));
    for (std::size_t end = static_cast<std::size_t>(window); end <= returns.size(); ++end) {
        for (std::size_t k = 0; k < buf.size(); ++k)
            buf[k] = returns[end - buf.size() + k].value;
        const double var = stats::sample_variance(buf) * periods_per_year;
        out.push_back({returns[end - 1].date, measure == VolatilityMeasure::Variance ? var : std::sqrt(var)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ratings
// ---------------------------------------------------------------------------

enum class Agency { SP, Moodys, Fitch };

[[nodiscard]] inline Agency parse_agency(std::string_view s)
{
    if (s == "SP" || s == "S&P" || s == "sp")
        return Agency::SP;
    if (s == "Moodys" || s == "Moody's" || s == "moodys")
        return Agency::Moodys;
    if (s == "Fitch" || s == "fitch")
        return Agency::Fitch;
    throw Error(ErrorCode::InvalidArgument, "unknown rating agency '" + std::string(s) + "'");
}

/// Version tag of the embedded conversion table.
inline constexpr std::string_view kRatingTableVersion = "1";

// Common ordinal scale, 1 = AAA/Aaa. S&P and Fitch share symbols.
inline constexpr std::array<std::string_view, 22> kSpScale{"AAA", "AA+", "AA",  "AA-",  "A+",  "A",   "A-", "BBB+",
                                                           "BBB", "BBB-", "BB+", "BB",  "BB-", "B+",  "B",  "B-",
                                                           "CCC+", "CCC", "CCC-", "CC", "C",   "D"};
// Moody's has no default grade; its scale stops at C.
inline constexpr std::array<std::string_view, 21> kMoodysScale{"Aaa", "Aa1", "Aa2",  "Aa3",  "A1",   "A2",  "A3",
                                                               "Baa1", "Baa2", "Baa3", "Ba1", "Ba2",  "Ba3", "B1",
                                                               "B2",  "B3",  "Caa1", "Caa2", "Caa3", "Ca",  "C"};

[[nodiscard]] inline int rating_ordinal(std::string_view rating, Agency agency)
{
    auto find = [&](const auto& scale) {
        for (std::size_t i = 0; i < scale.size(); ++i)
            if (scale[i] == rating)
                return static_cast<int>(i) + 1;
        return 0;
    };
    if (const int k = agency == Agency::Moodys ? find(kMoodysScale) : find(kSpScale); k > 0)
        return k;
    throw Error(ErrorCode::InvalidArgument, "rating '" + std::string(rating) + "' not on the scale");
}

/// S&P symbol for a common-scale ordinal.
[[nodiscard]] inline std::string_view sp_symbol(int ordinal)
{
    require(ordinal >= 1 && ordinal <= static_cast<int>(kSpScale.size()), ErrorCode::InvalidArgument,
            "rating ordinal out of range");
    return kSpScale[static_cast<std::size_t>(ordinal - 1)];
}

enum class RatingBucket { AAA_AA = 0, A = 1, BBB = 2, BB_OrLower = 3 };
inline constexpr std::size_t kRatingBuckets = 4;

[[nodiscard]] constexpr std::string_view to_string(RatingBucket b) noexcept
{
    switch (b) {
    case RatingBucket::AAA_AA: return "AAA/AA";
    case RatingBucket::A: return "A";
    case RatingBucket::BBB: return "BBB";
    case RatingBucket::BB_OrLower: return "BB+ or lower";
    }
    return "?";
}

[[nodiscard]] inline RatingBucket rating_bucket(int ordinal)
{
    require(ordinal >= 1 && ordinal <= 22, ErrorCode::InvalidArgument, "rating ordinal out of range");
    if (ordinal <= 4)
        return RatingBucket::AAA_AA;
    if (ordinal <= 7)
        return RatingBucket::A;
    if (ordinal <= 10)
        return RatingBucket::BBB;
    return RatingBucket::BB_OrLower;
}

// ---------------------------------------------------------------------------
// Green / brown grouping
// ---------------------------------------------------------------------------

struct FirmFundamentals {
    std::string firm;
    int year = 0;
    double scope1 = 0.0;  // tonnes CO2e
    double scope2 = 0.0;  // tonnes CO2e
    double revenue = 0.0; // currency units
    std::optional<std::string> rating;
    Agency agency = Agency::SP;

    [[nodiscard]] double emission_intensity() const { return (scope1 + scope2) / revenue; }
};

struct GroupCell {
    int emission_tercile = 0; // 0 lowest intensity
    int rating_tercile = 0;   // 0 best rated
};

struct Exclusion {
    std::string firm;
    std::string reason;
};

struct GreenBrownGrouping {
    std::vector<std::string> green; // sorted firm ids
    std::vector<std::string> brown;
    std::map<std::string, GroupCell> grid;
    std::vector<Exclusion> excluded;
};

namespace detail {

// Tercile by rank k in (value, id) order: 0 while k <= (n-1)/3, 1 while
// k <= 2(n-1)/3, else 2. For distinct values this is the type-7 cut with
// "value <= cut" membership; ties fall back on firm id.
inline std::vector<int> rank_terciles(const std::vector<std::pair<double, std::string>>& keyed)
{
    std::vector<std::size_t> idx(keyed.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return keyed[a] < keyed[b]; });
    const double n1 = static_cast<double>(keyed.size()) - 1.0;
    std::vector<int> out(keyed.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const double kk = static_cast<double>(k);
        out[idx[k]] = kk * 3.0 <= n1 ? 0 : (kk * 3.0 <= 2.0 * n1 ? 1 : 2);
    }
    return out;
}

} // namespace detail

/// Green: lowest emission tercile with top or middle rating tercile. Brown:
/// highest emission tercile with bottom or middle rating tercile.
[[nodiscard]] inline GreenBrownGrouping classify_green_brown(std::vector<FirmFundamentals> firms)
{
    std::sort(firms.begin(), firms.end(), [](const auto& a, const auto& b) { return a.firm < b.firm; });
    GreenBrownGrouping g;
    std::vector<const FirmFundamentals*> eligible;
    std::vector<int> ordinals;
    for (const auto& f : firms) {
        if (!f.rating) {
            g.excluded.push_back({f.firm, "missing rating"});
            continue;
        }
        if (!(f.revenue > 0.0) || !(f.scope1 >= 0.0) || !(f.scope2 >= 0.0)) {
            g.excluded.push_back({f.firm, "emission intensity not computable"});
            continue;
        }
        try {
            ordinals.push_back(rating_ordinal(*f.rating, f.agency));
        } catch (const Error&) {
            g.excluded.push_back({f.firm, "unknown rating " + *f.rating});
            continue;
        }
        eligible.push_back(&f);
    }
    require(eligible.size() >= 9, ErrorCode::TooFewFirms,
            std::to_string(eligible.size()) + " eligible firms, at least 9 needed for terciles");

    std::vector<std::pair<double, std::string>> by_es, by_rating;
    for (std::size_t i = 0; i < eligible.size(); ++i) {
        by_es.emplace_back(eligible[i]->emission_intensity(), eligible[i]->firm);
        by_rating.emplace_back(static_cast<double>(ordinals[i]), eligible[i]->firm);
    }
    const auto es_t = detail::rank_terciles(by_es);
    const auto rt_t = detail::rank_terciles(by_rating);
    for (std::size_t i = 0; i < eligible.size(); ++i) {
        const std::string& id = eligible[i]->firm;
        g.grid[id] = {es_t[i], rt_t[i]};
        if (es_t[i] == 0 && rt_t[i] <= 1)
            g.green.push_back(id);
        if (es_t[i] == 2 && rt_t[i] >= 1)
            g.brown.push_back(id);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Transition-risk factors
// ---------------------------------------------------------------------------

/// Median brown spread minus median green spread.
[[nodiscard]] inline double tr_median(const std::vector<double>& green, const std::vector<double>& brown)
{
    require(!green.empty() && !brown.empty(), ErrorCode::EmptyGroup, "TR median needs nonempty groups");
    return stats::median(brown) - stats::median(green);
}

/// First-order Wasserstein distance between the two empirical distributions,
/// integrated exactly over the merged quantile breakpoints.
[[nodiscard]] inline double tr_wasserstein(std::vector<double> green, std::vector<double> brown)
{
    require(!green.empty() && !brown.empty(), ErrorCode::EmptyGroup, "TR Wasserstein needs nonempty groups");
    std::sort(green.begin(), green.end());
    std::sort(brown.begin(), brown.end());
    const std::size_t n = green.size(), m = brown.size();
    // Walk the partition {i/n} U {j/m} with integer arithmetic on the common denominator n*m.
    std::size_t i = 0, j = 0;
    std::size_t u = 0; // position in units of 1/(n m)
    double total = 0.0;
    while (i < n && j < m) {
        const std::size_t next_i = (i + 1) * m, next_j = (j + 1) * n;
        const std::size_t next = std::min(next_i, next_j);
        total += std::abs(green[i] - brown[j]) * static_cast<double>(next - u);
        u = next;
        if (next == next_i)
            ++i;
        if (next == next_j)
            ++j;
    }
    return total / static_cast<double>(n * m);
}

/// Median spread per rating bucket; empty buckets have no value.
[[nodiscard]] inline std::array<std::optional<double>, kRatingBuckets>
mri(const std::vector<std::pair<RatingBucket, double>>& spreads)
{
    std::array<std::vector<double>, kRatingBuckets> groups;
    for (const auto& [bucket, s] : spreads)
        groups[static_cast<std::size_t>(bucket)].push_back(s);
    std::array<std::optional<double>, kRatingBuckets> out;
    for (std::size_t b = 0; b < kRatingBuckets; ++b)
        if (!groups[b].empty())
            out[b] = stats::median(groups[b]);
    return out;
}

struct FactorSeries {
    std::string name; // TR_median, TR_wasserstein, MRI, CP
    std::optional<double> maturity;
    Series values;

    /// First differences dated at the later observation.
    [[nodiscard]] Series differences() const
    {
        Series d;
        for (std::size_t i = 1; i < values.size(); ++i)
            d.push_back({values[i].date, values[i].value - values[i - 1].value});
        return d;
    }
};

[[nodiscard]] inline FactorSeries carbon_factor(const Series& prices)
{
    detail::require_increasing_dates(prices, "carbon price");
    return {"CP", std::nullopt, prices};
}

/// Clips values above the empirical upper quantile (type 7); one-sided.
[[nodiscard]] inline std::vector<double> winsorize(std::vector<double> x, double upper = 0.99)
{
    require(!x.empty(), ErrorCode::InvalidArgument, "winsorize of an empty sample");
    const double cap = stats::quantile(x, upper);
    for (double& v : x)
        v = std::min(v, cap);
    return x;
}

} // namespace jdcredit
