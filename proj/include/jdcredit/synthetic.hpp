#pragma once

// Synthetic bundles with known parameters, and factor-loading panels with a
// planted coefficient.

#include <jdcredit/data_io.hpp>
#include <jdcredit/quantreg.hpp>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/seed_seq.hpp>
#include <boost/random/uniform_01.hpp>

#include <chrono>

namespace jdcredit {

/// Weekday dates starting at `start` (ISO), `count` of them.
[[nodiscard]] inline std::vector<std::string> business_days(const std::string& start, std::size_t count)
{
    using namespace std::chrono;
    const int y = std::stoi(start.substr(0, 4));
    const unsigned m = static_cast<unsigned>(std::stoi(start.substr(5, 2)));
    const unsigned d = static_cast<unsigned>(std::stoi(start.substr(8, 2)));
    const year_month_day ymd0{year{y}, month{m}, day{d}};
    require(ymd0.ok(), ErrorCode::InvalidArgument, "invalid start date " + start);
    sys_days day_ = ymd0;
    std::vector<std::string> out;
    while (out.size() < count) {
        const weekday wd{day_};
        if (wd != Saturday && wd != Sunday) {
            const year_month_day ymd{day_};
            char buf[16];
            std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                          static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
            out.emplace_back(buf);
        }
        day_ += days{1};
    }
    return out;
}

struct SimulationOptions {
    int firms = 12;
    int days = 20;           // CDS dates
    int history_days = 260;  // extra leading price-only dates for returns and volatility
    std::uint64_t seed = 20240101;
    double r = 0.02;
    double recovery = 0.6;
    double transition_loading = 2.0;   // d log(lambda) / dX for the most emission-intensive firm
    double transition_volatility = 0.05; // daily sd of the transition factor X
    double quote_noise = 0.0;          // relative multiplicative noise on quoted spreads
    std::string start_date = "2021-01-04";
    std::vector<double> maturities{kCanonicalMaturities.begin(), kCanonicalMaturities.end()};
    PricingConfig pricing{};
};

struct TruthRow {
    std::string firm;
    std::string date;
    double leverage = 0.0;
    double sigma = 0.0;
    double lambda = 0.0;
    double eta = 0.0;
};

struct SimulatedData {
    DatasetBundle bundle;
    std::vector<TruthRow> truth;      // one row per firm and CDS date
    Series transition_factor;         // X_t on CDS dates
};

namespace detail {

// S&P symbol from leverage; higher leverage (further from the barrier) rates better.
inline std::string rating_from_leverage(double leverage)
{
    if (leverage >= 5.0)
        return "AA";
    if (leverage >= 4.0)
        return "A";
    if (leverage >= 3.2)
        return "BBB";
    if (leverage >= 2.6)
        return "BB+";
    return "BB-";
}

} // namespace detail

/// Known-parameter panel. Log-leverage follows a random walk with the firm's
/// diffusion volatility; equity tracks leverage - 1. A common transition
/// factor X_t raises jump intensity in proportion to each firm's emission
/// rank, and drives the carbon price 25 exp(0.3 X_t).
[[nodiscard]] inline SimulatedData simulate_bundle(const SimulationOptions& o)
{
    require(o.firms >= 1 && o.days >= 1 && o.history_days >= 0, ErrorCode::InvalidArgument,
            "simulation needs at least one firm and one day");
    boost::random::seed_seq seq{static_cast<std::uint32_t>(o.seed), static_cast<std::uint32_t>(o.seed >> 32)};
    boost::random::mt19937_64 rng(seq);
    boost::random::uniform_01<double> unif;
    boost::random::normal_distribution<double> normal;

    const std::size_t total = static_cast<std::size_t>(o.history_days + o.days);
    const auto dates = business_days(o.start_date, total);
    const std::size_t first_cds = static_cast<std::size_t>(o.history_days);

    std::vector<double> x(total, 0.0);
    for (std::size_t t = 1; t < total; ++t)
        x[t] = x[t - 1] + o.transition_volatility * normal(rng);

    SimulatedData sim;
    auto& b = sim.bundle;
    for (std::size_t t = 0; t < total; ++t) {
        b.carbon.push_back({dates[t], 25.0 * std::exp(0.3 * x[t]) * std::exp(0.01 * normal(rng))});
        if (t >= first_cds) {
            b.rates[dates[t]] = o.r;
            sim.transition_factor.push_back({dates[t], x[t]});
        }
    }

    // Emission intensities on a log scale; rank in [0, 1] sets the transition exposure.
    const auto n = static_cast<std::size_t>(o.firms);
    std::vector<double> intensity(n);
    for (auto& v : intensity)
        v = std::exp(3.0 + 1.5 * normal(rng));
    std::vector<double> exposure(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t rank = 0;
        for (std::size_t j = 0; j < n; ++j)
            rank += intensity[j] < intensity[i] ? 1 : 0;
        exposure[i] = n > 1 ? static_cast<double>(rank) / static_cast<double>(n - 1) : 0.0;
    }

    const int first_year = std::stoi(dates.front().substr(0, 4));
    const int last_year = std::stoi(dates.back().substr(0, 4));
    for (std::size_t i = 0; i < n; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "F%03zu", i + 1);
        const std::string firm = id;

        // Redraw until the starting term structure is moderate.
        JumpDiffusionParams p{o.r, 0.0, 0.0, 0.0, 0.0};
        TermStructure ts0;
        for (int attempt = 0;; ++attempt) {
            require(attempt < 1000, ErrorCode::NoConvergence, "could not draw moderate parameters");
            p.leverage = 2.0 + 4.0 * unif(rng);
            p.sigma = 0.1 + 0.25 * unif(rng);
            p.lambda = 0.1 + 0.7 * unif(rng);
            p.eta = 1.0 + 7.0 * unif(rng);
            ts0 = price_term_structure(p, o.recovery, o.maturities, o.pricing);
            const auto mx = std::max_element(ts0.points.begin(), ts0.points.end(),
                                             [](auto& a, auto& c) { return a.spread_bp < c.spread_bp; });
            if (mx->spread_bp < 800.0 && ts0.points.front().spread_bp > 0.01)
                break;
        }
        const double base_lambda = p.lambda;
        const double leverage0 = p.leverage;

        const double revenue = 1e9 * (0.5 + unif(rng));
        const double ghg = intensity[i] * revenue / 1e6;
        const double share1 = 0.5 + 0.4 * unif(rng);
        for (int year = first_year; year <= last_year; ++year)
            b.fundamentals.push_back({firm, year, ghg * share1, ghg * (1.0 - share1), revenue,
                                      detail::rating_from_leverage(leverage0), Agency::SP});

        double log_lev = std::log(leverage0);
        const double daily = p.sigma / std::sqrt(255.0);
        for (std::size_t t = 0; t < total; ++t) {
            if (t > 0)
                log_lev = std::max(log_lev + daily * normal(rng), std::log(1.2));
            const double lev = std::exp(log_lev);
            b.prices[firm].push_back({dates[t], 100.0 * (lev - 1.0) / (leverage0 - 1.0)});
            if (t < first_cds)
                continue;
            JumpDiffusionParams pt = p;
            pt.leverage = lev;
            pt.lambda = base_lambda * std::exp(o.transition_loading * exposure[i] * (x[t] - x[first_cds]));
            TermStructure ts = price_term_structure(pt, o.recovery, o.maturities, o.pricing);
            ts.firm = firm;
            ts.date = dates[t];
            if (o.quote_noise > 0.0)
                for (auto& pt_ : ts.points)
                    pt_.spread_bp *= std::exp(o.quote_noise * normal(rng));
            b.cds.push_back(std::move(ts));
            sim.truth.push_back({firm, dates[t], pt.leverage, pt.sigma, pt.lambda, pt.eta});
        }
    }
    std::sort(b.cds.begin(), b.cds.end(),
              [](const auto& a, const auto& c) { return std::tie(a.firm, a.date) < std::tie(c.firm, c.date); });
    return sim;
}

namespace schema {
inline const std::vector<std::string> truth{"schema_version", "firm", "date", "leverage", "sigma", "lambda", "eta"};
} // namespace schema

inline void write_truth(const std::filesystem::path& path, const std::vector<TruthRow>& truth)
{
    CsvWriter w(path, schema::truth);
    const std::string v = std::to_string(kSchemaVersion);
    for (const auto& t : truth)
        w.row({v, t.firm, t.date, format_double(t.leverage), format_double(t.sigma), format_double(t.lambda),
               format_double(t.eta)});
}

struct FactorPanelOptions {
    int firms = 20;
    int days = 60;
    std::vector<double> beta{0.5, -0.3, 0.2, 1.0}; // last entry: the transition-risk loading
    double noise_scale = 1.0;                      // scale of the symmetric (Laplace) noise
    std::uint64_t seed = 1;
};

/// y = alpha_i + x beta + e with firm effects, correlated regressors and
/// symmetric heavy-tailed noise. The last regressor is common across firms.
[[nodiscard]] inline Panel simulate_factor_panel(const FactorPanelOptions& o)
{
    boost::random::seed_seq seq{static_cast<std::uint32_t>(o.seed), static_cast<std::uint32_t>(o.seed >> 32),
                                0x5eedu};
    boost::random::mt19937_64 rng(seq);
    boost::random::normal_distribution<double> normal;
    boost::random::uniform_01<double> unif;
    const std::size_t m = o.beta.size();
    require(m >= 1, ErrorCode::InvalidArgument, "factor panel needs a regressor");

    Panel panel;
    for (std::size_t k = 0; k + 1 < m; ++k)
        panel.regressors.push_back("x" + std::to_string(k + 1));
    panel.regressors.push_back("dtr");
    const auto dates = business_days("2021-01-04", static_cast<std::size_t>(o.days));
    std::vector<double> common(dates.size());
    for (auto& c : common)
        c = normal(rng);
    for (int i = 0; i < o.firms; ++i) {
        const double alpha = 2.0 * normal(rng);
        for (std::size_t t = 0; t < dates.size(); ++t) {
            std::vector<double> xv(m);
            for (std::size_t k = 0; k + 1 < m; ++k)
                xv[k] = normal(rng) + 0.3 * common[t];
            xv[m - 1] = common[t];
            double y = alpha;
            for (std::size_t k = 0; k < m; ++k)
                y += o.beta[k] * xv[k];
            const double u = unif(rng) - 0.5;
            y += -o.noise_scale * (u < 0 ? -1.0 : 1.0) * std::log(1.0 - 2.0 * std::abs(u));
            panel.rows.push_back({"F" + std::to_string(i + 1), dates[t], y, std::move(xv)});
        }
    }
    return panel;
}

} // namespace jdcredit
