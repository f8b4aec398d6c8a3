#pragma once

// Linear quantile regression by exact vertex descent, the two-step panel
// estimator with firm fixed effects, VIF screening and the paired t-test.

#include <jdcredit/error.hpp>
#include <jdcredit/parallel.hpp>

#include <Eigen/Dense>

#include <boost/math/distributions/students_t.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/seed_seq.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace jdcredit {

[[nodiscard]] inline double check_loss(double u, double tau) { return u >= 0.0 ? tau * u : (tau - 1.0) * u; }

struct QuantRegSolution {
    Eigen::VectorXd coefficients; // one per design column
    double objective = 0.0;
    int iterations = 0;
    std::vector<Eigen::Index> basis; // observations fitted exactly
};

namespace detail {

inline void require_tau(double tau)
{
    require(tau > 0.0 && tau < 1.0, ErrorCode::InvalidArgument, "quantile level must lie in (0, 1)");
}

// Minimizes sum rho_tau(y - Z b) over b. Iterates are vertices: p observations
// with zero residual. Each step leaves one basis observation in one direction
// and moves along the edge to the kink where the one-sided slope turns
// nonnegative (a weighted-median line search), so the objective strictly
// decreases. At a degenerate vertex with no descending edge, bases that swap in
// other zero-residual observations are searched before declaring optimality.
class VertexDescent {
public:
    VertexDescent(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y, double tau)
        : Z_(Z), y_(y), tau_(tau), n_(Z.rows()), p_(Z.cols())
    {
        require_tau(tau);
        require(n_ == y.size(), ErrorCode::InvalidArgument, "design and response lengths differ");
        require(p_ >= 1 && n_ >= p_, ErrorCode::InvalidArgument, "fewer observations than coefficients");
        require(Z.allFinite() && y.allFinite(), ErrorCode::Unbounded, "non-finite regression input");
        zero_tol_ = 1e-11 * std::max(1.0, y.cwiseAbs().maxCoeff());
    }

    QuantRegSolution solve(const std::vector<Eigen::Index>* start = nullptr)
    {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z_);
        qr.setThreshold(1e-12);
        require(qr.rank() == p_, ErrorCode::RankDeficient, "design matrix is not of full column rank");

        std::vector<Eigen::Index> basis = start ? *start : initial_basis(qr);
        QuantRegSolution sol;
        const int max_iter = 100 * static_cast<int>(n_) + 1000;
        for (;;) {
            require(sol.iterations < max_iter, ErrorCode::NoConvergence, "quantile regression did not converge");
            ++sol.iterations;
            Vertex v = vertex(basis);
            Move move = best_edge(v);
            if (!move.improving) {
                std::optional<std::vector<Eigen::Index>> escape = degenerate_escape(v);
                if (!escape) {
                    sol.coefficients = v.b;
                    sol.objective = objective(v.r);
                    sol.basis = v.basis;
                    return sol;
                }
                basis = *escape;
                continue;
            }
            basis[static_cast<std::size_t>(move.leave)] = line_search(v, move);
        }
    }

    /// Coefficients and objective at a given basis, without iterating.
    [[nodiscard]] QuantRegSolution at_basis(const std::vector<Eigen::Index>& basis) const
    {
        const Vertex v = vertex(basis);
        QuantRegSolution sol;
        sol.coefficients = v.b;
        sol.objective = objective(v.r);
        sol.basis = basis;
        return sol;
    }

    [[nodiscard]] double objective(const Eigen::VectorXd& r) const
    {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n_; ++i)
            s += check_loss(r[i], tau_);
        return s;
    }

private:
    struct Vertex {
        std::vector<Eigen::Index> basis;
        std::vector<bool> in_basis;
        Eigen::VectorXd b, r;
        Eigen::MatrixXd A; // Z * inverse(Z_basis): column j is the edge leaving basis slot j
    };

    struct Move {
        bool improving = false;
        Eigen::Index leave = 0;
        double sign = 1.0;
        double slope = 0.0;
    };

    std::vector<Eigen::Index> initial_basis(const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr) const
    {
        // Observations closest to the least-squares fit, skipping dependent rows.
        const Eigen::VectorXd r = y_ - Z_ * qr.solve(y_);
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n_));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return std::abs(r[a]) < std::abs(r[b]); });
        std::vector<Eigen::Index> basis;
        Eigen::MatrixXd rows(0, p_);
        for (Eigen::Index i : order) {
            Eigen::MatrixXd trial(rows.rows() + 1, p_);
            trial << rows, Z_.row(i);
            Eigen::FullPivLU<Eigen::MatrixXd> lu(trial);
            lu.setThreshold(1e-10);
            if (lu.rank() == trial.rows()) {
                rows = trial;
                basis.push_back(i);
                if (static_cast<Eigen::Index>(basis.size()) == p_)
                    break;
            }
        }
        require(static_cast<Eigen::Index>(basis.size()) == p_, ErrorCode::RankDeficient,
                "no nonsingular starting basis");
        return basis;
    }

    Vertex vertex(const std::vector<Eigen::Index>& basis) const
    {
        Vertex v;
        v.basis = basis;
        v.in_basis.assign(static_cast<std::size_t>(n_), false);
        Eigen::MatrixXd Zh(p_, p_);
        Eigen::VectorXd yh(p_);
        for (Eigen::Index j = 0; j < p_; ++j) {
            const Eigen::Index i = basis[static_cast<std::size_t>(j)];
            v.in_basis[static_cast<std::size_t>(i)] = true;
            Zh.row(j) = Z_.row(i);
            yh[j] = y_[i];
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(Zh);
        require(lu.isInvertible(), ErrorCode::RankDeficient, "singular basis");
        v.b = lu.solve(yh);
        v.r = y_ - Z_ * v.b;
        for (Eigen::Index i : basis)
            v.r[i] = 0.0;
        v.A = Z_ * lu.inverse();
        return v;
    }

    // One-sided derivative of rho(r - t a) at t = 0+.
    double unit_slope(double r, double a) const
    {
        if (r > zero_tol_)
            return -tau_ * a;
        if (r < -zero_tol_)
            return (1.0 - tau_) * a;
        return std::max(-tau_ * a, (1.0 - tau_) * a);
    }

    double edge_slope(const Vertex& v, Eigen::Index j, double sign) const
    {
        // Basis slot j gets residual -sign * t; the others stay at zero.
        double g = sign > 0 ? 1.0 - tau_ : tau_;
        for (Eigen::Index i = 0; i < n_; ++i)
            if (!v.in_basis[static_cast<std::size_t>(i)])
                g += unit_slope(v.r[i], sign * v.A(i, j));
        return g;
    }

    Move best_edge(const Vertex& v) const
    {
        Move best;
        const double tol = 1e-12 * static_cast<double>(n_);
        for (Eigen::Index j = 0; j < p_; ++j)
            for (double sign : {1.0, -1.0}) {
                const double g = edge_slope(v, j, sign);
                if (g < -tol && g < best.slope)
                    best = {true, j, sign, g};
            }
        return best;
    }

    Eigen::Index line_search(const Vertex& v, const Move& m) const
    {
        struct Kink {
            double t;
            double weight;
            Eigen::Index row;
        };
        std::vector<Kink> kinks;
        for (Eigen::Index i = 0; i < n_; ++i) {
            if (v.in_basis[static_cast<std::size_t>(i)] || std::abs(v.r[i]) <= zero_tol_)
                continue;
            const double a = m.sign * v.A(i, m.leave);
            if (a == 0.0)
                continue;
            const double t = v.r[i] / a;
            if (t > 0.0)
                kinks.push_back({t, std::abs(a), i});
        }
        std::sort(kinks.begin(), kinks.end(), [](const Kink& a, const Kink& b) {
            return a.t < b.t || (a.t == b.t && a.row < b.row);
        });
        double slope = m.slope;
        for (const Kink& k : kinks) {
            slope += k.weight;
            if (slope >= 0.0)
                return k.row;
        }
        throw Error(ErrorCode::Unbounded, "check-loss objective unbounded along an edge");
    }

    std::optional<std::vector<Eigen::Index>> degenerate_escape(const Vertex& start) const
    {
        std::vector<Eigen::Index> zeros;
        for (Eigen::Index i = 0; i < n_; ++i)
            if (!start.in_basis[static_cast<std::size_t>(i)] && std::abs(start.r[i]) <= zero_tol_)
                zeros.push_back(i);
        if (zeros.empty())
            return std::nullopt;
        std::set<std::vector<Eigen::Index>> seen;
        auto key = [](std::vector<Eigen::Index> b) {
            std::sort(b.begin(), b.end());
            return b;
        };
        std::vector<std::vector<Eigen::Index>> frontier{start.basis};
        seen.insert(key(start.basis));
        const std::size_t cap = 2000;
        while (!frontier.empty() && seen.size() < cap) {
            std::vector<std::vector<Eigen::Index>> next;
            for (const auto& basis : frontier) {
                const Vertex v = basis == start.basis ? start : vertex(basis);
                if (basis != start.basis && best_edge(v).improving)
                    return basis;
                for (Eigen::Index j = 0; j < p_; ++j)
                    for (Eigen::Index i : zeros) {
                        if (v.in_basis[static_cast<std::size_t>(i)] || std::abs(v.A(i, j)) < 1e-10)
                            continue;
                        auto swapped = basis;
                        swapped[static_cast<std::size_t>(j)] = i;
                        if (seen.insert(key(swapped)).second)
                            next.push_back(std::move(swapped));
                    }
            }
            frontier = std::move(next);
        }
        return std::nullopt;
    }

    const Eigen::MatrixXd& Z_;
    const Eigen::VectorXd& y_;
    double tau_;
    Eigen::Index n_, p_;
    double zero_tol_ = 0.0;
};

} // namespace detail

/// Minimizes sum rho_tau(y - Z b) over b for an arbitrary design Z (no intercept added).
/// The optimal basis is found on the response rescaled to unit maximum, so tolerances are relative;
/// coefficients are then solved at that basis on the original response.
[[nodiscard]] inline QuantRegSolution quantile_regression(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y, double tau)
{
    const double scale = y.size() > 0 && y.allFinite() ? y.cwiseAbs().maxCoeff() : 1.0;
    if (!(scale > 0.0))
        return detail::VertexDescent(Z, y, tau).solve();
    const Eigen::VectorXd unit = y / scale;
    const QuantRegSolution scaled = detail::VertexDescent(Z, unit, tau).solve();
    QuantRegSolution s = detail::VertexDescent(Z, y, tau).at_basis(scaled.basis);
    s.iterations = scaled.iterations;
    return s;
}

struct QuantRegSingle {
    double intercept = 0.0;
    Eigen::VectorXd slopes;
    double objective = 0.0;
};

/// Quantile regression of y on [1, X]; needs at least m + 2 rows for m regressors.
[[nodiscard]] inline QuantRegSingle qreg_single(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau)
{
    require(X.rows() >= X.cols() + 2, ErrorCode::InvalidArgument,
            "need at least " + std::to_string(X.cols() + 2) + " observations");
    Eigen::MatrixXd Z(X.rows(), X.cols() + 1);
    Z << Eigen::VectorXd::Ones(X.rows()), X;
    const QuantRegSolution s = quantile_regression(Z, y, tau);
    return {s.coefficients[0], s.coefficients.tail(X.cols()), s.objective};
}

// ---------------------------------------------------------------------------
// Two-step panel estimator
// ---------------------------------------------------------------------------

struct PanelObservation {
    std::string firm;
    std::string date;
    double y = 0.0;
    std::vector<double> x;
};

struct Panel {
    std::vector<std::string> regressors;
    std::vector<PanelObservation> rows;
};

struct PanelOptions {
    int bootstrap_reps = 500; // 0 skips standard errors
    std::uint64_t seed = 20240101;
    unsigned workers = 0;
};

struct QuantRegFit {
    double tau = 0.5;
    std::vector<std::string> regressors;
    std::map<std::string, double> fixed_effects;
    std::vector<double> beta;
    std::vector<double> std_errors; // NaN when the bootstrap is skipped
    std::vector<double> p_values;   // two-sided, normal reference
    double objective = 0.0;         // pooled check loss at (fixed effects, beta)
    std::size_t observations = 0;
    std::vector<std::string> dropped_firms; // fewer than m + 2 observations
    int bootstrap_reps = 0;                 // successful replications
};

namespace detail {

struct FirmBlock {
    std::string firm;
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    double alpha = 0.0;
};

inline Eigen::VectorXd pooled_beta(const std::vector<const FirmBlock*>& blocks, std::size_t m, double tau,
                                   double* objective = nullptr)
{
    Eigen::Index rows = 0;
    for (const auto* b : blocks)
        rows += b->X.rows();
    Eigen::MatrixXd X(rows, static_cast<Eigen::Index>(m));
    Eigen::VectorXd y(rows);
    Eigen::Index at = 0;
    for (const auto* b : blocks) {
        X.middleRows(at, b->X.rows()) = b->X;
        y.segment(at, b->X.rows()) = b->y.array() - b->alpha;
        at += b->X.rows();
    }
    const QuantRegSolution s = quantile_regression(X, y, tau);
    if (objective)
        *objective = s.objective;
    return s.coefficients;
}

inline double normal_two_sided_p(double z)
{
    return std::clamp(std::erfc(std::abs(z) / std::sqrt(2.0)), 0.0, 1.0);
}

} // namespace detail

/// Step 1: per-firm quantile regressions give the fixed effects. Step 2: the
/// pooled check loss is minimized over the slopes with the fixed effects held.
/// Standard errors come from a firm-level block bootstrap.
[[nodiscard]] inline QuantRegFit qreg_panel_two_step(const Panel& panel, double tau, const PanelOptions& options = {})
{
    detail::require_tau(tau);
    const std::size_t m = panel.regressors.size();
    require(m >= 1, ErrorCode::InvalidArgument, "panel has no regressors");

    std::map<std::string, std::vector<const PanelObservation*>> by_firm;
    for (const auto& row : panel.rows) {
        require(row.x.size() == m, ErrorCode::InvalidArgument, "row width differs from the regressor list");
        by_firm[row.firm].push_back(&row);
    }
    QuantRegFit fit;
    fit.tau = tau;
    fit.regressors = panel.regressors;
    std::vector<detail::FirmBlock> blocks;
    for (const auto& [firm, rows] : by_firm) {
        if (rows.size() < m + 2) {
            fit.dropped_firms.push_back(firm);
            continue;
        }
        detail::FirmBlock b{firm, Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m)),
                            Eigen::VectorXd(static_cast<Eigen::Index>(rows.size())), 0.0};
        for (std::size_t i = 0; i < rows.size(); ++i) {
            b.y[static_cast<Eigen::Index>(i)] = rows[i]->y;
            for (std::size_t k = 0; k < m; ++k)
                b.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i]->x[k];
        }
        blocks.push_back(std::move(b));
    }
    require(blocks.size() >= 2, ErrorCode::InvalidArgument, "two-step estimator needs at least two usable firms");

    const unsigned workers = options.workers == 0 ? default_workers() : options.workers;
    parallel_for(
        blocks.size(), [&](std::size_t i) { blocks[i].alpha = qreg_single(blocks[i].X, blocks[i].y, tau).intercept; },
        workers);
    std::vector<const detail::FirmBlock*> all;
    for (const auto& b : blocks) {
        all.push_back(&b);
        fit.fixed_effects[b.firm] = b.alpha;
        fit.observations += static_cast<std::size_t>(b.X.rows());
    }
    const Eigen::VectorXd beta = detail::pooled_beta(all, m, tau, &fit.objective);
    fit.beta.assign(beta.data(), beta.data() + beta.size());

    fit.std_errors.assign(m, std::numeric_limits<double>::quiet_NaN());
    fit.p_values.assign(m, std::numeric_limits<double>::quiet_NaN());
    if (options.bootstrap_reps <= 0)
        return fit;

    const auto reps = static_cast<std::size_t>(options.bootstrap_reps);
    std::vector<std::optional<Eigen::VectorXd>> draws(reps);
    parallel_for(
        reps,
        [&](std::size_t rep) {
            boost::random::seed_seq seq{static_cast<std::uint32_t>(options.seed),
                                        static_cast<std::uint32_t>(options.seed >> 32), static_cast<std::uint32_t>(rep),
                                        static_cast<std::uint32_t>(std::lround(tau * 1e6))};
            boost::random::mt19937_64 engine(seq);
            boost::random::uniform_int_distribution<std::size_t> pick(0, blocks.size() - 1);
            std::vector<const detail::FirmBlock*> sample(blocks.size());
            for (auto& s : sample)
                s = &blocks[pick(engine)];
            try {
                draws[rep] = detail::pooled_beta(sample, m, tau);
            } catch (const Error&) {
                // Degenerate resample (e.g. rank deficient); skipped.
            }
        },
        workers);

    std::vector<Eigen::VectorXd> ok;
    for (auto& d : draws)
        if (d)
            ok.push_back(std::move(*d));
    fit.bootstrap_reps = static_cast<int>(ok.size());
    if (ok.size() < 2)
        return fit;
    for (std::size_t k = 0; k < m; ++k) {
        double mean = 0.0;
        for (const auto& d : ok)
            mean += d[static_cast<Eigen::Index>(k)];
        mean /= static_cast<double>(ok.size());
        double ss = 0.0;
        for (const auto& d : ok)
            ss += std::pow(d[static_cast<Eigen::Index>(k)] - mean, 2);
        const double se = std::sqrt(ss / static_cast<double>(ok.size() - 1));
        fit.std_errors[k] = se;
        fit.p_values[k] = se > 0.0 ? detail::normal_two_sided_p(fit.beta[k] / se) : (fit.beta[k] == 0.0 ? 1.0 : 0.0);
    }
    return fit;
}

/// Pooled check loss at fixed effects `alpha` (by firm) and slopes `beta`.
[[nodiscard]] inline double pooled_objective(const Panel& panel, const std::map<std::string, double>& alpha,
                                             const std::vector<double>& beta, double tau)
{
    double s = 0.0;
    for (const auto& row : panel.rows) {
        const auto it = alpha.find(row.firm);
        if (it == alpha.end())
            continue;
        double fitted = it->second;
        for (std::size_t k = 0; k < beta.size(); ++k)
            fitted += row.x[k] * beta[k];
        s += check_loss(row.y - fitted, tau);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

inline constexpr double kVifThreshold = 5.0;

struct VifResult {
    std::vector<double> scores; // +inf for perfectly collinear columns
    std::vector<bool> flagged;  // score above kVifThreshold
};

/// VIF_j = 1 / (1 - R^2_j), R^2_j from least squares of column j on the others plus an intercept.
[[nodiscard]] inline VifResult vif(const Eigen::MatrixXd& X)
{
    const Eigen::Index n = X.rows(), k = X.cols();
    require(k >= 2 && n > k, ErrorCode::InvalidArgument, "VIF needs at least two columns and more rows than columns");
    VifResult out;
    for (Eigen::Index j = 0; j < k; ++j) {
        Eigen::MatrixXd Z(n, k);
        Z.col(0).setOnes();
        for (Eigen::Index c = 0, at = 1; c < k; ++c)
            if (c != j)
                Z.col(at++) = X.col(c);
        const Eigen::VectorXd target = X.col(j);
        const Eigen::VectorXd centered = target.array() - target.mean();
        const double sst = centered.squaredNorm();
        double score = std::numeric_limits<double>::infinity();
        if (sst > 0.0) {
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
            const double ssr = (target - Z * qr.solve(target)).squaredNorm();
            const double r2 = 1.0 - ssr / sst;
            if (r2 < 1.0 - 1e-12)
                score = 1.0 / (1.0 - r2);
        }
        out.scores.push_back(score);
        out.flagged.push_back(score > kVifThreshold);
    }
    return out;
}

struct TTestResult {
    double t = 0.0;
    double p_value = 1.0;
    bool reject = false; // at the 5% level, two-sided
};

/// One-sample t-test of the paired differences a - b against zero.
[[nodiscard]] inline TTestResult ttest_paired_models(const std::vector<double>& a, const std::vector<double>& b)
{
    require(a.size() == b.size() && a.size() > 2, ErrorCode::InvalidArgument,
            "paired t-test needs equal-length samples of size > 2");
    const auto n = static_cast<double>(a.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        mean += a[i] - b[i];
    mean /= n;
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        ss += std::pow(a[i] - b[i] - mean, 2);
    const double sd = std::sqrt(ss / (n - 1.0));
    if (sd == 0.0 && mean == 0.0)
        return {};
    require(sd > 1e-14 * std::max(1.0, std::abs(mean)), ErrorCode::ZeroVariance, "differences have zero variance");
    TTestResult r;
    r.t = mean / (sd / std::sqrt(n));
    const boost::math::students_t dist(n - 1.0);
    r.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))), 0.0, 1.0);
    r.reject = r.p_value < 0.05;
    return r;
}

} // namespace jdcredit
