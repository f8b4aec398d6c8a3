#pragma once

// Monte Carlo simulation of the log-leverage process with downward exponential
// jumps, producing CDS legs, bond prices and default probabilities for a set
// of tenors from one simulated default time per path.

#include <jdcredit/model_core.hpp>
#include <jdcredit/parallel.hpp>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/seed_seq.hpp>
#include <boost/random/uniform_01.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace jdcredit {

enum class McScheme {
    // Endpoints sampled exactly between jumps; crossings detected with the
    // Brownian-bridge probability and located by recursive bridge refinement
    // down to dt.
    BridgeRefinement,
    // Gaussian increments on the dt grid, barrier checked at grid points and
    // at jump instants.
    DiscreteGrid,
};

struct McConfig {
    std::int64_t paths = 100000;
    double dt = 1.0 / 1000.0;
    std::uint64_t seed = 20240101;
    bool antithetic = true;
    McScheme scheme = McScheme::BridgeRefinement;
    unsigned workers = 0;            // 0: default_workers()
    std::int64_t block_paths = 4096; // paths per RNG stream
};

inline void validate(const McConfig& c)
{
    require(c.paths >= 2, ErrorCode::InvalidArgument, "need at least 2 paths");
    require(c.dt > 0.0 && c.dt <= 1.0, ErrorCode::InvalidArgument, "dt must lie in (0, 1]");
    require(c.block_paths >= 2 && c.block_paths % 2 == 0, ErrorCode::InvalidArgument,
            "block size must be a positive even number");
}

struct Estimate {
    double mean = 0.0;
    double se = 0.0;
};

struct McTenorResult {
    double tenor = 0.0;
    Estimate protection;       // E[(1 - recovery) e^{-r t_d} 1{t_d <= T}]
    Estimate premium;          // E[integral_0^{min(t_d, T)} e^{-rz} dz]
    Estimate bond;             // defaultable coupon bond per unit face
    Estimate default_probability;
    Estimate spread;           // protection / premium, delta-method SE
};

namespace detail {

inline constexpr double kBridgePrune = 1e-12;

// Per-block random source. Antithetic partners replay the jump sequence and
// the negated top-level normals of the first path of the pair. Bridge
// refinement draws from a separate stream, so runs that differ only in dt
// share their endpoints and jumps.
class PathRandom {
public:
    explicit PathRandom(std::uint64_t seed, std::uint64_t block)
    {
        seed_engine(engine_, seed, block, 0);
        seed_engine(bridge_engine_, seed, block, 1);
    }

    void begin_path(bool replay)
    {
        replay_ = replay;
        normal_pos_ = jump_pos_ = 0;
        if (!replay) {
            normals_.clear();
            jumps_.clear();
        }
    }

    double top_normal()
    {
        if (replay_ && normal_pos_ < normals_.size())
            return -normals_[normal_pos_++];
        const double z = normal_(engine_);
        if (!replay_)
            normals_.push_back(z);
        return z;
    }

    // (inter-arrival time with unit rate, jump size with unit rate)
    std::pair<double, double> jump()
    {
        if (replay_ && jump_pos_ < jumps_.size())
            return jumps_[jump_pos_++];
        const std::pair<double, double> j{exponential_(engine_), exponential_(engine_)};
        if (!replay_)
            jumps_.push_back(j);
        return j;
    }

    double bridge_normal() { return bridge_normal_(bridge_engine_); }
    double uniform() { return uniform_(bridge_engine_); }

private:
    static void seed_engine(boost::random::mt19937_64& engine, std::uint64_t seed, std::uint64_t block,
                            std::uint32_t stream)
    {
        boost::random::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                                    static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                                    stream};
        engine.seed(seq);
    }

    boost::random::mt19937_64 engine_;
    boost::random::mt19937_64 bridge_engine_;
    boost::random::normal_distribution<double> bridge_normal_;
    boost::random::normal_distribution<double> normal_;
    boost::random::exponential_distribution<double> exponential_;
    boost::random::uniform_01<double> uniform_;
    std::vector<double> normals_;
    std::vector<std::pair<double, double>> jumps_;
    std::size_t normal_pos_ = 0, jump_pos_ = 0;
    bool replay_ = false;
};

struct PathModel {
    double psi, sigma, lambda, eta, x0, horizon, dt;
};

// First crossing of zero by a Brownian bridge from (a, xa) to (b, xb), both
// positive at the ends unless xb <= 0. Returns the crossing time or +inf.
inline double bridge_crossing(const PathModel& m, PathRandom& rng, double a, double xa, double b, double xb)
{
    const double len = b - a;
    const double s2 = m.sigma * m.sigma;
    if (xb > 0.0) {
        const double prob = std::exp(-2.0 * xa * xb / (s2 * len));
        if (prob < kBridgePrune)
            return std::numeric_limits<double>::infinity();
        if (len <= m.dt)
            return rng.uniform() < prob ? a + 0.5 * len : std::numeric_limits<double>::infinity();
    } else if (len <= m.dt) {
        return a + 0.5 * len;
    }
    const double mid = 0.5 * (a + b);
    const double xm = 0.5 * (xa + xb) + 0.5 * m.sigma * std::sqrt(len) * rng.bridge_normal();
    if (xm <= 0.0) {
        // Crossed before the midpoint; locate it on the left half.
        const double left = bridge_crossing(m, rng, a, xa, mid, xm);
        return std::isfinite(left) ? left : mid;
    }
    const double left = bridge_crossing(m, rng, a, xa, mid, xm);
    if (std::isfinite(left))
        return left;
    return bridge_crossing(m, rng, mid, xm, b, xb);
}

// Diffusion over [t, t_end] from x. Returns crossing time or +inf and updates x.
inline double diffuse(const PathModel& m, PathRandom& rng, McScheme scheme, double t, double t_end, double& x)
{
    if (scheme == McScheme::BridgeRefinement) {
        const double len = t_end - t;
        const double xe = x + m.psi * len + m.sigma * std::sqrt(len) * rng.top_normal();
        const double hit = bridge_crossing(m, rng, t, x, t_end, xe);
        x = xe;
        return hit;
    }
    // Grid steps aligned to multiples of dt.
    while (t < t_end) {
        const double next_grid = (std::floor(t / m.dt + 1e-9) + 1.0) * m.dt;
        const double s = std::min(next_grid, t_end);
        const double len = s - t;
        x += m.psi * len + m.sigma * std::sqrt(len) * rng.top_normal();
        t = s;
        if (x <= 0.0)
            return t;
    }
    return std::numeric_limits<double>::infinity();
}

// Default time of one path, +inf if it survives to the horizon.
inline double simulate_default_time(const PathModel& m, PathRandom& rng, McScheme scheme)
{
    double t = 0.0;
    double x = m.x0;
    if (x <= 0.0)
        return 0.0;
    for (;;) {
        double next_jump = std::numeric_limits<double>::infinity();
        double size = 0.0;
        if (m.lambda > 0.0) {
            const auto [arrival, mark] = rng.jump();
            next_jump = t + arrival / m.lambda;
            size = mark / m.eta;
        }
        const double t_end = std::min(next_jump, m.horizon);
        const double hit = diffuse(m, rng, scheme, t, t_end, x);
        if (std::isfinite(hit))
            return hit;
        if (next_jump > m.horizon)
            return std::numeric_limits<double>::infinity();
        t = next_jump;
        x -= size;
        if (x <= 0.0)
            return t;
    }
}

struct Moments {
    double n = 0.0;
    double p = 0.0, a = 0.0, b = 0.0, d = 0.0;
    double pp = 0.0, aa = 0.0, bb = 0.0, dd = 0.0, pa = 0.0;

    void add(double vp, double va, double vb, double vd)
    {
        n += 1.0;
        p += vp;
        a += va;
        b += vb;
        d += vd;
        pp += vp * vp;
        aa += va * va;
        bb += vb * vb;
        dd += vd * vd;
        pa += vp * va;
    }

    void merge(const Moments& o)
    {
        n += o.n;
        p += o.p;
        a += o.a;
        b += o.b;
        d += o.d;
        pp += o.pp;
        aa += o.aa;
        bb += o.bb;
        dd += o.dd;
        pa += o.pa;
    }
};

struct PathValues {
    double protection, premium, bond, defaulted;
};

inline PathValues path_values(double t_default, double tenor, double r, double recovery, double coupon)
{
    const double stop = std::min(t_default, tenor);
    const double annuity = std::abs(r) < 1e-12 ? stop : -std::expm1(-r * stop) / r;
    if (t_default <= tenor) {
        const double disc = std::exp(-r * t_default);
        return {(1.0 - recovery) * disc, annuity, recovery * disc + coupon * annuity, 1.0};
    }
    return {0.0, annuity, std::exp(-r * tenor) + coupon * annuity, 0.0};
}

inline Estimate mean_se(double sum, double sum_sq, double n)
{
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    return {mean, std::sqrt(var / n)};
}

} // namespace detail

/// Simulates default times once up to the largest tenor and evaluates every
/// tenor on the same paths.
[[nodiscard]] inline std::vector<McTenorResult> mc_simulate(const JumpDiffusionParams& p, double recovery,
                                                            double coupon, std::span<const double> tenors,
                                                            const McConfig& config = {})
{
    validate(p);
    validate(config);
    require(!tenors.empty(), ErrorCode::InvalidArgument, "no tenors");
    require(recovery >= 0.0 && recovery <= 1.0, ErrorCode::InvalidArgument, "recovery must lie in [0, 1]");
    for (double t : tenors)
        require(t > 0.0, ErrorCode::InvalidArgument, "tenors must be positive");
    const double horizon = *std::max_element(tenors.begin(), tenors.end());

    const detail::PathModel model{log_drift(p), p.sigma, p.lambda, p.eta, p.log_leverage(), horizon, config.dt};
    const std::int64_t per_block = config.block_paths;
    const std::int64_t blocks = (config.paths + per_block - 1) / per_block;
    const std::size_t nt = tenors.size();
    std::vector<std::vector<detail::Moments>> partial(static_cast<std::size_t>(blocks),
                                                      std::vector<detail::Moments>(nt));

    parallel_for(
        static_cast<std::size_t>(blocks),
        [&](std::size_t block) {
            detail::PathRandom rng(config.seed, block);
            auto& acc = partial[block];
            const std::int64_t begin = static_cast<std::int64_t>(block) * per_block;
            const std::int64_t count = std::min(per_block, config.paths - begin);
            const std::int64_t units = config.antithetic ? count / 2 : count;
            for (std::int64_t u = 0; u < units; ++u) {
                rng.begin_path(false);
                const double t1 = detail::simulate_default_time(model, rng, config.scheme);
                double t2 = 0.0;
                if (config.antithetic) {
                    rng.begin_path(true);
                    t2 = detail::simulate_default_time(model, rng, config.scheme);
                }
                for (std::size_t k = 0; k < nt; ++k) {
                    auto v = detail::path_values(t1, tenors[k], p.r, recovery, coupon);
                    if (config.antithetic) {
                        const auto w = detail::path_values(t2, tenors[k], p.r, recovery, coupon);
                        v = {0.5 * (v.protection + w.protection), 0.5 * (v.premium + w.premium),
                             0.5 * (v.bond + w.bond), 0.5 * (v.defaulted + w.defaulted)};
                    }
                    acc[k].add(v.protection, v.premium, v.bond, v.defaulted);
                }
            }
        },
        config.workers == 0 ? default_workers() : config.workers);

    std::vector<McTenorResult> out(nt);
    for (std::size_t k = 0; k < nt; ++k) {
        detail::Moments m;
        for (const auto& block : partial)
            m.merge(block[k]);
        McTenorResult& r = out[k];
        r.tenor = tenors[k];
        r.protection = detail::mean_se(m.p, m.pp, m.n);
        r.premium = detail::mean_se(m.a, m.aa, m.n);
        r.bond = detail::mean_se(m.b, m.bb, m.n);
        r.default_probability = detail::mean_se(m.d, m.dd, m.n);
        const double s = r.protection.mean / r.premium.mean;
        // Var(p - s a) / (n abar^2)
        const double mp = m.p / m.n, ma = m.a / m.n;
        const double cov_pa = (m.pa - m.n * mp * ma) / (m.n - 1.0);
        const double var_p = (m.pp - m.n * mp * mp) / (m.n - 1.0);
        const double var_a = (m.aa - m.n * ma * ma) / (m.n - 1.0);
        const double var_lin = std::max(0.0, var_p - 2.0 * s * cov_pa + s * s * var_a);
        r.spread = {s, std::sqrt(var_lin / m.n) / ma};
    }
    return out;
}

/// Raw default times (+inf for survivors up to `horizon`); antithetic partners
/// are adjacent.
[[nodiscard]] inline std::vector<double> mc_default_times(const JumpDiffusionParams& p, double horizon,
                                                          const McConfig& config = {})
{
    validate(p);
    validate(config);
    require(horizon > 0.0, ErrorCode::InvalidArgument, "horizon must be positive");
    const detail::PathModel model{log_drift(p), p.sigma, p.lambda, p.eta, p.log_leverage(), horizon, config.dt};
    const std::int64_t per_block = config.block_paths;
    const std::int64_t blocks = (config.paths + per_block - 1) / per_block;
    std::vector<double> times(static_cast<std::size_t>(config.paths));
    parallel_for(
        static_cast<std::size_t>(blocks),
        [&](std::size_t block) {
            detail::PathRandom rng(config.seed, block);
            const std::int64_t begin = static_cast<std::int64_t>(block) * per_block;
            const std::int64_t end = std::min(begin + per_block, config.paths);
            for (std::int64_t i = begin; i < end; ++i) {
                const bool replay = config.antithetic && (i - begin) % 2 == 1;
                rng.begin_path(replay);
                times[static_cast<std::size_t>(i)] = detail::simulate_default_time(model, rng, config.scheme);
            }
        },
        config.workers == 0 ? default_workers() : config.workers);
    return times;
}

struct McLegs {
    Estimate protection;
    Estimate premium;
    Estimate spread;
};

[[nodiscard]] inline McLegs mc_cds_legs(const JumpDiffusionParams& p, const ContractTerms& terms,
                                        const McConfig& config = {})
{
    validate(terms);
    const double tenor[] = {terms.tenor};
    const auto r = mc_simulate(p, terms.recovery, 0.0, tenor, config).front();
    return {r.protection, r.premium, r.spread};
}

[[nodiscard]] inline Estimate mc_bond_price(const JumpDiffusionParams& p, const ContractTerms& terms,
                                            const McConfig& config = {})
{
    validate(terms);
    const double tenor[] = {terms.tenor};
    return mc_simulate(p, terms.recovery, terms.coupon, tenor, config).front().bond;
}

} // namespace jdcredit
