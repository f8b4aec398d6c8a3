#pragma once

// Oracle agreement and exactness checks run by the `validate` command.

#include <jdcredit/oracles/fdm.hpp>
#include <jdcredit/pricing.hpp>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_01.hpp>

#include <string>
#include <vector>

namespace jdcredit {

struct ValidationCheck {
    std::string name;
    double max_error = 0.0;
    double tolerance = 0.0;

    [[nodiscard]] bool passed() const { return max_error <= tolerance; }
};

struct ValidationOptions {
    std::vector<double> etas{1.0, 2.0, 4.0};
    std::vector<double> tenors{1.0, 5.0, 10.0, 30.0};
    int par_bond_draws = 1000;
    std::uint64_t seed = 20240101;
};

/// GS against the FDM oracle at V = 4, V_def = 1, r = 0.02, sigma = 0.2,
/// lambda = 0.4; closed-form inversions; weight identity; par bond.
[[nodiscard]] inline std::vector<ValidationCheck> run_validation(const ValidationOptions& o = {})
{
    std::vector<ValidationCheck> checks;

    ValidationCheck fdm{"default probability |GS - FDM|", 0.0, kFdmTolerance};
    for (double eta : o.etas)
        for (double t : o.tenors) {
            const JumpDiffusionParams p{0.02, 0.2, 0.4, eta, 4.0};
            fdm.max_error =
                std::max(fdm.max_error, std::abs(default_probability(p, t) - (1.0 - fdm_survival(p, t))));
        }
    checks.push_back(fdm);

    ValidationCheck closed{"closed-form inversions 1/w, 1/w^2, 1/(w+a)", 0.0, 1e-4};
    for (double t : {0.5, 1.0, 5.0, 10.0, 30.0}) {
        closed.max_error = std::max(closed.max_error, std::abs(gs_invert([](double w) { return 1.0 / w; }, t) - 1.0));
        closed.max_error = std::max(closed.max_error, std::abs(gs_invert([](double w) { return 1.0 / (w * w); }, t) - t));
        closed.max_error = std::max(
            closed.max_error, std::abs(gs_invert([](double w) { return 1.0 / (w + 0.1); }, t) - std::exp(-0.1 * t)));
    }
    checks.push_back(closed);

    ValidationCheck weights{"weight identity sum(alpha_k / k) = 1", 0.0, 1e-8};
    for (int m : {6, 7, 8}) {
        long double s = 0.0L;
        const auto& w = gaver_stehfest(m).weights();
        for (std::size_t k = 0; k < w.size(); ++k)
            s += w[k] / static_cast<long double>(k + 1);
        weights.max_error = std::max(weights.max_error, static_cast<double>(std::abs(s - 1.0L)));
    }
    checks.push_back(weights);

    ValidationCheck par{"par bond (recovery 1, coupon r)", 0.0, 1e-6};
    boost::random::mt19937_64 rng(o.seed);
    boost::random::uniform_01<double> u;
    for (int i = 0; i < o.par_bond_draws; ++i) {
        const JumpDiffusionParams p{0.005 + 0.06 * u(rng), 0.05 + 0.5 * u(rng), 0.01 + 2.0 * u(rng),
                                    0.5 + 20.0 * u(rng), 1.1 + 10.0 * u(rng)};
        const double t = 0.5 + 29.5 * u(rng);
        par.max_error = std::max(par.max_error, std::abs(bond_price(p, {t, p.r, 1.0}) - 1.0));
    }
    checks.push_back(par);
    return checks;
}

} // namespace jdcredit
