#include "doctest.h"
#include "oracles.hpp"

#include "priorsens/density.hpp"
#include "priorsens/errors.hpp"
#include "priorsens/grid_search.hpp"
#include "priorsens/posterior_update.hpp"
#include "priorsens/rw1.hpp"

#include <algorithm>
#include <cmath>

using namespace priorsens;

namespace {

PosteriorInput flat_likelihood(const PriorSpec& base, Scale scale) {
    return PosteriorInput(tabulate(base, scale), base, scale);
}

}  // namespace

TEST_CASE("PosteriorInput checks") {
    const PriorSpec g(Family::Gamma, {1, 0.34});
    const DensityGrid log_grid = tabulate(g, Scale::LogParameter, 101);
    CHECK_THROWS_AS(PosteriorInput(log_grid, g, Scale::Natural), DomainError);
    const PriorSpec n(Family::Normal, {0, 1});
    CHECK_THROWS_AS(PosteriorInput(tabulate(n, Scale::Natural, linspace(-1, 1, 11)), n, Scale::LogParameter),
                    DomainError);
    const PosteriorInput in(log_grid, g, Scale::LogParameter);
    CHECK(std::abs(in.posterior().mass() - 1.0) <= 1e-10);
    CHECK(in.parametrization() == Scale::LogParameter);
}

TEST_CASE("identity reweighting is a fixed point") {
    for (Scale s : {Scale::Natural, Scale::LogParameter}) {
        const PriorSpec base(Family::Gamma, {2.5, 0.7});
        const PosteriorInput in(tabulate(PriorSpec(Family::Gamma, {6, 1.1}), s), base, s);
        const DensityGrid out = reweight_posterior(in, base);
        CHECK(out == in.posterior());
        CHECK(posterior_distance(in, base) == 0.0);
    }
}

TEST_CASE("flat likelihood returns the new prior") {
    oracle::Gen gen(53);
    for (int t = 0; t < 20; ++t) {
        const bool gam = t % 2 == 0;
        const Scale s = gam ? Scale::LogParameter : Scale::Natural;
        const PriorSpec base = gam ? PriorSpec(Family::Gamma, {gen.log_uniform(0.2, 20), gen.log_uniform(0.01, 10)})
                                   : PriorSpec(Family::Normal, {gen.uniform(-5, 5), gen.log_uniform(0.01, 100)});
        const PosteriorInput in = flat_likelihood(base, s);
        const PriorSpec np(base.family, {base.point.gamma1 * (gam ? 1.02 : 1.0) + (gam ? 0.0 : 0.01),
                                         base.point.gamma2 * 0.98});
        const DensityGrid out = reweight_posterior(in, np);
        const DensityGrid expect =
            normalize_grid(tabulate(np, s, std::vector<double>(out.support().begin(), out.support().end())));
        double max_diff = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            max_diff = std::max(max_diff, std::abs(out.values()[i] - expect.values()[i]));
        }
        CHECK(max_diff <= 1e-8);
        CHECK(out.support().data() != nullptr);
        CHECK(std::ranges::equal(out.support(), in.posterior().support()));
        CHECK(std::abs(out.mass() - 1.0) <= 1e-10);
    }
}

TEST_CASE("flat likelihood distance equals the prior distance") {
    const PriorSpec base(Family::Gamma, {1, 0.34});
    const PosteriorInput in = flat_likelihood(base, Scale::LogParameter);
    const PolarGrid g = compute_grid(base, 0.00354, 64);
    for (const auto& p : g.points) {
        const double d = posterior_distance(in, PriorSpec(Family::Gamma, p.point));
        CHECK(std::abs(d - 0.00354) <= 5e-5);
        CHECK(std::abs(d / 0.00354 - 1.0) <= 5e-5);
    }
}

TEST_CASE("normalization and support preservation") {
    oracle::Gen gen(59);
    const PriorSpec base(Family::Gamma, {3, 2});
    const PosteriorInput in(tabulate(PriorSpec(Family::Gamma, {30, 10}), Scale::LogParameter), base,
                            Scale::LogParameter);
    for (int t = 0; t < 100; ++t) {
        const PriorSpec np(Family::Gamma, {gen.log_uniform(0.1, 100), gen.log_uniform(0.01, 100)});
        const DensityGrid out = reweight_posterior(in, np);
        CHECK(std::abs(out.mass() - 1.0) <= 1e-10);
        CHECK(std::ranges::equal(out.support(), in.posterior().support()));
    }
}

TEST_CASE("reweighting errors and warnings") {
    const PriorSpec n01(Family::Normal, {0, 1});
    SUBCASE("base prior underflows where the posterior has mass") {
        const PosteriorInput in(tabulate(PriorSpec(Family::Normal, {40, 1}), Scale::Natural, linspace(35, 45, 201)),
                                n01, Scale::Natural);
        CHECK_THROWS_AS((void)reweight_posterior(in, PriorSpec(Family::Normal, {0.1, 1})), ReweightError);
    }
    SUBCASE("family mismatch") {
        const PosteriorInput in = flat_likelihood(n01, Scale::Natural);
        CHECK_THROWS_AS((void)reweight_posterior(in, PriorSpec(Family::Gamma, {1, 1})), DomainError);
    }
    SUBCASE("degenerate grid") {
        std::vector<double> v(50, 0.0);
        v[20] = 1.0;
        CHECK(is_degenerate(DensityGrid(linspace(-1, 1, 50), v, Scale::Natural)));
        v[21] = 0.5;
        v[19] = 0.5;
        CHECK(!is_degenerate(DensityGrid(linspace(-1, 1, 50), v, Scale::Natural)));
    }
    SUBCASE("tail guard drops negligible points") {
        const PriorSpec base(Family::Gamma, {2, 1});
        std::vector<double> z = linspace(-10, 5, 301);
        DensityGrid g = tabulate(PriorSpec(Family::Gamma, {20, 10}), Scale::LogParameter, z);
        const PosteriorInput in(g, base, Scale::LogParameter);
        const DensityGrid out = reweight_posterior(in, PriorSpec(Family::Gamma, {2, 1e-3}));
        const double peak = *std::ranges::max_element(in.posterior().values());
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (!(in.posterior().values()[i] > 1e-15 * peak)) CHECK(out.values()[i] == 0.0);
        }
    }
}

TEST_CASE("reweighting reproduces the exact RW1 posterior") {
    const rw1::Model model(rw1::simulate(192, 25.0, 1.0 / (1.9 * 1.9), 7), 0.3, {1, 0.005});
    const PosteriorInput in = rw1::tabulate_posterior(model);
    const ParamPoint np{1.1, 0.005};
    const DensityGrid rew = reweight_posterior(in, PriorSpec(Family::Gamma, np));

    // Exact log-tau posterior under the new prior on the same support.
    const rw1::Model alt(model.y, model.kappa, np);
    std::vector<double> vals(rew.size());
    std::vector<double> lg(rew.size());
    for (std::size_t i = 0; i < rew.size(); ++i) {
        const double z = rew.support()[i];
        lg[i] = rw1::log_unnormalized_posterior(alt, std::exp(z)) + z;
    }
    const double mx = *std::ranges::max_element(lg);
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = std::exp(lg[i] - mx);
    const DensityGrid exact = normalize_grid(
        DensityGrid(std::vector<double>(rew.support().begin(), rew.support().end()), vals, Scale::LogParameter));
    CHECK(hellinger_grid(rew, exact) <= 1e-5);

    const double d = posterior_distance(in, PriorSpec(Family::Gamma, np));
    CHECK(std::abs(d - rw1::exact_posterior_hellinger(model, {1, 0.005}, np)) <= 1e-4);
}
