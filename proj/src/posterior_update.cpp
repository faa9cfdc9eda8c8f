#include "priorsens/posterior_update.hpp"

#include "priorsens/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace priorsens {

PosteriorInput::PosteriorInput(DensityGrid posterior, PriorSpec base_prior, Scale parametrization)
    : posterior_(normalize_grid(posterior)), base_prior_(base_prior) {
    if (posterior_.scale() != parametrization) {
        throw DomainError("posterior grid scale does not match the declared parametrization");
    }
    require_domain(base_prior_.family, base_prior_.point);
    if (parametrization == Scale::LogParameter && base_prior_.family == Family::Normal) {
        throw DomainError("normal priors are only supported on the natural scale");
    }
    if (parametrization == Scale::Natural && base_prior_.family == Family::Gamma &&
        posterior_.front() < 0.0) {
        throw DomainError("gamma posterior support must be nonnegative on the natural scale");
    }
}

namespace {

// log pi(theta) at a support point, without Jacobian on the log scale.
double log_kernel_at(const PriorSpec& prior, double x, Scale scale) {
    if (scale == Scale::LogParameter) return log_prior_kernel(prior, std::exp(x), x);
    return log_prior_density(prior, x, Scale::Natural);
}

}  // namespace

DensityGrid reweight_posterior(const PosteriorInput& input, const PriorSpec& new_prior) {
    const PriorSpec& base = input.base_prior();
    if (new_prior.family != base.family) {
        throw DomainError("reweighting requires the new prior to share the base prior's family");
    }
    require_domain(new_prior.family, new_prior.point);
    if (new_prior == base) return input.posterior();

    const DensityGrid& post = input.posterior();
    const auto x = post.support();
    const auto f = post.values();
    const Scale scale = post.scale();
    const double peak = *std::ranges::max_element(f);
    const double floor = reweight_tail_guard * peak;
    const double log_min_prior = std::log(reweight_min_prior_density);
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();

    std::vector<double> log_w(x.size(), neg_inf);
    double log_max = neg_inf;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(f[i] > floor)) continue;
        const double log_base = log_kernel_at(base, x[i], scale);
        if (!(log_base >= log_min_prior)) {
            throw ReweightError(fmt::format(
                "base prior density {:.3e} at support point {} carries posterior mass {:.3e}",
                std::exp(log_base), x[i], f[i]));
        }
        log_w[i] = std::log(f[i]) - log_base + log_kernel_at(new_prior, x[i], scale);
        log_max = std::max(log_max, log_w[i]);
    }
    if (!std::isfinite(log_max)) throw ReweightError("reweighted posterior has no finite mass");

    std::vector<double> values(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) values[i] = std::exp(log_w[i] - log_max);
    return normalize_grid(DensityGrid(std::vector<double>(x.begin(), x.end()), std::move(values), scale));
}

bool is_degenerate(const DensityGrid& grid) noexcept {
    const auto v = grid.values();
    const double peak = *std::ranges::max_element(v);
    const auto resolved = std::ranges::count_if(v, [&](double y) { return y >= 1e-6 * peak; });
    return resolved < 3;
}

double posterior_distance(const PosteriorInput& input, const PriorSpec& new_prior) {
    return hellinger_grid(reweight_posterior(input, new_prior), input.posterior());
}

}  // namespace priorsens
