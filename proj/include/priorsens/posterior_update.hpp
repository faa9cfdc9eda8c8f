#pragma once

#include "priorsens/density.hpp"

namespace priorsens {

/// Marginal posterior at the base prior, tabulated on the parametrization
/// scale. The constructor normalizes the grid and checks the scale flag.
class PosteriorInput {
public:
    PosteriorInput(DensityGrid posterior, PriorSpec base_prior, Scale parametrization);

    [[nodiscard]] const DensityGrid& posterior() const noexcept { return posterior_; }
    [[nodiscard]] const PriorSpec& base_prior() const noexcept { return base_prior_; }
    [[nodiscard]] Scale parametrization() const noexcept { return posterior_.scale(); }

private:
    DensityGrid posterior_;
    PriorSpec base_prior_;
};

// Base posterior values below this fraction of the peak are dropped.
inline constexpr double reweight_tail_guard = 1e-15;
// Base prior densities below this are too small to divide by.
inline constexpr double reweight_min_prior_density = 1e-300;

/// Posterior under new_prior by multiplying the base posterior with the prior
/// ratio and renormalizing, all in log space. On the LogParameter scale both
/// priors are evaluated at theta = exp(z) without their Jacobians, which
/// cancel in the ratio.
[[nodiscard]] DensityGrid reweight_posterior(const PosteriorInput& input, const PriorSpec& new_prior);

/// True when fewer than three support points carry density above 1e-6 of the
/// peak, i.e. the grid no longer resolves the posterior.
[[nodiscard]] bool is_degenerate(const DensityGrid& grid) noexcept;

/// Hellinger distance between the reweighted and the base posterior.
[[nodiscard]] double posterior_distance(const PosteriorInput& input, const PriorSpec& new_prior);

}  // namespace priorsens
