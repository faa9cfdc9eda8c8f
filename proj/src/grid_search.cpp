#include "priorsens/grid_search.hpp"

#include "priorsens/roots.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <numbers>

namespace priorsens {

namespace {

constexpr double kInitialBracket = 6.0;
constexpr double kMaxBracket = 20.0;
// Root solves aim well inside the reported tolerance.
constexpr double kSolveRelativeTolerance = 1e-9;

// Largest radius along (dx, dy) that keeps the point inside the family's
// domain; infinity when the ray never leaves it.
double max_radius(const PriorSpec& base, double dx, double dy) {
    double r = std::numeric_limits<double>::infinity();
    if (base.family == Family::Gamma && dx < 0.0) r = std::min(r, base.point.gamma1 / -dx);
    if (dy < 0.0) r = std::min(r, base.point.gamma2 / -dy);
    return r;
}

struct RaySolution {
    double z;
    ParamPoint point;
    double residual;
};

ParamPoint along_ray(const ParamPoint& base, double dx, double dy, double z) {
    const double r = std::exp(z);
    return {base.gamma1 + r * dx, base.gamma2 + r * dy};
}

// One-dimensional contour solve on z = log r along base + r (dx, dy).
RaySolution solve_ray(const PriorSpec& base, double epsilon, double dx, double dy, double angle) {
    auto f = [&](double z) {
        const ParamPoint p = along_ray(base.point, dx, dy, z);
        if (!in_domain(base.family, p)) return 1.0 - epsilon;
        return hellinger_family(base.family, p, base.point) - epsilon;
    };
    auto unreachable = [&](const char* why) {
        return ContourUnreachableError(
            fmt::format("contour at distance {} unreachable in direction phi = {:.6f} for {} base "
                        "({}, {}): {}",
                        epsilon, angle, to_string(base.family), base.point.gamma1,
                        base.point.gamma2, why),
            angle);
    };

    // Upper end: stay strictly inside the domain.
    const double r_max = max_radius(base, dx, dy);
    const double z_dom = std::isfinite(r_max) ? std::log(r_max) + std::log1p(-1e-12)
                                              : std::numeric_limits<double>::infinity();
    double hi = std::min(kInitialBracket, z_dom);
    double f_hi = f(hi);
    while (f_hi < 0.0 && hi < std::min(kMaxBracket, z_dom)) {
        hi = std::min({2.0 * std::max(hi, 1.0), kMaxBracket, z_dom});
        f_hi = f(hi);
    }
    if (f_hi < 0.0) throw unreachable("distance stays below epsilon up to the bracket limit");

    double lo = std::min(-kInitialBracket, hi - 1.0);
    double f_lo = f(lo);
    while (f_lo > 0.0 && lo > -kMaxBracket) {
        lo = std::max(2.0 * lo, -kMaxBracket);
        f_lo = f(lo);
    }
    if (f_lo > 0.0) throw unreachable("distance exceeds epsilon at the smallest modulus");

    const RootResult root =
        find_root_bracketed(f, lo, hi, f_lo, f_hi, kSolveRelativeTolerance * epsilon);
    const ParamPoint p = along_ray(base.point, dx, dy, root.x);
    if (!in_domain(base.family, p)) throw unreachable("root lies on the domain boundary");
    const double residual = hellinger_family(base.family, p, base.point) - epsilon;
    if (std::abs(residual) > contour_relative_tolerance * epsilon) {
        throw NumericalError(fmt::format("contour solve at phi = {} left residual {}", angle, residual));
    }
    return {root.x, p, residual};
}

void require_epsilon(double epsilon) {
    if (!(epsilon > 0.0) || !(epsilon <= 0.5)) {
        throw DomainError(fmt::format("epsilon must lie in (0, 0.5], got {}", epsilon));
    }
}

}  // namespace

PartialGridError::PartialGridError(PolarGrid grid)
    : Error(fmt::format("{} of {} contour directions could not be solved",
                        grid.failed_angles.size(), grid.n_angles)),
      grid_(std::move(grid)) {}

CardinalModuli preexplore(const PriorSpec& base, double epsilon) {
    require_epsilon(epsilon);
    require_domain(base.family, base.point);
    constexpr double pi = std::numbers::pi;
    auto radius = [&](double dx, double dy, double angle) {
        return std::exp(solve_ray(base, epsilon, dx, dy, angle).z);
    };
    return {radius(0.0, -1.0, -pi / 2), radius(1.0, 0.0, 0.0), radius(0.0, 1.0, pi / 2),
            radius(-1.0, 0.0, pi)};
}

ScalingFactors scaling_factors(double phi, const CardinalModuli& moduli) noexcept {
    constexpr double half_pi = std::numbers::pi / 2;
    const double cx = (phi >= -half_pi && phi < half_pi) ? moduli.zero : moduli.pi;
    const double cy = (phi >= 0.0) ? moduli.half_pi : moduli.minus_half_pi;
    return {cx, cy};
}

ContourPoint solve_radius(const PriorSpec& base, double epsilon, double phi,
                          const ScalingFactors& scaling) {
    require_epsilon(epsilon);
    if (!(scaling.cx > 0.0) || !(scaling.cy > 0.0)) {
        throw DomainError("scaling factors must be positive");
    }
    const double dx = std::cos(phi) * scaling.cx;
    const double dy = std::sin(phi) * scaling.cy;
    const RaySolution s = solve_ray(base, epsilon, dx, dy, phi);
    return {phi, s.point, s.z, s.residual};
}

std::vector<double> polar_angles(std::size_t n_angles) {
    std::vector<double> out(n_angles);
    for (std::size_t k = 0; k < n_angles; ++k) {
        out[k] = -std::numbers::pi +
                 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_angles);
    }
    return out;
}

PolarGrid compute_grid(const PriorSpec& base, double epsilon, std::size_t n_angles) {
    require_epsilon(epsilon);
    if (n_angles < 8) throw DomainError(fmt::format("need at least 8 angles, got {}", n_angles));
    PolarGrid grid;
    grid.base = base;
    grid.epsilon = epsilon;
    grid.n_angles = n_angles;
    grid.cardinal = preexplore(base, epsilon);
    grid.points.reserve(n_angles);
    for (double phi : polar_angles(n_angles)) {
        try {
            grid.points.push_back(solve_radius(base, epsilon, phi, scaling_factors(phi, grid.cardinal)));
        } catch (const ContourUnreachableError&) {
            grid.failed_angles.push_back(phi);
        }
    }
    if (!grid.complete()) throw PartialGridError(std::move(grid));
    return grid;
}

}  // namespace priorsens
