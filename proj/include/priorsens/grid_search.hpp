#pragma once

#include "priorsens/density.hpp"
#include "priorsens/errors.hpp"

#include <cstddef>
#include <vector>

namespace priorsens {

inline constexpr double default_epsilon = 0.00354;
inline constexpr std::size_t default_n_angles = 400;

/// Unscaled radii r*(delta) along the four axis directions at which the
/// prior sits at the target distance from the base.
struct CardinalModuli {
    double minus_half_pi = 0.0;
    double zero = 0.0;
    double half_pi = 0.0;
    double pi = 0.0;
};

struct ScalingFactors {
    double cx = 0.0;
    double cy = 0.0;
};

struct ContourPoint {
    double phi = 0.0;
    ParamPoint point;
    double log_modulus = 0.0;  // z = log r of the scaled polar radius
    double residual = 0.0;     // H(point, base) - epsilon
};

struct PolarGrid {
    PriorSpec base;
    double epsilon = 0.0;
    std::size_t n_angles = 0;  // requested directions, including failed ones
    std::vector<ContourPoint> points;
    CardinalModuli cardinal;
    std::vector<double> failed_angles;

    [[nodiscard]] bool complete() const noexcept { return failed_angles.empty(); }
};

// Some directions of the contour could not be solved. Carries the partial
// grid so callers can proceed with a documented flag.
class PartialGridError : public Error {
public:
    explicit PartialGridError(PolarGrid grid);
    [[nodiscard]] const PolarGrid& grid() const noexcept { return grid_; }

private:
    PolarGrid grid_;
};

// Residual tolerance on |H - epsilon|, relative to epsilon.
inline constexpr double contour_relative_tolerance = 1e-4;

[[nodiscard]] CardinalModuli preexplore(const PriorSpec& base, double epsilon);

/// Piecewise-constant scaling. cx uses r*(0) on [-pi/2, pi/2) and r*(pi)
/// elsewhere; cy uses r*(pi/2) on [0, pi] and r*(-pi/2) on [-pi, 0).
[[nodiscard]] ScalingFactors scaling_factors(double phi, const CardinalModuli& moduli) noexcept;

/// Solves H(base + exp(z) (cos(phi) cx, sin(phi) cy), base) = epsilon for z.
/// Throws ContourUnreachableError when no root exists inside the domain.
[[nodiscard]] ContourPoint solve_radius(const PriorSpec& base, double epsilon, double phi,
                                        const ScalingFactors& scaling);

/// Equidistant angles -pi + 2 pi k / n, k = 0..n-1.
[[nodiscard]] std::vector<double> polar_angles(std::size_t n_angles);

/// The full epsilon contour. Throws PartialGridError if any direction fails.
[[nodiscard]] PolarGrid compute_grid(const PriorSpec& base, double epsilon,
                                     std::size_t n_angles = default_n_angles);

}  // namespace priorsens
