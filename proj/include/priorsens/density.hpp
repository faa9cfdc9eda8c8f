#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace priorsens {

enum class Family { Normal, Gamma };

// Natural: density over theta. LogParameter: density over z = log(theta).
enum class Scale { Natural, LogParameter };

[[nodiscard]] std::string_view to_string(Family family) noexcept;
[[nodiscard]] std::string_view to_string(Scale scale) noexcept;
// Accepts "normal" / "gamma" (case-insensitive); throws DomainError otherwise.
[[nodiscard]] Family parse_family(std::string_view text);

// Two prior parameters. Normal: (mean, precision). Gamma: (shape, rate).
struct ParamPoint {
    double gamma1 = 0.0;
    double gamma2 = 0.0;

    friend bool operator==(const ParamPoint&, const ParamPoint&) = default;
};

[[nodiscard]] bool in_domain(Family family, const ParamPoint& point) noexcept;
// Throws DomainError naming the offending parameter.
void require_domain(Family family, const ParamPoint& point);

struct PriorSpec {
    Family family = Family::Gamma;
    ParamPoint point;

    PriorSpec() = default;
    // Validates the point against the family's domain.
    PriorSpec(Family f, ParamPoint p);

    friend bool operator==(const PriorSpec&, const PriorSpec&) = default;
};

/// Prior density at x. On LogParameter scale x is log(theta) and the value
/// includes the Jacobian exp(x). Normal priors are only defined on the
/// Natural scale.
[[nodiscard]] double eval_prior_density(const PriorSpec& spec, double x, Scale scale);
[[nodiscard]] double log_prior_density(const PriorSpec& spec, double x, Scale scale);

/// Log density of theta with no Jacobian term, evaluated from log(theta) for
/// the gamma family so that callers on the log scale avoid a round trip.
[[nodiscard]] double log_prior_kernel(const PriorSpec& spec, double theta, double log_theta);

// Analytic Bhattacharyya log-coefficients and Hellinger distances.
[[nodiscard]] double log_bc_normal(const ParamPoint& p0, const ParamPoint& p1);
[[nodiscard]] double log_bc_gamma(const ParamPoint& p0, const ParamPoint& p1);
[[nodiscard]] double hellinger_normal(const ParamPoint& p0, const ParamPoint& p1);
[[nodiscard]] double hellinger_gamma(const ParamPoint& p0, const ParamPoint& p1);
[[nodiscard]] double hellinger_family(Family family, const ParamPoint& p0, const ParamPoint& p1);

// Hellinger distance from log BC without the cancellation in 1 - BC.
[[nodiscard]] double hellinger_from_log_bc(double log_bc) noexcept;

/// A tabulated one-dimensional density. The constructor enforces the shape
/// invariants (>= 8 strictly increasing finite support points, nonnegative
/// values, at least one positive value).
class DensityGrid {
public:
    static constexpr std::size_t min_points = 8;

    DensityGrid(std::vector<double> support, std::vector<double> values, Scale scale);

    [[nodiscard]] std::span<const double> support() const noexcept { return support_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] Scale scale() const noexcept { return scale_; }
    [[nodiscard]] std::size_t size() const noexcept { return support_.size(); }
    [[nodiscard]] double front() const noexcept { return support_.front(); }
    [[nodiscard]] double back() const noexcept { return support_.back(); }

    // Trapezoidal integral of the values.
    [[nodiscard]] double mass() const noexcept;
    // Linear interpolation; zero outside the support.
    [[nodiscard]] double interpolate(double x) const noexcept;

    friend bool operator==(const DensityGrid&, const DensityGrid&) = default;

private:
    std::vector<double> support_;
    std::vector<double> values_;
    Scale scale_;
};

[[nodiscard]] double trapezoid(std::span<const double> x, std::span<const double> y);

[[nodiscard]] DensityGrid normalize_grid(const DensityGrid& grid);

inline constexpr std::size_t default_tabulation_points = 4001;

// Default support: mean +/- 10 sd for normal priors, the [1e-8, 1 - 1e-8]
// quantile range for gamma priors (in log units on the LogParameter scale).
[[nodiscard]] std::pair<double, double> default_range(const PriorSpec& spec, Scale scale);
[[nodiscard]] std::vector<double> linspace(double lo, double hi, std::size_t n);

[[nodiscard]] DensityGrid tabulate(const PriorSpec& spec, Scale scale, std::vector<double> support);
[[nodiscard]] DensityGrid tabulate(const PriorSpec& spec, Scale scale,
                                   std::size_t n_points = default_tabulation_points);

/// Restricts both grids to the intersection of their ranges on the union of
/// their nodes, linearly interpolating values. Identical supports are
/// returned unchanged. Throws AlignmentError on an empty intersection or a
/// scale mismatch.
[[nodiscard]] std::pair<DensityGrid, DensityGrid> common_support(const DensityGrid& g0,
                                                                 const DensityGrid& g1);

[[nodiscard]] bool same_support(const DensityGrid& g0, const DensityGrid& g1) noexcept;

/// Trapezoidal BC of two grids sharing a support; AlignmentError otherwise.
[[nodiscard]] double bhattacharyya_grid(const DensityGrid& g0, const DensityGrid& g1);

/// sqrt(1 - BC). The squared distance is accumulated as
/// 1/2 int (sqrt f0 - sqrt f1)^2 plus the mass defect, which equals 1 - BC
/// but keeps full relative precision for nearby densities.
[[nodiscard]] double hellinger_grid(const DensityGrid& g0, const DensityGrid& g1);

// `x,density` CSV with a header row.
[[nodiscard]] DensityGrid read_grid_csv(std::istream& in, Scale scale);
[[nodiscard]] DensityGrid read_grid_csv(const std::string& path, Scale scale);
void write_grid_csv(std::ostream& out, const DensityGrid& grid);

}  // namespace priorsens
