#include "priorsens/density.hpp"

#include "priorsens/errors.hpp"
#include "text_util.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>

namespace priorsens {

namespace {

constexpr double kTailProbability = 1e-8;
constexpr double kNormalHalfWidthSd = 10.0;

double lgamma_pos(double a) { return boost::math::lgamma(a); }

// Log of the p-quantile of G(shape, 1). Falls back to the small-x expansion
// P(X <= x) ~ x^a / Gamma(a + 1) when the quantile underflows a double.
double log_unit_gamma_lower_quantile(double shape, double p) {
    const double asymptotic = (std::log(p) + lgamma_pos(shape + 1.0)) / shape;
    if (asymptotic < -600.0) return asymptotic;
    const double x = boost::math::gamma_p_inv(shape, p);
    if (!(x > 0.0) || !std::isfinite(x)) return asymptotic;
    return std::log(x);
}

double log_unit_gamma_upper_quantile(double shape, double q) {
    return std::log(boost::math::gamma_q_inv(shape, q));
}

// Canonical argument order so analytic distances are exactly symmetric.
std::pair<ParamPoint, ParamPoint> ordered(const ParamPoint& a, const ParamPoint& b) {
    if (std::tie(a.gamma1, a.gamma2) <= std::tie(b.gamma1, b.gamma2)) return {a, b};
    return {b, a};
}

}  // namespace

std::string_view to_string(Family family) noexcept {
    return family == Family::Normal ? "normal" : "gamma";
}

std::string_view to_string(Scale scale) noexcept {
    return scale == Scale::Natural ? "natural" : "log";
}

Family parse_family(std::string_view text) {
    const std::string lower = detail::to_lower(text);
    if (lower == "normal" || lower == "gaussian") return Family::Normal;
    if (lower == "gamma") return Family::Gamma;
    throw DomainError(fmt::format("unknown prior family '{}'", text));
}

bool in_domain(Family family, const ParamPoint& point) noexcept {
    if (!std::isfinite(point.gamma1) || !std::isfinite(point.gamma2)) return false;
    if (family == Family::Gamma) return point.gamma1 > 0.0 && point.gamma2 > 0.0;
    return point.gamma2 > 0.0;
}

void require_domain(Family family, const ParamPoint& point) {
    if (in_domain(family, point)) return;
    if (family == Family::Gamma) {
        throw DomainError(fmt::format("gamma prior needs shape > 0 and rate > 0, got ({}, {})",
                                      point.gamma1, point.gamma2));
    }
    throw DomainError(fmt::format("normal prior needs finite mean and precision > 0, got ({}, {})",
                                  point.gamma1, point.gamma2));
}

PriorSpec::PriorSpec(Family f, ParamPoint p) : family(f), point(p) { require_domain(f, p); }

double log_prior_kernel(const PriorSpec& spec, double theta, double log_theta) {
    const auto [g1, g2] = spec.point;
    if (spec.family == Family::Normal) {
        const double d = theta - g1;
        return 0.5 * std::log(g2) - 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * g2 * d * d;
    }
    // (shape - 1) * log(theta) is taken as 0 for shape == 1 so the exponential
    // density is finite at theta = 0.
    const double power = g1 == 1.0 ? 0.0 : (g1 - 1.0) * log_theta;
    return g1 * std::log(g2) - lgamma_pos(g1) + power - g2 * theta;
}

double log_prior_density(const PriorSpec& spec, double x, Scale scale) {
    if (!std::isfinite(x)) throw DomainError("prior density evaluated at a non-finite point");
    if (spec.family == Family::Normal) {
        if (scale != Scale::Natural) {
            throw DomainError("normal priors are only supported on the natural scale");
        }
        return log_prior_kernel(spec, x, 0.0);
    }
    if (scale == Scale::LogParameter) return log_prior_kernel(spec, std::exp(x), x) + x;
    if (x < 0.0) throw DomainError(fmt::format("gamma density undefined at x = {}", x));
    if (x == 0.0) {
        if (spec.point.gamma1 < 1.0) throw DomainError("gamma density with shape < 1 is unbounded at 0");
        if (spec.point.gamma1 > 1.0) return -std::numeric_limits<double>::infinity();
    }
    return log_prior_kernel(spec, x, std::log(x));
}

double eval_prior_density(const PriorSpec& spec, double x, Scale scale) {
    return std::exp(log_prior_density(spec, x, scale));
}

double log_bc_normal(const ParamPoint& a, const ParamPoint& b) {
    require_domain(Family::Normal, a);
    require_domain(Family::Normal, b);
    const auto [p0, p1] = ordered(a, b);
    const double l0 = p0.gamma2;
    const double l1 = p1.gamma2;
    const double ratio = l1 / l0;
    const double root = std::sqrt(ratio) - 1.0;
    // 2 sqrt(l0 l1) / (l0 + l1) = 1 - (sqrt(t) - 1)^2 / (1 + t), t = l1 / l0
    const double scale_term = 0.5 * std::log1p(-root * root / (1.0 + ratio));
    const double dmu = p1.gamma1 - p0.gamma1;
    const double shift_term = -dmu * dmu * (l0 * l1 / (l0 + l1)) / 4.0;
    return scale_term + shift_term;
}

double log_bc_gamma(const ParamPoint& a, const ParamPoint& b) {
    require_domain(Family::Gamma, a);
    require_domain(Family::Gamma, b);
    const auto [p0, p1] = ordered(a, b);
    const double a0 = p0.gamma1, b0 = p0.gamma2;
    const double a1 = p1.gamma1, b1 = p1.gamma2;
    const double am = 0.5 * (a0 + a1);
    // 1/2 (a0 log b0 + a1 log b1) - am log bm, with bm = (b0 + b1) / 2
    const double d = (b0 - b1) / (b0 + b1);
    const double rate_term = 0.5 * a0 * std::log1p(d) + 0.5 * a1 * std::log1p(-d);
    const double shape_term = lgamma_pos(am) - 0.5 * (lgamma_pos(a0) + lgamma_pos(a1));
    return std::min(0.0, shape_term + rate_term);
}

double hellinger_from_log_bc(double log_bc) noexcept {
    return std::sqrt(std::max(0.0, -std::expm1(std::min(0.0, log_bc))));
}

double hellinger_normal(const ParamPoint& p0, const ParamPoint& p1) {
    return hellinger_from_log_bc(log_bc_normal(p0, p1));
}

double hellinger_gamma(const ParamPoint& p0, const ParamPoint& p1) {
    return hellinger_from_log_bc(log_bc_gamma(p0, p1));
}

double hellinger_family(Family family, const ParamPoint& p0, const ParamPoint& p1) {
    return family == Family::Normal ? hellinger_normal(p0, p1) : hellinger_gamma(p0, p1);
}

// --- DensityGrid ---------------------------------------------------------

DensityGrid::DensityGrid(std::vector<double> support, std::vector<double> values, Scale scale)
    : support_(std::move(support)), values_(std::move(values)), scale_(scale) {
    if (support_.size() != values_.size()) {
        throw DomainError(fmt::format("grid support has {} points but {} values", support_.size(),
                                      values_.size()));
    }
    if (support_.size() < min_points) {
        throw DomainError(fmt::format("grid needs at least {} points, got {}", min_points,
                                      support_.size()));
    }
    bool any_positive = false;
    for (std::size_t i = 0; i < support_.size(); ++i) {
        if (!std::isfinite(support_[i])) throw DomainError("grid support contains a non-finite value");
        if (i > 0 && !(support_[i] > support_[i - 1])) {
            throw DomainError(fmt::format("grid support not strictly increasing at index {}", i));
        }
        if (!std::isfinite(values_[i]) || values_[i] < 0.0) {
            throw DomainError(fmt::format("grid density invalid at index {}: {}", i, values_[i]));
        }
        any_positive = any_positive || values_[i] > 0.0;
    }
    if (!any_positive) throw DomainError("grid density is identically zero");
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
    double sum = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) sum += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return sum;
}

double DensityGrid::mass() const noexcept { return trapezoid(support_, values_); }

double DensityGrid::interpolate(double x) const noexcept {
    if (x < support_.front() || x > support_.back()) return 0.0;
    const auto it = std::lower_bound(support_.begin(), support_.end(), x);
    const auto hi = static_cast<std::size_t>(it - support_.begin());
    if (support_[hi] == x) return values_[hi];
    const std::size_t lo = hi - 1;
    const double w = (x - support_[lo]) / (support_[hi] - support_[lo]);
    return (1.0 - w) * values_[lo] + w * values_[hi];
}

DensityGrid normalize_grid(const DensityGrid& grid) {
    const double m = grid.mass();
    if (!(m > 0.0) || !std::isfinite(m)) throw NumericalError("grid mass is not positive and finite");
    std::vector<double> values(grid.values().begin(), grid.values().end());
    for (double& v : values) v /= m;
    return {std::vector<double>(grid.support().begin(), grid.support().end()), std::move(values),
            grid.scale()};
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) out[i] = lo + step * static_cast<double>(i);
    out.back() = hi;
    return out;
}

std::pair<double, double> default_range(const PriorSpec& spec, Scale scale) {
    const auto [g1, g2] = spec.point;
    if (spec.family == Family::Normal) {
        if (scale != Scale::Natural) {
            throw DomainError("normal priors are only supported on the natural scale");
        }
        const double half = kNormalHalfWidthSd / std::sqrt(g2);
        return {g1 - half, g1 + half};
    }
    const double log_rate = std::log(g2);
    const double lo = log_unit_gamma_lower_quantile(g1, kTailProbability) - log_rate;
    const double hi = log_unit_gamma_upper_quantile(g1, kTailProbability) - log_rate;
    if (scale == Scale::LogParameter) return {lo, hi};
    return {std::exp(lo), std::exp(hi)};
}

DensityGrid tabulate(const PriorSpec& spec, Scale scale, std::vector<double> support) {
    std::vector<double> values(support.size());
    for (std::size_t i = 0; i < support.size(); ++i) {
        values[i] = eval_prior_density(spec, support[i], scale);
        if (!std::isfinite(values[i])) {
            throw DomainError(fmt::format("{} prior density not finite at {}", to_string(spec.family),
                                          support[i]));
        }
    }
    return {std::move(support), std::move(values), scale};
}

DensityGrid tabulate(const PriorSpec& spec, Scale scale, std::size_t n_points) {
    const auto [lo, hi] = default_range(spec, scale);
    return tabulate(spec, scale, linspace(lo, hi, n_points));
}

bool same_support(const DensityGrid& g0, const DensityGrid& g1) noexcept {
    return g0.scale() == g1.scale() && std::ranges::equal(g0.support(), g1.support());
}

std::pair<DensityGrid, DensityGrid> common_support(const DensityGrid& g0, const DensityGrid& g1) {
    if (g0.scale() != g1.scale()) throw AlignmentError("grids are on different scales");
    if (same_support(g0, g1)) return {g0, g1};
    const double lo = std::max(g0.front(), g1.front());
    const double hi = std::min(g0.back(), g1.back());
    if (!(lo < hi)) {
        throw AlignmentError(fmt::format("grid supports [{}, {}] and [{}, {}] do not overlap",
                                         g0.front(), g0.back(), g1.front(), g1.back()));
    }
    std::vector<double> nodes{lo, hi};
    for (const auto* g : {&g0, &g1}) {
        for (double x : g->support()) {
            if (x > lo && x < hi) nodes.push_back(x);
        }
    }
    std::ranges::sort(nodes);
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    if (nodes.size() < DensityGrid::min_points) {
        throw AlignmentError("grid supports overlap on too few points to align");
    }
    std::vector<double> v0(nodes.size());
    std::vector<double> v1(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        v0[i] = g0.interpolate(nodes[i]);
        v1[i] = g1.interpolate(nodes[i]);
    }
    return {DensityGrid(nodes, std::move(v0), g0.scale()),
            DensityGrid(nodes, std::move(v1), g1.scale())};
}

namespace {

void require_aligned(const DensityGrid& g0, const DensityGrid& g1) {
    if (!same_support(g0, g1)) {
        throw AlignmentError("grids do not share a support; align them with common_support first");
    }
}

}  // namespace

double bhattacharyya_grid(const DensityGrid& g0, const DensityGrid& g1) {
    require_aligned(g0, g1);
    const auto x = g0.support();
    const auto f = g0.values();
    const auto g = g1.values();
    double sum = 0.0;
    double prev = std::sqrt(f[0] * g[0]);
    for (std::size_t i = 1; i < x.size(); ++i) {
        const double cur = std::sqrt(f[i] * g[i]);
        sum += 0.5 * (x[i] - x[i - 1]) * (cur + prev);
        prev = cur;
    }
    return std::clamp(sum, 0.0, 1.0);
}

double hellinger_grid(const DensityGrid& g0, const DensityGrid& g1) {
    require_aligned(g0, g1);
    const auto x = g0.support();
    const auto f = g0.values();
    const auto g = g1.values();
    auto sq = [&](std::size_t i) {
        const double d = std::sqrt(f[i]) - std::sqrt(g[i]);
        return d * d;
    };
    double sum = 0.0;
    double prev = sq(0);
    for (std::size_t i = 1; i < x.size(); ++i) {
        const double cur = sq(i);
        sum += 0.5 * (x[i] - x[i - 1]) * (cur + prev);
        prev = cur;
    }
    // Normalized grids carry a mass defect of pure rounding; dropping it keeps
    // H(g, g) at exactly zero.
    double defect = 1.0 - 0.5 * (g0.mass() + g1.mass());
    if (std::abs(defect) <= 8.0 * static_cast<double>(x.size()) * std::numeric_limits<double>::epsilon()) {
        defect = 0.0;
    }
    const double h2 = 0.5 * sum + defect;
    return std::sqrt(std::clamp(h2, 0.0, 1.0));
}

// --- CSV -----------------------------------------------------------------

DensityGrid read_grid_csv(std::istream& in, Scale scale) {
    std::string line;
    if (!std::getline(in, line)) throw IngestionError("density CSV is empty");
    const auto header = detail::split_csv_line(line);
    if (header.size() != 2 || detail::parse_double(header[0]).has_value()) {
        throw IngestionError("density CSV needs a two-column header row (x,density)");
    }
    std::vector<double> xs;
    std::vector<double> ys;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != 2) {
            throw IngestionError(fmt::format("density CSV line {}: expected 2 columns", line_no));
        }
        const auto x = detail::parse_double(cells[0]);
        const auto y = detail::parse_double(cells[1]);
        if (!x || !y) throw IngestionError(fmt::format("density CSV line {}: not a number", line_no));
        xs.push_back(*x);
        ys.push_back(*y);
    }
    try {
        return DensityGrid(std::move(xs), std::move(ys), scale);
    } catch (const DomainError& e) {
        throw IngestionError(std::string("density CSV: ") + e.what());
    }
}

DensityGrid read_grid_csv(const std::string& path, Scale scale) {
    std::ifstream in(path);
    if (!in) throw IngestionError(fmt::format("cannot open density CSV '{}'", path));
    return read_grid_csv(in, scale);
}

void write_grid_csv(std::ostream& out, const DensityGrid& grid) {
    out << "x,density\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out << grid.support()[i] << ',' << grid.values()[i] << '\n';
    }
}

}  // namespace priorsens
