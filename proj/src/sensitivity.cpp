#include "priorsens/sensitivity.hpp"

#include "priorsens/errors.hpp"

#include <fmt/format.h>

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

namespace priorsens {

SensitivityResult assemble_sensitivity(
    const PolarGrid& grid, const std::function<double(const ParamPoint&)>& posterior_distance) {
    if (grid.points.empty()) throw DomainError("sensitivity needs a nonempty contour");
    SensitivityResult result;
    result.epsilon = grid.epsilon;
    result.base = grid.base;
    result.n_angles = grid.n_angles;
    result.failed_angles = grid.failed_angles;
    result.entries.reserve(grid.points.size());
    for (const ContourPoint& cp : grid.points) {
        const double h = posterior_distance(cp.point);
        result.entries.push_back({cp.phi, cp.point, h, h / grid.epsilon});
    }

    std::vector<double> ratios;
    ratios.reserve(result.entries.size());
    for (const auto& e : result.entries) ratios.push_back(e.ratio);

    const auto worst = std::ranges::max_element(ratios);  // first occurrence
    const SensitivityEntry& worst_entry = result.entries[static_cast<std::size_t>(worst - ratios.begin())];
    result.worst_case = *worst;
    result.worst_angle = worst_entry.phi;
    result.mean = std::accumulate(ratios.begin(), ratios.end(), 0.0) / static_cast<double>(ratios.size());
    result.min = *std::ranges::min_element(ratios);
    std::vector<double> sorted = ratios;
    std::ranges::sort(sorted);
    const std::size_t mid = sorted.size() / 2;
    result.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    result.calibrated_worst = calibrated_ratio(worst_entry.h_post, grid.epsilon);

    if (!result.failed_angles.empty()) {
        result.warnings.push_back(fmt::format(
            "partial contour: {} of {} directions unreachable and excluded from summaries",
            result.failed_angles.size(), result.n_angles));
    }
    if (result.calibrated_worst.saturated) {
        result.warnings.push_back("posterior distance saturated at 1; calibration is capped");
    }
    return result;
}

SensitivityResult circular_sensitivity(const PosteriorInput& input, const PolarGrid& grid) {
    if (!(grid.base == input.base_prior())) {
        throw DomainError("contour base prior differs from the posterior's base prior");
    }
    std::size_t degenerate = 0;
    std::vector<double> distances;
    distances.reserve(grid.points.size());
    for (const ContourPoint& cp : grid.points) {
        try {
            const DensityGrid reweighted = reweight_posterior(input, PriorSpec(grid.base.family, cp.point));
            if (is_degenerate(reweighted)) ++degenerate;
            distances.push_back(hellinger_grid(reweighted, input.posterior()));
        } catch (const ReweightError& e) {
            throw ReweightError(fmt::format("at phi = {:.6f}: {}", cp.phi, e.what()));
        }
    }
    std::size_t next = 0;
    SensitivityResult result =
        assemble_sensitivity(grid, [&](const ParamPoint&) { return distances[next++]; });
    if (degenerate > 0) {
        result.warnings.push_back(fmt::format(
            "degenerate posterior: {} reweighted grids resolve fewer than 3 support points",
            degenerate));
    }
    return result;
}

SensitivityStatus classify(double worst_case) noexcept {
    if (std::abs(worst_case - 1.0) <= boundary_tolerance) return SensitivityStatus::Boundary;
    return worst_case > 1.0 ? SensitivityStatus::SuperSensitive : SensitivityStatus::Robust;
}

std::string summarize(const SensitivityResult& r) {
    std::string out;
    out += fmt::format("{} prior at ({}, {}), epsilon = {}, {} directions\n", to_string(r.base.family),
                       r.base.point.gamma1, r.base.point.gamma2, r.epsilon, r.n_angles);
    out += fmt::format("worst-case sensitivity: {:.4f} at phi = {:.4f}\n", r.worst_case, r.worst_angle);
    out += fmt::format("mean {:.4f}, median {:.4f}, min {:.4f}\n", r.mean, r.median, r.min);
    out += fmt::format(
        "interpretation: the posterior shift is about {:.1f}% of the prior shift, in units of the "
        "mean change of a unit-variance normal (calibrated ratio {:.1f}%)\n",
        100.0 * r.worst_case, 100.0 * r.calibrated_worst.exact);
    switch (classify(r.worst_case)) {
        case SensitivityStatus::Robust:
            out += "status: data pull the posteriors closer together than the priors\n";
            break;
        case SensitivityStatus::Boundary:
            out += "status: BOUNDARY - posteriors move exactly as much as the priors\n";
            break;
        case SensitivityStatus::SuperSensitive:
            out += "status: SUPER-SENSITIVE - posteriors move more than the priors\n";
            break;
    }
    if (!r.failed_angles.empty()) {
        out += "unreachable directions (phi):";
        for (double phi : r.failed_angles) out += fmt::format(" {:.4f}", phi);
        out += '\n';
    }
    for (const auto& w : r.warnings) out += "warning: " + w + '\n';
    return out;
}

PlotTables export_plot_data(const SensitivityResult& result) {
    PlotTables t;
    for (int k = 1; k <= 10; ++k) t.reference_circles.push_back(k / 10.0);
    t.reference_lines = {0.5, 1.0};
    const auto [x0, y0] = result.base.point;
    for (const auto& e : result.entries) {
        t.polar.push_back({"sensitivity", e.phi, x0 + e.ratio * std::cos(e.phi),
                           y0 + e.ratio * std::sin(e.phi)});
    }
    for (double c : t.reference_circles) {
        const std::string name = fmt::format("ref_{:.1f}", c);
        for (const auto& e : result.entries) {
            t.polar.push_back({name, e.phi, x0 + c * std::cos(e.phi), y0 + c * std::sin(e.phi)});
        }
    }
    bool marked = false;
    for (const auto& e : result.entries) {
        const bool worst = !marked && e.phi == result.worst_angle && e.ratio == result.worst_case;
        marked = marked || worst;
        t.rolled.push_back({e.phi, e.ratio, worst});
    }
    return t;
}

void write_polar_csv(std::ostream& out, const PlotTables& tables) {
    out << "series,phi,x,y\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : tables.polar) out << r.series << ',' << r.phi << ',' << r.x << ',' << r.y << '\n';
}

void write_rolled_csv(std::ostream& out, const PlotTables& tables) {
    out << "phi,ratio,ref_0.5,ref_1.0,worst\n"
        << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : tables.rolled) {
        out << r.phi << ',' << r.ratio << ",0.5,1," << (r.worst ? 1 : 0) << '\n';
    }
}

std::string to_json(const SensitivityResult& r) {
    nlohmann::ordered_json j;
    j["epsilon"] = r.epsilon;
    j["n_angles"] = r.n_angles;
    j["base"] = {{"family", to_string(r.base.family)},
                 {"gamma1", r.base.point.gamma1},
                 {"gamma2", r.base.point.gamma2}};
    j["worst_case"] = r.worst_case;
    j["worst_angle"] = r.worst_angle;
    j["mean"] = r.mean;
    j["median"] = r.median;
    j["min"] = r.min;
    j["super_sensitive"] = classify(r.worst_case) == SensitivityStatus::SuperSensitive;
    j["boundary"] = classify(r.worst_case) == SensitivityStatus::Boundary;
    j["calibrated_worst"] = {{"exact", r.calibrated_worst.exact},
                             {"approx", r.calibrated_worst.approx},
                             {"saturated", r.calibrated_worst.saturated}};
    j["failed_angles"] = r.failed_angles;
    j["warnings"] = r.warnings;
    auto entries = nlohmann::ordered_json::array();
    for (const auto& e : r.entries) {
        entries.push_back({{"phi", e.phi},
                           {"gamma1", e.point.gamma1},
                           {"gamma2", e.point.gamma2},
                           {"h_post", e.h_post},
                           {"ratio", e.ratio}});
    }
    j["entries"] = std::move(entries);
    return j.dump(2);
}

}  // namespace priorsens
