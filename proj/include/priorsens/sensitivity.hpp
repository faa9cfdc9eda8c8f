#pragma once

#include "priorsens/calibration.hpp"
#include "priorsens/density.hpp"
#include "priorsens/grid_search.hpp"
#include "priorsens/posterior_update.hpp"

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace priorsens {

struct SensitivityEntry {
    double phi = 0.0;
    ParamPoint point;
    double h_post = 0.0;
    double ratio = 0.0;  // h_post / epsilon, never truncated
};

struct SensitivityResult {
    double epsilon = 0.0;
    PriorSpec base;
    std::size_t n_angles = 0;
    std::vector<SensitivityEntry> entries;
    double worst_case = 0.0;
    double mean = 0.0;
    double median = 0.0;
    double min = 0.0;
    double worst_angle = 0.0;  // first maximizing angle in angle order
    CalibratedRatio calibrated_worst;
    std::vector<double> failed_angles;
    std::vector<std::string> warnings;
};

/// Builds a result from a contour and a per-point posterior distance.
/// Failed contour directions are carried over and excluded from summaries.
[[nodiscard]] SensitivityResult assemble_sensitivity(
    const PolarGrid& grid, const std::function<double(const ParamPoint&)>& posterior_distance);

/// Circular sensitivity through instantaneous reweighting of the base
/// posterior. Reweighting failures are rethrown naming the angle.
[[nodiscard]] SensitivityResult circular_sensitivity(const PosteriorInput& input, const PolarGrid& grid);

enum class SensitivityStatus { Robust, Boundary, SuperSensitive };

// |worst_case - 1| within this counts as the boundary case.
inline constexpr double boundary_tolerance = 5e-4;

[[nodiscard]] SensitivityStatus classify(double worst_case) noexcept;

/// Multi-line human-readable report with the calibrated interpretation.
[[nodiscard]] std::string summarize(const SensitivityResult& result);

struct PolarPlotRow {
    std::string series;  // "sensitivity" or "ref_0.1" ... "ref_1.0"
    double phi = 0.0;
    double x = 0.0;
    double y = 0.0;
};

struct RolledPlotRow {
    double phi = 0.0;
    double ratio = 0.0;
    bool worst = false;
};

struct PlotTables {
    std::vector<PolarPlotRow> polar;
    std::vector<RolledPlotRow> rolled;
    std::vector<double> reference_circles;  // 0.1, 0.2, ..., 1.0
    std::vector<double> reference_lines;    // 0.5, 1.0
};

/// Polar trace base + ratio (cos phi, sin phi) with concentric reference
/// circles, and the ratios rolled out against the angle.
[[nodiscard]] PlotTables export_plot_data(const SensitivityResult& result);

void write_polar_csv(std::ostream& out, const PlotTables& tables);
void write_rolled_csv(std::ostream& out, const PlotTables& tables);

/// JSON report. Deterministic: identical results give identical bytes.
[[nodiscard]] std::string to_json(const SensitivityResult& result);

}  // namespace priorsens
