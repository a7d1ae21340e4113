#pragma once

#include <filesystem>
#include <vector>

#include "concord/matrix.hpp"
#include "concord/models.hpp"

namespace concord {

// Static SVG charts written directly, no plotting dependency.

// Per-agent prediction curves sampled at xs (one matrix row per agent),
// with the reference curve dashed.
void write_regression_fit_svg(const std::filesystem::path& path,
                              const std::vector<double>& xs, const Matrix& agent_rows,
                              const std::vector<double>& reference);

// N x N heatmap with per-cell values printed.
void write_trust_heatmap_svg(const std::filesystem::path& path, const Matrix& w);

// Class raster on a regular grid: `grid` holds one class id per cell,
// row-major, rows bottom-up over [lo, hi]^2. The CSV lists x,y,class per
// cell; the SVG renders run-length-merged cells.
void write_decision_grid_csv(const std::filesystem::path& path, const Matrix& grid,
                             double lo, double hi);
void write_decision_grid_svg(const std::filesystem::path& path, const Matrix& grid);

// Argmax class of an MLP on a resolution x resolution grid over [lo, hi]^2.
Matrix decision_grid(const MlpModel& model, double lo, double hi, int resolution);

}  // namespace concord
