#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "synthlat/common.hpp"
#include "synthlat/dynamics.hpp"

namespace synthlat::svg {

struct HeatmapOptions {
  std::string title;
  int max_columns = 400;  ///< time axis is decimated down to this many cells
  double gamma = 0.5;     ///< display exponent applied to normalized magnitude
};

/// Site x time magnitude heatmap as a standalone SVG (no plotting deps).
void write_trace_heatmap(const std::filesystem::path& path,
                         const dynamics::SiteTimeTrace& trace,
                         const HeatmapOptions& options = {});

/// Generic row/column heatmap of non-negative values.
void write_matrix_heatmap(const std::filesystem::path& path, const RealMatrix& values,
                          const std::vector<double>& row_coords,
                          const std::vector<double>& col_coords,
                          const HeatmapOptions& options = {});

}  // namespace synthlat::svg
