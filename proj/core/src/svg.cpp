#include "synthlat/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace synthlat::svg {

namespace {

struct Rgb {
  int r, g, b;
};

/// Compact dark-to-bright colormap (close to viridis endpoints).
Rgb colormap(double x) {
  x = std::clamp(x, 0.0, 1.0);
  static const Rgb stops[] = {
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  const double pos = x * 4.0;
  const int i = std::min(3, static_cast<int>(pos));
  const double f = pos - i;
  return {static_cast<int>(stops[i].r + f * (stops[i + 1].r - stops[i].r)),
          static_cast<int>(stops[i].g + f * (stops[i + 1].g - stops[i].g)),
          static_cast<int>(stops[i].b + f * (stops[i + 1].b - stops[i].b))};
}

void write_cells(std::ofstream& out, const RealMatrix& values, double gamma,
                 double x0, double y0, double cell_w, double cell_h) {
  const double peak = std::max(values.maxCoeff(), 1e-300);
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      const double v = std::pow(values(r, c) / peak, gamma);
      const Rgb rgb = colormap(v);
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" "
                    "fill=\"rgb(%d,%d,%d)\"/>\n",
                    x0 + c * cell_w, y0 + (values.rows() - 1 - r) * cell_h, cell_w + 0.05,
                    cell_h + 0.05, rgb.r, rgb.g, rgb.b);
      out << buf;
    }
  }
}

void write_heatmap(const std::filesystem::path& path, const RealMatrix& values,
                   const std::string& title, double gamma, const std::string& x_label,
                   const std::string& y_label) {
  const double cell_w = std::max(1.0, 760.0 / values.cols());
  const double cell_h = std::max(2.0, 420.0 / values.rows());
  const double plot_w = cell_w * values.cols();
  const double plot_h = cell_h * values.rows();
  const double width = plot_w + 80.0;
  const double height = plot_h + 70.0;

  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    out << "<text x=\"40\" y=\"22\" font-family=\"sans-serif\" font-size=\"14\">" << title
        << "</text>\n";
  }
  write_cells(out, values, gamma, 60.0, 35.0, cell_w, cell_h);
  out << "<text x=\"" << 60.0 + plot_w / 2 << "\" y=\"" << height - 12
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" << x_label
      << "</text>\n";
  out << "<text x=\"18\" y=\"" << 35.0 + plot_h / 2
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 18 "
      << 35.0 + plot_h / 2 << ")\">" << y_label << "</text>\n";
  out << "</svg>\n";
}

}  // namespace

void write_trace_heatmap(const std::filesystem::path& path,
                         const dynamics::SiteTimeTrace& trace,
                         const HeatmapOptions& options) {
  trace.validate();
  const int n_t = trace.n_times();
  const int stride = std::max(1, n_t / options.max_columns);
  const int cols = (n_t + stride - 1) / stride;

  RealMatrix mag(trace.n_sites(), cols);
  for (int r = 0; r < trace.n_sites(); ++r) {
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      int count = 0;
      for (int t = c * stride; t < std::min(n_t, (c + 1) * stride); ++t) {
        acc += std::abs(trace.amps(r, t));
        ++count;
      }
      mag(r, c) = count > 0 ? acc / count : 0.0;
    }
  }
  write_heatmap(path, mag, options.title, options.gamma, "time", "site");
}

void write_matrix_heatmap(const std::filesystem::path& path, const RealMatrix& values,
                          const std::vector<double>& row_coords,
                          const std::vector<double>& col_coords,
                          const HeatmapOptions& options) {
  if (row_coords.size() != static_cast<size_t>(values.rows()) ||
      col_coords.size() != static_cast<size_t>(values.cols())) {
    throw ConfigError("heatmap: coordinate lengths must match the matrix");
  }
  const int stride = std::max(1, static_cast<int>(values.cols()) / options.max_columns);
  RealMatrix decimated(values.rows(), (values.cols() + stride - 1) / stride);
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < decimated.cols(); ++c) {
      double best = 0.0;
      for (Eigen::Index t = c * stride; t < std::min(values.cols(), (c + 1) * stride); ++t) {
        best = std::max(best, values(r, t));
      }
      decimated(r, c) = best;
    }
  }
  write_heatmap(path, decimated, options.title, options.gamma, "omega", "k");
}

}  // namespace synthlat::svg
