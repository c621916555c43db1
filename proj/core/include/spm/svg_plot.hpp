#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace spm {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> err;  ///< optional symmetric error bars
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

/// Single-file SVG line plot. The plotted data is repeated in XML comments
/// so the file can be checked against the CSV it came from.
std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& opts);
void write_svg(const std::filesystem::path& path, const std::vector<PlotSeries>& series,
               const PlotOptions& opts);

}  // namespace spm
