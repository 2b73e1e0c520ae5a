#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pvc/common.hpp"

namespace pvc {

// Batch-friendly line plots: deterministic SVG bytes for identical input.
struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (x, y)
};

struct PlotSpec {
  std::string title, x_label, y_label;
  std::vector<PlotSeries> series;
  int width = 720, height = 440;
};

void write_svg_plot(const std::filesystem::path& path, const PlotSpec& spec);

}  // namespace pvc
