#pragma once

#include <string>
#include <vector>

namespace lipbench::experiments {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = true;
  int width = 640;
  int height = 400;
};

/// Self-contained SVG line chart (polyline + markers per series, axis ticks
/// at the data range ends). Non-finite points and x <= 0 on a log axis are
/// dropped.
std::string render_line_chart(const ChartSpec& spec, const std::vector<Series>& series);

}  // namespace lipbench::experiments
