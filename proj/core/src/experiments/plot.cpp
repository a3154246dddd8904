#include "lipbench/experiments/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace lipbench::experiments {
namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

constexpr std::array<const char*, 6> kColors = {"#1f77b4", "#d62728", "#2ca02c",
                                                "#9467bd", "#ff7f0e", "#17becf"};

}  // namespace

std::string render_line_chart(const ChartSpec& spec, const std::vector<Series>& series) {
  const double left = 70, right = 20, top = 40, bottom = 50;
  const double pw = spec.width - left - right;
  const double ph = spec.height - top - bottom;

  auto tx = [&](double x) { return spec.log_x ? std::log10(x) : x; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!spec.log_x || x > 0.0);
  };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double x) { return left + (tx(x) - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\""
      << spec.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << spec.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(spec.title) << "</text>\n";
  svg << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw)
      << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"#444\"/>\n";

  const double xl = spec.log_x ? std::pow(10.0, x0) : x0;
  const double xr = spec.log_x ? std::pow(10.0, x1) : x1;
  svg << "<text x=\"" << num(left) << "\" y=\"" << num(top + ph + 16) << "\" text-anchor=\"start\">"
      << tick(xl) << "</text>\n";
  svg << "<text x=\"" << num(left + pw) << "\" y=\"" << num(top + ph + 16)
      << "\" text-anchor=\"end\">" << tick(xr) << "</text>\n";
  svg << "<text x=\"" << num(left - 6) << "\" y=\"" << num(top + ph) << "\" text-anchor=\"end\">"
      << tick(y0) << "</text>\n";
  svg << "<text x=\"" << num(left - 6) << "\" y=\"" << num(top + 10) << "\" text-anchor=\"end\">"
      << tick(y1) << "</text>\n";
  svg << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << spec.height - 12
      << "\" text-anchor=\"middle\">" << escape(spec.x_label) << (spec.log_x ? " (log)" : "")
      << "</text>\n";
  svg << "<text transform=\"translate(16," << num(top + ph / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape(spec.y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % kColors.size()];
    std::ostringstream pts;
    std::ostringstream marks;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      pts << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
      marks << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i]))
            << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
        << pts.str() << "\"/>\n" << marks.str();
    svg << "<text x=\"" << num(left + 8) << "\" y=\"" << num(top + 16 + 14 * k) << "\" fill=\""
        << color << "\">" << escape(s.name) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace lipbench::experiments
