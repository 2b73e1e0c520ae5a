#include "pvc/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace pvc {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// Round limits outward to a tidy tick step.
std::pair<double, double> nice_range(double lo, double hi) {
  if (!(hi > lo)) {
    const double pad = std::max(1.0, std::fabs(lo)) * 0.05;
    return {lo - pad, hi + pad};
  }
  const double pad = (hi - lo) * 0.05;
  return {lo - pad, hi + pad};
}

}  // namespace

void write_svg_plot(const std::filesystem::path& path, const PlotSpec& spec) {
  if (spec.series.empty()) throw ConfigError("plot: no series");
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const auto& s : spec.series) {
    if (s.points.empty()) throw ConfigError("plot: series '" + s.label + "' has no points");
    for (const auto& [x, y] : s.points) {
      x_lo = std::min(x_lo, x);
      x_hi = std::max(x_hi, x);
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
  }
  std::tie(x_lo, x_hi) = nice_range(x_lo, x_hi);
  std::tie(y_lo, y_hi) = nice_range(y_lo, y_hi);

  const double ml = 70, mr = 20, mt = 36, mb = 48;
  const double pw = spec.width - ml - mr, ph = spec.height - mt - mb;
  auto sx = [&](double x) { return ml + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto sy = [&](double y) { return mt + ph - (y - y_lo) / (y_hi - y_lo) * ph; };

  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\""
     << spec.height << "\" viewBox=\"0 0 " << spec.width << " " << spec.height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << spec.width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
     << "font-family=\"sans-serif\" font-size=\"14\">" << spec.title << "</text>\n";

  // axes
  os << "<rect x=\"" << fmt(ml) << "\" y=\"" << fmt(mt) << "\" width=\"" << fmt(pw)
     << "\" height=\"" << fmt(ph) << "\" fill=\"none\" stroke=\"#333\"/>\n";
  const int ticks = 5;
  for (int i = 0; i <= ticks; i++) {
    const double tx = x_lo + (x_hi - x_lo) * i / ticks;
    const double ty = y_lo + (y_hi - y_lo) * i / ticks;
    os << "<line x1=\"" << fmt(sx(tx)) << "\" y1=\"" << fmt(mt + ph) << "\" x2=\"" << fmt(sx(tx))
       << "\" y2=\"" << fmt(mt + ph + 5) << "\" stroke=\"#333\"/>\n";
    os << "<text x=\"" << fmt(sx(tx)) << "\" y=\"" << fmt(mt + ph + 18)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt_tick(tx)
       << "</text>\n";
    os << "<line x1=\"" << fmt(ml - 5) << "\" y1=\"" << fmt(sy(ty)) << "\" x2=\"" << fmt(ml)
       << "\" y2=\"" << fmt(sy(ty)) << "\" stroke=\"#333\"/>\n";
    os << "<text x=\"" << fmt(ml - 8) << "\" y=\"" << fmt(sy(ty) + 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt_tick(ty)
       << "</text>\n";
  }
  os << "<text x=\"" << spec.width / 2 << "\" y=\"" << spec.height - 8
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << spec.x_label
     << "</text>\n";
  os << "<text x=\"16\" y=\"" << spec.height / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
     << "transform=\"rotate(-90 16 " << spec.height / 2 << ")\">" << spec.y_label << "</text>\n";

  for (size_t si = 0; si < spec.series.size(); si++) {
    const auto& s = spec.series[si];
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : s.points) os << fmt(sx(x)) << "," << fmt(sy(y)) << " ";
    os << "\"/>\n";
    for (const auto& [x, y] : s.points) {
      os << "<circle cx=\"" << fmt(sx(x)) << "\" cy=\"" << fmt(sy(y)) << "\" r=\"2.2\" fill=\""
         << color << "\"/>\n";
    }
    // legend
    const double ly = mt + 14 + 16 * static_cast<double>(si);
    os << "<line x1=\"" << fmt(ml + 8) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(ml + 28)
       << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << fmt(ml + 33) << "\" y=\"" << fmt(ly + 4)
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
  }
  os << "</svg>\n";
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace pvc
