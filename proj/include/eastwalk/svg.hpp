#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "eastwalk/lattice.hpp"

// Minimal self-contained SVG line plots: axes, ticks, one polyline per
// series, point markers and 95% error bars.  Just enough to eyeball curves.

namespace eastwalk {

struct SvgSeries {
  std::vector<double> x, y;
  std::vector<double> yerr;  // optional half-widths; empty = no bars
  std::string color = "#2a6fb0";
  std::string label;
  bool line = true;
  bool points = true;
};

struct SvgPlot {
  std::string title, xlabel, ylabel;
  std::vector<SvgSeries> series;
  int width = 640, height = 420;
};

namespace detail {

struct AxisRange {
  double lo = 0.0, hi = 1.0;
};

inline AxisRange pad_range(double lo, double hi) {
  if (!(lo <= hi)) return {0.0, 1.0};
  double span = hi - lo;
  if (span <= 0.0) span = std::max({1e-9, std::abs(lo) * 0.2, 1.0});
  return {lo - 0.07 * span, hi + 0.07 * span};
}

inline double tick_step(double span) {
  double raw = span / 5.0;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10.0 * mag;
}

inline std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v == 0.0 ? 0.0 : v);
  return buf;
}

}  // namespace detail

inline void write_svg(const std::string& path, const SvgPlot& plot) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = xlo, yhi = -xlo;
  for (const SvgSeries& s : plot.series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      double e = i < s.yerr.size() ? s.yerr[i] : 0.0;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i] - e);
      yhi = std::max(yhi, s.y[i] + e);
    }
  detail::AxisRange xr = detail::pad_range(xlo, xhi);
  detail::AxisRange yr = detail::pad_range(ylo, yhi);

  const double ml = 62, mr = 16, mt = 30, mb = 46;
  const double pw = plot.width - ml - mr, ph = plot.height - mt - mb;
  auto X = [&](double x) { return ml + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto Y = [&](double y) { return mt + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::ofstream out(path);
  if (!out) throw SimulationError("cannot open output file " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << plot.width << "\" height=\""
      << plot.height << "\" viewBox=\"0 0 " << plot.width << " " << plot.height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#222\">\n";
  if (!plot.title.empty())
    out << "<text x=\"" << plot.width / 2.0 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">"
        << plot.title << "</text>\n";

  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#444\"/>\n";

  double xs = detail::tick_step(xr.hi - xr.lo);
  for (double t = std::ceil(xr.lo / xs) * xs; t <= xr.hi + 1e-12 * xs; t += xs) {
    double px = X(t);
    out << "<line x1=\"" << px << "\" y1=\"" << mt + ph << "\" x2=\"" << px << "\" y2=\""
        << mt + ph + 4 << "\" stroke=\"#444\"/>\n"
        << "<text x=\"" << px << "\" y=\"" << mt + ph + 16 << "\" text-anchor=\"middle\">"
        << detail::short_num(std::abs(t) < 1e-12 * xs ? 0.0 : t) << "</text>\n";
  }
  double ys = detail::tick_step(yr.hi - yr.lo);
  for (double t = std::ceil(yr.lo / ys) * ys; t <= yr.hi + 1e-12 * ys; t += ys) {
    double py = Y(t);
    out << "<line x1=\"" << ml - 4 << "\" y1=\"" << py << "\" x2=\"" << ml << "\" y2=\"" << py
        << "\" stroke=\"#444\"/>\n"
        << "<line x1=\"" << ml << "\" y1=\"" << py << "\" x2=\"" << ml + pw << "\" y2=\"" << py
        << "\" stroke=\"#ddd\"/>\n"
        << "<text x=\"" << ml - 7 << "\" y=\"" << py + 3.5 << "\" text-anchor=\"end\">"
        << detail::short_num(std::abs(t) < 1e-12 * ys ? 0.0 : t) << "</text>\n";
  }
  if (!plot.xlabel.empty())
    out << "<text x=\"" << ml + pw / 2.0 << "\" y=\"" << plot.height - 10
        << "\" text-anchor=\"middle\">" << plot.xlabel << "</text>\n";
  if (!plot.ylabel.empty())
    out << "<text x=\"14\" y=\"" << mt + ph / 2.0 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
        << mt + ph / 2.0 << ")\">" << plot.ylabel << "</text>\n";

  int li = 0;
  for (const SvgSeries& s : plot.series) {
    for (size_t i = 0; i < s.x.size() && i < s.yerr.size(); ++i) {
      if (!(s.yerr[i] > 0.0)) continue;
      double px = X(s.x[i]), y1 = Y(s.y[i] - s.yerr[i]), y2 = Y(s.y[i] + s.yerr[i]);
      out << "<line x1=\"" << px << "\" y1=\"" << y1 << "\" x2=\"" << px << "\" y2=\"" << y2
          << "\" stroke=\"" << s.color << "\"/>\n"
          << "<line x1=\"" << px - 3 << "\" y1=\"" << y1 << "\" x2=\"" << px + 3 << "\" y2=\"" << y1
          << "\" stroke=\"" << s.color << "\"/>\n"
          << "<line x1=\"" << px - 3 << "\" y1=\"" << y2 << "\" x2=\"" << px + 3 << "\" y2=\"" << y2
          << "\" stroke=\"" << s.color << "\"/>\n";
    }
    if (s.line && s.x.size() > 1) {
      out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
      for (size_t i = 0; i < s.x.size(); ++i)
        out << X(s.x[i]) << ',' << Y(s.y[i]) << (i + 1 < s.x.size() ? " " : "");
      out << "\"/>\n";
    }
    if (s.points)
      for (size_t i = 0; i < s.x.size(); ++i)
        out << "<circle cx=\"" << X(s.x[i]) << "\" cy=\"" << Y(s.y[i]) << "\" r=\"2.5\" fill=\""
            << s.color << "\"/>\n";
    if (!s.label.empty()) {
      double lx = ml + pw - 130, ly = mt + 14 + 15 * li++;
      out << "<line x1=\"" << lx << "\" y1=\"" << ly - 4 << "\" x2=\"" << lx + 18 << "\" y2=\""
          << ly - 4 << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n"
          << "<text x=\"" << lx + 23 << "\" y=\"" << ly << "\">" << s.label << "</text>\n";
    }
  }
  out << "</g>\n</svg>\n";
  if (!out) throw SimulationError("write failed for " + path);
}

}  // namespace eastwalk
