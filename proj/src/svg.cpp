#include "nmdesc/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace nmdesc {

namespace {

constexpr double kPanelW = 420, kPanelH = 320;
constexpr double kLeft = 64, kRight = 16, kTop = 32, kBottom = 48;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle() {
    if (!std::isfinite(lo)) lo = 0, hi = 1;
    if (hi <= lo) hi = lo + (lo == 0 ? 1 : std::abs(lo) * 0.1);
  }
};

void draw_panel(std::ostream& out, const PlotPanel& p, double ox, double oy) {
  Range xr, yr;
  double min_positive = std::numeric_limits<double>::infinity();
  for (const auto& s : p.series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) {
      if (p.log_y) {
        if (v > 0) min_positive = std::min(min_positive, v);
      } else {
        yr.add(v);
      }
    }
  }
  xr.settle();
  double floor_value = 0.0;
  if (p.log_y) {
    if (!std::isfinite(min_positive)) min_positive = 1e-16;
    floor_value = min_positive;
    for (const auto& s : p.series)
      for (double v : s.y) yr.add(std::log10(v > 0 ? v : floor_value));
    yr.lo = std::floor(yr.lo);
    yr.hi = std::ceil(yr.hi);
  }
  yr.settle();

  const double w = kPanelW - kLeft - kRight, h = kPanelH - kTop - kBottom;
  auto px = [&](double x) { return ox + kLeft + (x - xr.lo) / (xr.hi - xr.lo) * w; };
  auto py = [&](double y) {
    const double v = p.log_y ? std::log10(y > 0 ? y : floor_value) : y;
    return oy + kTop + h - (v - yr.lo) / (yr.hi - yr.lo) * h;
  };

  out << "<g>\n";
  out << "<rect x=\"" << num(ox + kLeft) << "\" y=\"" << num(oy + kTop) << "\" width=\"" << num(w) << "\" height=\""
      << num(h) << "\" fill=\"none\" stroke=\"#333\"/>\n";
  out << "<text x=\"" << num(ox + kPanelW / 2) << "\" y=\"" << num(oy + 20)
      << "\" text-anchor=\"middle\" font-size=\"14\">" << escape(p.title) << "</text>\n";
  out << "<text x=\"" << num(ox + kLeft + w / 2) << "\" y=\"" << num(oy + kPanelH - 8)
      << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(p.x_label) << "</text>\n";
  out << "<text transform=\"translate(" << num(ox + 14) << "," << num(oy + kTop + h / 2)
      << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"12\">" << escape(p.y_label) << "</text>\n";

  for (int i = 0; i <= 4; ++i) {
    const double xv = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    out << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(oy + kTop + h + 16)
        << "\" text-anchor=\"middle\" font-size=\"10\">" << tick(xv) << "</text>\n";
  }
  if (p.log_y) {
    const int lo = static_cast<int>(yr.lo), hi = static_cast<int>(yr.hi);
    const int stride = std::max(1, (hi - lo) / 6);
    for (int e = lo; e <= hi; e += stride) {
      const double yy = oy + kTop + h - (e - yr.lo) / (yr.hi - yr.lo) * h;
      out << "<text x=\"" << num(ox + kLeft - 4) << "\" y=\"" << num(yy + 3)
          << "\" text-anchor=\"end\" font-size=\"10\">1e" << e << "</text>\n";
    }
  } else {
    for (int i = 0; i <= 4; ++i) {
      const double yv = yr.lo + (yr.hi - yr.lo) * i / 4.0;
      out << "<text x=\"" << num(ox + kLeft - 4) << "\" y=\"" << num(py(yv) + 3)
          << "\" text-anchor=\"end\" font-size=\"10\">" << tick(yv) << "</text>\n";
    }
  }

  for (std::size_t si = 0; si < p.series.size(); ++si) {
    const PlotSeries& s = p.series[si];
    const char* color = kPalette[si % (sizeof kPalette / sizeof *kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(s.x[i]) || std::isnan(s.y[i])) continue;
      out << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
    }
    out << "\"/>\n";
    const double ly = oy + kTop + 14 + 14 * static_cast<double>(si);
    out << "<line x1=\"" << num(ox + kLeft + w - 120) << "\" y1=\"" << num(ly - 4) << "\" x2=\""
        << num(ox + kLeft + w - 100) << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << num(ox + kLeft + w - 96) << "\" y=\"" << num(ly) << "\" font-size=\"10\">"
        << escape(s.label) << "</text>\n";
  }
  out << "</g>\n";
}

}  // namespace

void write_svg(std::ostream& out, const std::vector<PlotPanel>& panels, int columns) {
  columns = std::max(1, std::min<int>(columns, static_cast<int>(std::max<std::size_t>(panels.size(), 1))));
  const int rows = static_cast<int>((panels.size() + static_cast<std::size_t>(columns) - 1) / static_cast<std::size_t>(columns));
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kPanelW * columns) << "\" height=\""
      << num(kPanelH * std::max(rows, 1)) << "\" font-family=\"sans-serif\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const double ox = kPanelW * static_cast<double>(i % static_cast<std::size_t>(columns));
    const double oy = kPanelH * static_cast<double>(i / static_cast<std::size_t>(columns));
    draw_panel(out, panels[i], ox, oy);
  }
  out << "</svg>\n";
}

}  // namespace nmdesc
