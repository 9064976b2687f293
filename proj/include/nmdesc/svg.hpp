#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nmdesc {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotPanel {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<PlotSeries> series;
};

/// Static line charts laid out on a grid, `columns` panels per row. On a log
/// axis nonpositive values are drawn at the bottom of the axis.
void write_svg(std::ostream& out, const std::vector<PlotPanel>& panels, int columns = 2);

}  // namespace nmdesc
