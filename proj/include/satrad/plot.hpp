#pragma once

#include <string>
#include <vector>

namespace satrad {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> y_error;  // optional, same length as y
  bool lines = false;           // connect points
  bool markers = true;
  int color = -1;               // palette index, series order when negative
  bool legend = true;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  // Optional horizontal band drawn behind the data, e.g. an agreement band.
  bool band = false;
  double band_low = 0.0;
  double band_high = 0.0;
};

// Small self-contained SVG scatter/line chart. Output depends only on the
// inputs, so plots are byte-stable across runs.
std::string render_svg(const PlotSpec& spec, const std::vector<PlotSeries>& series);

}  // namespace satrad
