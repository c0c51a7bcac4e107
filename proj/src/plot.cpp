#include "satrad/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace satrad {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                               "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

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

std::string tick_label(double v) {
  if (v == 0.0) return "0";
  const double a = std::fabs(v);
  if (a >= 1e5 || a < 1e-3) return fmt("%.1e", v);
  return fmt("%.4g", v);
}

// Roughly five "nice" ticks spanning [lo, hi].
std::vector<double> linear_ticks(double lo, double hi) {
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) {
    ticks.push_back(std::fabs(t) < 1e-12 * step ? 0.0 : t);
  }
  return ticks;
}

}  // namespace

std::string render_svg(const PlotSpec& spec, const std::vector<PlotSeries>& series) {
  double x_lo = std::numeric_limits<double>::infinity();
  double x_hi = -x_lo;
  double y_lo = x_lo;
  double y_hi = -x_lo;
  auto usable = [&](double y) { return std::isfinite(y) && (!spec.log_y || y > 0.0); };
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !usable(s.y[i])) continue;
      const double e = i < s.y_error.size() ? s.y_error[i] : 0.0;
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min(y_lo, usable(s.y[i] - e) ? s.y[i] - e : s.y[i]);
      y_hi = std::max(y_hi, s.y[i] + e);
    }
  }
  if (spec.band) {
    y_lo = std::min(y_lo, spec.band_low);
    y_hi = std::max(y_hi, spec.band_high);
  }
  if (!std::isfinite(x_lo)) {
    x_lo = 0.0;
    x_hi = 1.0;
  }
  if (!std::isfinite(y_lo)) {
    y_lo = spec.log_y ? 1.0 : 0.0;
    y_hi = spec.log_y ? 10.0 : 1.0;
  }
  if (x_hi == x_lo) {
    x_lo -= 0.5;
    x_hi += 0.5;
  }
  if (spec.log_y) {
    y_lo = std::pow(10.0, std::floor(std::log10(y_lo)));
    y_hi = std::pow(10.0, std::ceil(std::log10(y_hi)));
    if (y_hi == y_lo) y_hi *= 10.0;
  } else {
    if (y_hi == y_lo) {
      y_lo -= 0.5;
      y_hi += 0.5;
    }
    const double pad = 0.05 * (y_hi - y_lo);
    y_lo -= pad;
    y_hi += pad;
  }
  const double pad_x = 0.03 * (x_hi - x_lo);
  x_lo -= pad_x;
  x_hi += pad_x;

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double y) {
    const double f = spec.log_y ? (std::log10(y) - std::log10(y_lo)) /
                                      (std::log10(y_hi) - std::log10(y_lo))
                                : (y - y_lo) / (y_hi - y_lo);
    return kTop + (1.0 - f) * ph;
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt("%.0f", kWidth) +
         "\" height=\"" + fmt("%.0f", kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt("%.1f", kLeft + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
         escape(spec.title) + "</text>\n";

  if (spec.band) {
    const double top = py(std::min(spec.band_high, y_hi));
    const double bottom = py(std::max(spec.band_low, y_lo));
    svg += "<rect x=\"" + fmt("%.2f", kLeft) + "\" y=\"" + fmt("%.2f", top) + "\" width=\"" +
           fmt("%.2f", pw) + "\" height=\"" + fmt("%.2f", bottom - top) +
           "\" fill=\"#dddddd\"/>\n";
  }

  // axes and ticks
  svg += "<rect x=\"" + fmt("%.2f", kLeft) + "\" y=\"" + fmt("%.2f", kTop) + "\" width=\"" +
         fmt("%.2f", pw) + "\" height=\"" + fmt("%.2f", ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : linear_ticks(x_lo, x_hi)) {
    const double x = px(t);
    svg += "<line x1=\"" + fmt("%.2f", x) + "\" y1=\"" + fmt("%.2f", kTop + ph) + "\" x2=\"" +
           fmt("%.2f", x) + "\" y2=\"" + fmt("%.2f", kTop + ph + 5) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fmt("%.2f", x) + "\" y=\"" + fmt("%.2f", kTop + ph + 18) +
           "\" text-anchor=\"middle\">" + tick_label(t) + "</text>\n";
  }
  std::vector<double> yticks;
  if (spec.log_y) {
    for (double t = y_lo; t <= y_hi * 1.0000001; t *= 10.0) yticks.push_back(t);
  } else {
    yticks = linear_ticks(y_lo, y_hi);
  }
  for (double t : yticks) {
    const double y = py(t);
    svg += "<line x1=\"" + fmt("%.2f", kLeft - 5) + "\" y1=\"" + fmt("%.2f", y) + "\" x2=\"" +
           fmt("%.2f", kLeft) + "\" y2=\"" + fmt("%.2f", y) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fmt("%.2f", kLeft - 8) + "\" y=\"" + fmt("%.2f", y + 4) +
           "\" text-anchor=\"end\">" + tick_label(t) + "</text>\n";
  }
  svg += "<text x=\"" + fmt("%.1f", kLeft + pw / 2) + "\" y=\"" + fmt("%.1f", kHeight - 15) +
         "\" text-anchor=\"middle\">" + escape(spec.x_label) + "</text>\n";
  svg += "<text transform=\"translate(18," + fmt("%.1f", kTop + ph / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">" + escape(spec.y_label) + "</text>\n";

  std::size_t entry = 0;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const std::size_t slot = s.color >= 0 ? static_cast<std::size_t>(s.color) : k;
    const char* color = kColors[slot % (sizeof kColors / sizeof kColors[0])];
    std::string path;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !usable(s.y[i])) continue;
      const double x = px(s.x[i]);
      const double y = py(s.y[i]);
      if (s.lines) path += (path.empty() ? "M" : " L") + fmt("%.2f", x) + "," + fmt("%.2f", y);
      if (i < s.y_error.size() && s.y_error[i] > 0.0) {
        const double lo = usable(s.y[i] - s.y_error[i]) ? s.y[i] - s.y_error[i] : s.y[i];
        svg += "<line x1=\"" + fmt("%.2f", x) + "\" y1=\"" + fmt("%.2f", py(lo)) + "\" x2=\"" +
               fmt("%.2f", x) + "\" y2=\"" + fmt("%.2f", py(s.y[i] + s.y_error[i])) +
               "\" stroke=\"" + color + "\"/>\n";
      }
      if (s.markers) {
        svg += "<circle cx=\"" + fmt("%.2f", x) + "\" cy=\"" + fmt("%.2f", y) + "\" r=\"2.5\" fill=\"" +
               color + "\"/>\n";
      }
    }
    if (!path.empty()) {
      svg += "<path d=\"" + path + "\" fill=\"none\" stroke=\"" + color + "\"/>\n";
    }
    if (!s.legend) continue;
    const double ly = kTop + 10 + 18.0 * static_cast<double>(entry++);
    svg += "<circle cx=\"" + fmt("%.1f", kWidth - kRight + 15) + "\" cy=\"" + fmt("%.1f", ly) +
           "\" r=\"4\" fill=\"" + color + "\"/>\n";
    svg += "<text x=\"" + fmt("%.1f", kWidth - kRight + 25) + "\" y=\"" + fmt("%.1f", ly + 4) +
           "\">" + escape(s.label) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace satrad
