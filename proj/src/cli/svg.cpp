#include "qhyp/cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace qhyp::cli {

namespace {

constexpr double kLeft = 70.0;
constexpr double kRight = 130.0;  // legend column
constexpr double kTop = 40.0;
constexpr double kBottom = 45.0;
constexpr double kGap = 25.0;
constexpr std::size_t kMaxPoints = 2000;

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string tick(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
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

std::pair<double, double> padded(double lo, double hi) {
  if (!(lo < hi)) {
    lo -= 0.5;
    hi += 0.5;
  }
  return {lo, hi};
}

}  // namespace

std::string render_svg(const std::string& title, const std::string& x_label, const std::vector<Panel>& panels) {
  double x_lo = std::numeric_limits<double>::infinity();
  double x_hi = -x_lo;
  for (const auto& p : panels)
    for (const auto& s : p.series)
      for (double x : s.x)
        if (std::isfinite(x)) {
          x_lo = std::min(x_lo, x);
          x_hi = std::max(x_hi, x);
        }
  if (!std::isfinite(x_lo)) {
    x_lo = 0.0;
    x_hi = 1.0;
  }
  std::tie(x_lo, x_hi) = padded(x_lo, x_hi);

  const double plot_w = kSvgWidth - kLeft - kRight;
  const std::size_t n = std::max<std::size_t>(panels.size(), 1);
  const double panel_h = (kSvgHeight - kTop - kBottom - kGap * static_cast<double>(n - 1)) / static_cast<double>(n);

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSvgWidth << "\" height=\"" << kSvgHeight
      << "\" viewBox=\"0 0 " << kSvgWidth << ' ' << kSvgHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kSvgWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
      << "</text>\n";

  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    const Panel& panel = panels[pi];
    const double top = kTop + static_cast<double>(pi) * (panel_h + kGap);

    double y_lo, y_hi;
    if (panel.y_range) {
      std::tie(y_lo, y_hi) = *panel.y_range;
    } else {
      y_lo = std::numeric_limits<double>::infinity();
      y_hi = -y_lo;
      for (const auto& s : panel.series)
        for (double y : s.y)
          if (std::isfinite(y)) {
            y_lo = std::min(y_lo, y);
            y_hi = std::max(y_hi, y);
          }
      if (!std::isfinite(y_lo)) {
        y_lo = 0.0;
        y_hi = 1.0;
      }
    }
    std::tie(y_lo, y_hi) = padded(y_lo, y_hi);

    auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * plot_w; };
    auto py = [&](double y) { return top + panel_h - (y - y_lo) / (y_hi - y_lo) * panel_h; };

    svg << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(top) << "\" width=\"" << num(plot_w) << "\" height=\""
        << num(panel_h) << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int k = 0; k <= 4; ++k) {
      const double y = y_lo + (y_hi - y_lo) * k / 4.0;
      svg << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">" << tick(y)
          << "</text>\n";
    }
    svg << "<text transform=\"translate(" << num(16) << ',' << num(top + panel_h / 2)
        << ") rotate(-90)\" text-anchor=\"middle\">" << escape(panel.y_label) << "</text>\n";
    if (pi + 1 == panels.size()) {
      for (int k = 0; k <= 5; ++k) {
        const double x = x_lo + (x_hi - x_lo) * k / 5.0;
        svg << "<text x=\"" << num(px(x)) << "\" y=\"" << num(top + panel_h + 16) << "\" text-anchor=\"middle\">"
            << tick(x) << "</text>\n";
      }
      svg << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << num(kSvgHeight - 8)
          << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
    }

    for (std::size_t si = 0; si < panel.series.size(); ++si) {
      const Series& s = panel.series[si];
      const std::size_t count = std::min(s.x.size(), s.y.size());
      const std::size_t stride = std::max<std::size_t>(1, (count + kMaxPoints - 1) / kMaxPoints);
      if (s.steps) {
        for (std::size_t i = 0; i < count; ++i)
          if (s.y[i] != 0.0 && std::isfinite(s.y[i]))
            svg << "<line x1=\"" << num(px(s.x[i])) << "\" y1=\"" << num(py(0.0)) << "\" x2=\"" << num(px(s.x[i]))
                << "\" y2=\"" << num(py(s.y[i])) << "\" stroke=\"" << s.color << "\"/>\n";
      } else {
        svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
        if (s.dashed) svg << " stroke-dasharray=\"6 4\"";
        svg << " points=\"";
        for (std::size_t i = 0; i < count; i += stride)
          if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) svg << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
        if (count > 0 && (count - 1) % stride != 0 && std::isfinite(s.y[count - 1]))
          svg << num(px(s.x[count - 1])) << ',' << num(py(s.y[count - 1]));
        svg << "\"/>\n";
      }
      const double ly = top + 14 + 16 * static_cast<double>(si);
      const double lx = kLeft + plot_w + 10;
      svg << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(lx + 20) << "\" y2=\""
          << num(ly - 4) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"";
      if (s.dashed) svg << " stroke-dasharray=\"6 4\"";
      svg << "/>\n<text x=\"" << num(lx + 26) << "\" y=\"" << num(ly) << "\">" << escape(s.label) << "</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace qhyp::cli
