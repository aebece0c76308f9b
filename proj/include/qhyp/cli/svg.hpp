#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qhyp::cli {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "black";
  bool dashed = false;
  bool steps = false;  // draw as markers instead of a line (e.g. click records)
};

struct Panel {
  std::string y_label;
  std::vector<Series> series;
  std::optional<std::pair<double, double>> y_range;
};

inline constexpr int kSvgWidth = 800;
inline constexpr int kSvgHeight = 500;

/// Fixed 800x500 canvas; panels are stacked vertically and share the x axis.
std::string render_svg(const std::string& title, const std::string& x_label, const std::vector<Panel>& panels);

}  // namespace qhyp::cli
