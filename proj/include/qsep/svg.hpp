#pragma once

#include <string>
#include <utility>
#include <vector>

namespace qsep::svg {

// Minimal static SVG renderings; the CSV tables next to them are the
// authoritative outputs.

struct WheelSection {
  std::string label;
  double boundary = 0.0;  // PPT boundary p*, drawn as the separable (gray) disc part
  std::vector<std::pair<double, int>> points;  // (p, predicted label)
};

/// Polar label plot: one angular section per state, radius = p, blue for
/// entangled and red for separable predictions.
std::string label_wheel(const std::string& title, const std::vector<WheelSection>& sections);

struct Series {
  std::string name;
  std::vector<double> values;
};

/// Line chart over categorical x positions.
std::string line_chart(const std::string& title, const std::vector<std::string>& x_labels,
                       const std::vector<Series>& series, double y_min, double y_max);

/// Grouped bar chart over categories.
std::string bar_chart(const std::string& title, const std::vector<std::string>& categories,
                      const std::vector<Series>& series, double y_min, double y_max);

}  // namespace qsep::svg
