#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace fact::harness {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Static SVG line chart with linear axes and min/max tick labels.
std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace fact::harness
