#pragma once

// Minimal SVG charts for the report command. The CSVs stay authoritative.

#include <filesystem>
#include <string>
#include <vector>

namespace iqnet::cli {

struct Point {
  double x = 0;
  double y = 0;
  double err = 0;  // half-height of the error bar; NaN or 0 draws none
};

struct Series {
  std::string label;
  std::vector<Point> points;
};

struct Bar {
  std::string label;
  double value = 0;
  double err = 0;
};

std::string line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<Series>& series);
std::string scatter_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                          const std::vector<Series>& series);
std::string bar_chart(const std::string& title, const std::string& ylabel, const std::vector<Bar>& bars);

void write_svg(const std::filesystem::path& path, const std::string& svg);

}  // namespace iqnet::cli
