#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sgcl/dense_matrix.hpp"

namespace sgcl::cli {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  bool log_y = false;
};

std::string render_svg(const LineChart& chart);

// Diverging blue-white-red colouring over [lo, hi].
std::string render_heatmap_svg(const DenseMatrix& m, const std::string& title, double lo, double hi);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace sgcl::cli
