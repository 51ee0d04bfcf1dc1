#pragma once

#include <string>
#include <vector>

namespace vbma::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  bool diagonal = false;  ///< Draw y = x (coverage plots).
};

/// Static 640x420 line chart.
std::string render(const Plot& plot);

}  // namespace vbma::svg
