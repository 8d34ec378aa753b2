// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace lsfem {

// Named-column table of diagnostics sampled along a run; the first column is
// time and must be strictly increasing.
struct TimeSeries {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  explicit TimeSeries(std::vector<std::string> cols = {}) : columns(std::move(cols)) {}

  void append(const std::vector<double>& row);
  int column_index(const std::string& name) const;  // -1 if absent
  std::vector<double> column(const std::string& name) const;
  int size() const { return static_cast<int>(rows.size()); }
};

struct SeriesPeak {
  double t = 0.0;
  double value = 0.0;
};

// Benchmark summary: global circularity minimum, the n largest local maxima of
// the rise velocity in time order, and the final center height.
struct SeriesExtrema {
  double c_min = 0.0;
  double t_c_min = 0.0;
  std::vector<SeriesPeak> velocity_maxima;
  double y_c_final = 0.0;
  bool fewer_maxima_than_requested = false;
};

SeriesExtrema extract_extrema(const TimeSeries& series, int n_velocity_maxima);

}  // namespace lsfem
