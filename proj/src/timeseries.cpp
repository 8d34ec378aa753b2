// SPDX-License-Identifier: Apache-2.0
#include "lsfem/timeseries.hpp"

#include <algorithm>

#include "lsfem/errors.hpp"

namespace lsfem {

void TimeSeries::append(const std::vector<double>& row) {
  if (row.size() != columns.size()) throw ValidationError("TimeSeries: row width mismatch");
  if (!rows.empty() && !(row[0] > rows.back()[0]))
    throw ValidationError("TimeSeries: time must be strictly increasing");
  rows.push_back(row);
}

int TimeSeries::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<double> TimeSeries::column(const std::string& name) const {
  const int idx = column_index(name);
  if (idx < 0) throw ValidationError("TimeSeries: unknown column '" + name + "'");
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[idx]);
  return out;
}

SeriesExtrema extract_extrema(const TimeSeries& series, int n_velocity_maxima) {
  if (series.rows.empty()) throw ValidationError("extract_extrema: empty series");
  const auto t = series.column("t");
  const auto c = series.column("circularity");
  const auto u = series.column("u_c");
  const auto y = series.column("y_c");

  SeriesExtrema out;
  out.c_min = c[0];
  out.t_c_min = t[0];
  for (std::size_t i = 1; i < c.size(); ++i)
    if (c[i] < out.c_min) {
      out.c_min = c[i];
      out.t_c_min = t[i];
    }
  out.y_c_final = y.back();

  std::vector<SeriesPeak> peaks;
  for (std::size_t i = 1; i + 1 < u.size(); ++i)
    if (u[i] >= u[i - 1] && u[i] > u[i + 1]) peaks.push_back({t[i], u[i]});
  std::sort(peaks.begin(), peaks.end(),
            [](const SeriesPeak& a, const SeriesPeak& b) { return a.value > b.value; });
  if (static_cast<int>(peaks.size()) > n_velocity_maxima) peaks.resize(n_velocity_maxima);
  out.fewer_maxima_than_requested = static_cast<int>(peaks.size()) < n_velocity_maxima;
  std::sort(peaks.begin(), peaks.end(),
            [](const SeriesPeak& a, const SeriesPeak& b) { return a.t < b.t; });
  out.velocity_maxima = std::move(peaks);
  return out;
}

}  // namespace lsfem
