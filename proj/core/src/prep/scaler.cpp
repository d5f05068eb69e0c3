#include "tw/prep/scaler.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "tw/error.hpp"

namespace tw::prep {

const ColumnRange* ScalerParams::find(std::string_view name) const noexcept {
  for (const auto& c : columns) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

ScalerParams fit_minmax(const TrackFrame& frame, std::span<const std::string> columns) {
  if (frame.rows() == 0) throw Error(Errc::EmptyColumn, "cannot fit a scaler on an empty frame");
  ScalerParams params;
  for (const auto& name : columns) {
    const Column& col = frame.column(name);
    if (std::any_of(col.values.begin(), col.values.end(), is_missing)) {
      throw Error(Errc::MissingValue, fmt::format("column '{}' has missing values", name));
    }
    const auto [lo, hi] = std::minmax_element(col.values.begin(), col.values.end());
    params.columns.push_back(ColumnRange{name, *lo, *hi});
  }
  return params;
}

TrackFrame apply_minmax(const TrackFrame& frame, const ScalerParams& params, ScaleDirection direction) {
  TrackFrame out = frame;
  for (const auto& range : params.columns) {
    Column* col = out.find(range.name);
    if (col == nullptr) {
      throw Error(Errc::UnknownColumn, fmt::format("scaler column '{}' not in frame", range.name));
    }
    const double span = range.max - range.min;
    for (double& v : col->values) {
      if (is_missing(v)) continue;
      if (span == 0.0) {
        v = direction == ScaleDirection::Forward ? 0.0 : range.min;
      } else if (direction == ScaleDirection::Forward) {
        v = (v - range.min) / span;
      } else {
        v = v * span + range.min;
      }
    }
  }
  return out;
}

Eigen::MatrixXd to_matrix(const TrackFrame& frame, std::span<const std::string> columns) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(frame.rows()), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const Column& col = frame.column(columns[j]);
    for (std::size_t r = 0; r < frame.rows(); ++r) {
      if (is_missing(col.values[r])) {
        throw Error(Errc::MissingValue, fmt::format("column '{}' row {} is missing", columns[j], r));
      }
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = col.values[r];
    }
  }
  return m;
}

}  // namespace tw::prep
