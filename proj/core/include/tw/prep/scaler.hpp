#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tw/track/track.hpp"

namespace tw::prep {

struct ColumnRange {
  std::string name;
  double min = 0.0;
  double max = 0.0;

  bool operator==(const ColumnRange&) const = default;
};

/// Per-column observed range, in fit order.
struct ScalerParams {
  std::vector<ColumnRange> columns;

  const ColumnRange* find(std::string_view name) const noexcept;
  bool operator==(const ScalerParams&) const = default;
};

/// Throws Error(EmptyColumn) on a zero-row frame, Error(UnknownColumn), or
/// Error(MissingValue) when a column still holds missing markers.
ScalerParams fit_minmax(const TrackFrame& frame, std::span<const std::string> columns);

enum class ScaleDirection { Forward, Inverse };

/// Forward maps x to (x - min) / (max - min); a constant column (max == min)
/// maps to 0.0 and its inverse returns min. Columns not named in `params`
/// pass through. Missing markers stay missing. Throws Error(UnknownColumn)
/// when a fitted column is absent from `frame`.
TrackFrame apply_minmax(const TrackFrame& frame, const ScalerParams& params, ScaleDirection direction);

/// rows x columns matrix of the named columns. Throws Error(UnknownColumn)
/// or Error(MissingValue).
Eigen::MatrixXd to_matrix(const TrackFrame& frame, std::span<const std::string> columns);

}  // namespace tw::prep
