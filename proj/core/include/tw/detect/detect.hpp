#pragma once

#include <span>
#include <string>
#include <vector>

#include "tw/detect/event.hpp"
#include "tw/nn/train.hpp"
#include "tw/prep/windows.hpp"

namespace tw::detect {

struct ThresholdMethod {
  enum class Kind { MeanKSigma, Percentile };
  Kind kind = Kind::MeanKSigma;
  /// k for MeanKSigma, p for Percentile.
  double value = 3.0;

  static ThresholdMethod mean_k_sigma(double k = 3.0) { return {Kind::MeanKSigma, k}; }
  static ThresholdMethod percentile(double p) { return {Kind::Percentile, p}; }

  /// Throws Error(BadConfig).
  void validate() const;
};

/// MeanKSigma: mean + k * population standard deviation. Percentile: the
/// ceil(p/100 * n)-th smallest error (nearest rank). Throws
/// Error(EmptySeries).
double compute_threshold(std::span<const double> errors, const ThresholdMethod& method);

/// One pending event per error strictly above `threshold`, stamped with the
/// timestamp of the last row of its window. Non-finite thresholds flag
/// nothing.
std::vector<AnomalyEvent> flag_anomalies(std::span<const double> errors, double threshold,
                                         std::span<const prep::RowRange> index_map, const TrackFrame& frame,
                                         nn::ModelKind model = nn::ModelKind::LstmRecon);

/// As above, also naming each event's worst output feature and recording the
/// output features' values at the event row.
std::vector<AnomalyEvent> flag_anomalies(const nn::ErrorSeries& series, double threshold, const TrackFrame& frame,
                                         nn::ModelKind model);

/// Candidate column names per context field; the first one present wins.
struct ContextColumns {
  std::vector<std::string> wind{"WIND", "WIND_SPEED", "WX_WIND", "WX_WSPD"};
  std::vector<std::string> rain{"RAIN", "WX_RAIN", "PRECIP"};
  std::vector<std::string> temperature{"TEMP", "WX_TEMP"};
  std::vector<std::string> humidity{"WX_HUMID", "HUMID", "HUMIDITY"};
};

/// Fills context from the last frame row at or before the event time.
/// Missing cells and absent columns leave fields unset. Throws
/// Error(TimestampOutOfRange) when the event lies outside the frame.
AnomalyEvent attach_context(AnomalyEvent event, const TrackFrame& frame, const ContextColumns& columns = {});

}  // namespace tw::detect
