#include "tw/detect/detect.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "tw/error.hpp"

namespace tw::detect {

void ThresholdMethod::validate() const {
  if (kind == Kind::MeanKSigma && !(value > 0.0)) throw Error(Errc::BadConfig, "k must be > 0");
  if (kind == Kind::Percentile && !(value > 0.0 && value < 100.0)) {
    throw Error(Errc::BadConfig, "percentile must lie in (0, 100)");
  }
}

double compute_threshold(std::span<const double> errors, const ThresholdMethod& method) {
  method.validate();
  if (errors.empty()) throw Error(Errc::EmptySeries, "cannot threshold an empty error series");
  const auto n = static_cast<double>(errors.size());
  if (method.kind == ThresholdMethod::Kind::MeanKSigma) {
    double mean = 0.0;
    for (double e : errors) mean += e;
    mean /= n;
    double var = 0.0;
    for (double e : errors) var += (e - mean) * (e - mean);
    return mean + method.value * std::sqrt(var / n);
  }
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  auto rank = static_cast<std::size_t>(std::ceil(method.value / 100.0 * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

namespace {

AnomalyEvent make_event(std::size_t w, double error, double threshold, const prep::RowRange& range,
                        const TrackFrame& frame, nn::ModelKind model) {
  if (range.end == 0 || range.end > frame.rows()) {
    throw Error(Errc::ShapeMismatch, fmt::format("window {} maps past the frame ({} rows)", w, frame.rows()));
  }
  AnomalyEvent e;
  e.key = frame.key;
  e.timestamp = frame.timestamps[range.end - 1];
  e.window = w;
  e.error = error;
  e.threshold = threshold;
  e.model = model;
  e.id = event_id(e.key, e.timestamp, model);
  return e;
}

}  // namespace

std::vector<AnomalyEvent> flag_anomalies(std::span<const double> errors, double threshold,
                                         std::span<const prep::RowRange> index_map, const TrackFrame& frame,
                                         nn::ModelKind model) {
  if (errors.size() != index_map.size()) {
    throw Error(Errc::ShapeMismatch, fmt::format("{} errors for {} windows", errors.size(), index_map.size()));
  }
  std::vector<AnomalyEvent> out;
  if (!std::isfinite(threshold)) return out;
  const auto names = modeling_columns(frame);
  for (std::size_t w = 0; w < errors.size(); ++w) {
    if (!(errors[w] > threshold)) continue;
    auto e = make_event(w, errors[w], threshold, index_map[w], frame, model);
    for (const auto& name : names) e.snapshot.emplace_back(name, frame.column(name).values[index_map[w].end - 1]);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<AnomalyEvent> flag_anomalies(const nn::ErrorSeries& series, double threshold, const TrackFrame& frame,
                                         nn::ModelKind model) {
  if (series.errors.size() != series.index_map.size()) {
    throw Error(Errc::ShapeMismatch, "error series and index map differ in length");
  }
  std::vector<AnomalyEvent> out;
  if (!std::isfinite(threshold)) return out;
  for (std::size_t w = 0; w < series.errors.size(); ++w) {
    if (!(series.errors[w] > threshold)) continue;
    auto e = make_event(w, series.errors[w], threshold, series.index_map[w], frame, model);
    const auto row = static_cast<Eigen::Index>(w);
    if (series.per_feature.rows() > row && series.per_feature.cols() > 0) {
      Eigen::Index arg = 0;
      series.per_feature.row(row).maxCoeff(&arg);
      e.feature = series.output_features.at(static_cast<std::size_t>(arg));
    }
    for (const auto& name : series.output_features) {
      const auto* col = frame.find(name);
      e.snapshot.emplace_back(name, col != nullptr ? col->values[series.index_map[w].end - 1] : kMissing);
    }
    out.push_back(std::move(e));
  }
  return out;
}

AnomalyEvent attach_context(AnomalyEvent event, const TrackFrame& frame, const ContextColumns& columns) {
  if (frame.empty() || event.timestamp < frame.timestamps.front() || event.timestamp > frame.timestamps.back()) {
    throw Error(Errc::TimestampOutOfRange,
                fmt::format("event at {} lies outside the frame", format_iso8601(event.timestamp)));
  }
  const auto it = std::upper_bound(frame.timestamps.begin(), frame.timestamps.end(), event.timestamp);
  const auto row = static_cast<std::size_t>(it - frame.timestamps.begin()) - 1;
  auto pick = [&](const std::vector<std::string>& names) -> std::optional<double> {
    for (const auto& n : names) {
      if (const auto* c = frame.find(n)) {
        const double v = c->values[row];
        return is_missing(v) ? std::nullopt : std::optional<double>(v);
      }
    }
    return std::nullopt;
  };
  event.context = {pick(columns.wind), pick(columns.rain), pick(columns.temperature), pick(columns.humidity)};
  return event;
}

}  // namespace tw::detect
