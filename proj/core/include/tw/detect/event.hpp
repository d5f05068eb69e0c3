#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tw/nn/config.hpp"
#include "tw/track/track.hpp"
#include "tw/verify/types.hpp"

namespace tw::detect {

enum class EventStatus { Pending, Confirmed, Rejected, InfoRequested };

std::string_view to_string(EventStatus s) noexcept;
std::optional<EventStatus> parse_status(std::string_view s) noexcept;

/// Allowed moves: pending -> {confirmed, rejected, info-requested} and
/// info-requested -> {confirmed, rejected}.
bool can_transition(EventStatus from, EventStatus to) noexcept;

/// Resolved events accept no more feedback.
inline bool is_open(EventStatus s) noexcept { return s == EventStatus::Pending || s == EventStatus::InfoRequested; }

struct EventContext {
  std::optional<double> wind;
  std::optional<double> rain;
  std::optional<double> temperature;
  std::optional<double> humidity;

  bool empty() const noexcept { return !wind && !rain && !temperature && !humidity; }
  bool operator==(const EventContext&) const = default;
};

struct AnomalyEvent {
  std::string id;
  TrackKey key;
  Micros timestamp = 0;
  std::size_t window = 0;
  double error = 0.0;
  double threshold = 0.0;
  /// Output feature with the largest error in the window, when known.
  std::string feature;
  /// Modeled feature values at `timestamp`, in model order.
  std::vector<std::pair<std::string, double>> snapshot;
  EventContext context;
  EventStatus status = EventStatus::Pending;
  nn::ModelKind model = nn::ModelKind::LstmRecon;
  std::optional<verify::Severity> severity;
  std::optional<verify::Action> proposed_action;

  bool operator==(const AnomalyEvent&) const = default;
};

/// 16 hex digits of the 64-bit FNV-1a hash of "dss/scid|timestamp|model".
std::string event_id(TrackKey key, Micros timestamp, nn::ModelKind model);

nlohmann::ordered_json to_json(const AnomalyEvent& e);
/// Throws Error(BadFormat).
AnomalyEvent event_from_json(const nlohmann::ordered_json& j);

}  // namespace tw::detect
