#include "tw/detect/event.hpp"

#include <cstdint>

#include <fmt/format.h>

#include "tw/error.hpp"

namespace tw::detect {

using nlohmann::ordered_json;

std::string_view to_string(EventStatus s) noexcept {
  switch (s) {
    case EventStatus::Pending: return "pending";
    case EventStatus::Confirmed: return "confirmed";
    case EventStatus::Rejected: return "rejected";
    case EventStatus::InfoRequested: return "info-requested";
  }
  return "pending";
}

std::optional<EventStatus> parse_status(std::string_view s) noexcept {
  if (s == "pending") return EventStatus::Pending;
  if (s == "confirmed") return EventStatus::Confirmed;
  if (s == "rejected") return EventStatus::Rejected;
  if (s == "info-requested") return EventStatus::InfoRequested;
  return std::nullopt;
}

bool can_transition(EventStatus from, EventStatus to) noexcept {
  switch (from) {
    case EventStatus::Pending: return to != EventStatus::Pending;
    case EventStatus::InfoRequested: return to == EventStatus::Confirmed || to == EventStatus::Rejected;
    default: return false;
  }
}

std::string event_id(TrackKey key, Micros timestamp, nn::ModelKind model) {
  const std::string text = fmt::format("{}|{}|{}", to_string(key), timestamp, nn::to_string(model));
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

namespace {

ordered_json opt(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::optional<double> opt_from(const ordered_json& j, const char* name) {
  if (!j.contains(name) || j[name].is_null()) return std::nullopt;
  return j[name].get<double>();
}

}  // namespace

ordered_json to_json(const AnomalyEvent& e) {
  ordered_json snap = ordered_json::object();
  for (const auto& [name, v] : e.snapshot) snap[name] = is_missing(v) ? ordered_json(nullptr) : ordered_json(v);
  return {{"id", e.id},
          {"dss", e.key.dss},
          {"scid", e.key.scid},
          {"timestamp_us", e.timestamp},
          {"timestamp", format_iso8601(e.timestamp)},
          {"window", e.window},
          {"error", e.error},
          {"threshold", e.threshold},
          {"feature", e.feature},
          {"snapshot", snap},
          {"context",
           {{"wind", opt(e.context.wind)},
            {"rain", opt(e.context.rain)},
            {"temperature", opt(e.context.temperature)},
            {"humidity", opt(e.context.humidity)}}},
          {"status", to_string(e.status)},
          {"model", nn::to_string(e.model)},
          {"severity", e.severity ? ordered_json(verify::to_string(*e.severity)) : ordered_json(nullptr)},
          {"proposed_action",
           e.proposed_action ? ordered_json(verify::to_string(*e.proposed_action)) : ordered_json(nullptr)}};
}

AnomalyEvent event_from_json(const ordered_json& j) {
  try {
    AnomalyEvent e;
    e.id = j.at("id").get<std::string>();
    e.key = {j.at("dss").get<int>(), j.at("scid").get<int>()};
    e.timestamp = j.at("timestamp_us").get<Micros>();
    e.window = j.at("window").get<std::size_t>();
    e.error = j.at("error").get<double>();
    e.threshold = j.at("threshold").get<double>();
    e.feature = j.value("feature", std::string());
    if (j.contains("snapshot")) {
      for (const auto& [name, v] : j["snapshot"].items()) e.snapshot.emplace_back(name, v.is_null() ? kMissing : v.get<double>());
    }
    if (j.contains("context")) {
      const auto& c = j["context"];
      e.context = {opt_from(c, "wind"), opt_from(c, "rain"), opt_from(c, "temperature"), opt_from(c, "humidity")};
    }
    const auto status = parse_status(j.at("status").get<std::string>());
    if (!status) throw Error(Errc::BadFormat, "unknown event status");
    e.status = *status;
    const auto model = nn::parse_model_kind(j.value("model", std::string("lstm")));
    if (!model) throw Error(Errc::BadFormat, "unknown model kind");
    e.model = *model;
    if (j.contains("severity") && !j["severity"].is_null()) e.severity = verify::parse_severity(j["severity"].get<std::string>());
    if (j.contains("proposed_action") && !j["proposed_action"].is_null()) {
      e.proposed_action = verify::parse_action(j["proposed_action"].get<std::string>());
    }
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::BadFormat, std::string("malformed anomaly event: ") + ex.what());
  }
}

}  // namespace tw::detect
