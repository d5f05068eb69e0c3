#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tw/detect/event.hpp"
#include "tw/report/report.hpp"
#include "tw/verify/qlearning.hpp"

namespace tw::service {

enum class RunStatus { Running, Completed, Failed };

std::string_view to_string(RunStatus s) noexcept;
std::optional<RunStatus> parse_run_status(std::string_view s) noexcept;

struct RunRecord {
  std::string id;
  std::string dataset;
  nlohmann::ordered_json config;
  RunStatus status = RunStatus::Running;
  Micros created = 0;
  std::optional<Micros> finished;
  std::optional<std::string> decision;
  std::string error;
  std::size_t anomalies = 0;
  std::size_t reports = 0;

  bool operator==(const RunRecord&) const = default;
};

nlohmann::ordered_json to_json(const RunRecord& r);
RunRecord run_from_json(const nlohmann::ordered_json& j);

/// An anomaly as the service tracks it: the event plus every run that
/// flagged it. Event ids depend only on track, time and model, so reruns
/// over the same data find the same events.
struct EventRecord {
  detect::AnomalyEvent event;
  std::vector<std::string> runs;

  bool operator==(const EventRecord&) const = default;
};

namespace kind {
inline constexpr std::string_view kRunStarted = "run-started";
inline constexpr std::string_view kAnomalyFlagged = "anomaly-flagged";
inline constexpr std::string_view kFeedbackReceived = "feedback-received";
inline constexpr std::string_view kQTableUpdated = "qtable-updated";
inline constexpr std::string_view kReportGenerated = "report-generated";
inline constexpr std::string_view kRunFinished = "run-finished";
}  // namespace kind

struct LogEvent {
  std::uint64_t seq = 0;
  Micros instant = 0;
  std::string kind;
  nlohmann::ordered_json payload;
};

std::string to_line(const LogEvent& e);
/// Throws Error(BadFormat).
LogEvent parse_line(std::string_view line);

/// State rebuilt from the log. The live service holds the same structure
/// and mutates it only through apply_event.
struct ServiceState {
  verify::QTable qtable;
  std::map<std::string, EventRecord> events;
  std::map<std::string, RunRecord> runs;
  std::map<std::string, report::DiscrepancyReport> reports;
  std::uint64_t last_seq = 0;

  bool operator==(const ServiceState&) const = default;
};

ServiceState fresh_state(const verify::QHyper& hyper = {});

/// Reducer for one log event. Throws Error(BadFormat) when the payload is
/// malformed or refers to unknown runs or events.
void apply_event(ServiceState& state, const LogEvent& event);

/// Replays into `state`; on a bad line throws Error(CorruptLog) with the
/// expected sequence number as detail, leaving `state` as of the last good
/// line. `good_bytes`, when given, tracks the length of the applied prefix.
void replay_into(const std::filesystem::path& path, ServiceState& state, std::uint64_t* good_bytes = nullptr);

/// Missing or empty file -> fresh state.
ServiceState replay_log(const std::filesystem::path& path, const verify::QHyper& hyper = {});

nlohmann::ordered_json to_json(const ServiceState& s);

/// Append-only JSON-lines writer. Not thread-safe; callers serialize.
class EventLog {
 public:
  EventLog() = default;
  /// Opens for append; the next sequence number follows `last_seq`.
  EventLog(const std::filesystem::path& path, std::uint64_t last_seq);

  LogEvent append(std::string_view kind, nlohmann::ordered_json payload);
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::uint64_t next_seq_ = 1;
};

}  // namespace tw::service
