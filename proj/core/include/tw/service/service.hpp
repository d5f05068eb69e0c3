#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "tw/agent/workflow.hpp"
#include "tw/service/event_log.hpp"

namespace tw::service {

/// 26-character Crockford base32 ids: 48-bit millisecond time then 80
/// random bits, incremented within one millisecond so ids sort by creation.
class RunIdGenerator {
 public:
  RunIdGenerator();
  std::string next(Micros now);

 private:
  std::mutex mu_;
  std::mt19937_64 rng_;
  std::uint64_t last_ms_ = 0;
  std::uint64_t hi_ = 0;  ///< top 16 random bits
  std::uint64_t lo_ = 0;  ///< low 64 random bits
};

struct ServiceOptions {
  std::filesystem::path data_dir;
  verify::QHyper qhyper;
  /// Base workflow configuration; requests override fields of it.
  agent::WorkflowConfig base_config = agent::default_config();
  /// false runs workflows on the calling thread (CLI use).
  bool background = true;
};

/// Data root: TW_DATA_DIR when set, else "./tw-data".
std::filesystem::path default_data_dir();

struct FeedbackResult {
  std::string event_id;
  detect::EventStatus status_before = detect::EventStatus::Pending;
  detect::EventStatus status = detect::EventStatus::Pending;
  verify::Severity state = verify::Severity::Low;
  verify::Action action = verify::Action::Confirm;
  double reward = 0.0;
  double q_before = 0.0;
  double q_after = 0.0;
  double epsilon = 0.0;
  /// Action proposed for the next review when more information was asked.
  std::optional<verify::Action> next_action;
  bool report_generated = false;

  double delta() const noexcept { return q_after - q_before; }
};

nlohmann::ordered_json to_json(const FeedbackResult& r);

class Service {
 public:
  /// Replays `data_dir/events.jsonl`. A torn final line is cut off with a
  /// warning; corruption before the tail throws Error(CorruptLog). Runs
  /// left running by a previous process are marked failed.
  explicit Service(ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// `dataset` is a path (relative to the data root or absolute) or a
  /// "synthetic:..." spec. Throws Error(BadDataset) or Error(BadConfig).
  std::string start_run(const std::string& dataset, const nlohmann::ordered_json& config = nlohmann::ordered_json::object());
  void wait(const std::string& run_id);
  void wait_all();

  /// Throws Error(UnknownRun).
  RunRecord run(const std::string& run_id) const;
  std::vector<RunRecord> runs() const;

  /// Pending and info-requested events sorted by timestamp, optionally for
  /// one run. Throws Error(UnknownRun).
  std::vector<detect::AnomalyEvent> list_pending(const std::optional<std::string>& run_id = std::nullopt) const;
  std::vector<detect::AnomalyEvent> list_anomalies(const std::optional<detect::EventStatus>& status,
                                                   const std::optional<std::string>& run_id = std::nullopt) const;
  /// Throws Error(UnknownEvent).
  detect::AnomalyEvent event(const std::string& event_id) const;

  /// Throws Error(UnknownEvent) or Error(AlreadyResolved).
  FeedbackResult submit_feedback(const std::string& event_id, const verify::FeedbackSignal& signal);

  /// Throws Error(UnknownEvent) when no report exists.
  report::DiscrepancyReport report(const std::string& event_id) const;
  std::vector<std::string> report_ids() const;

  /// Error series written by the run, optionally checked against a track.
  /// Throws Error(UnknownRun).
  nlohmann::ordered_json error_series(const std::string& run_id, const std::optional<TrackKey>& track = std::nullopt) const;

  verify::QTable qtable() const;
  ServiceState state() const;
  std::filesystem::path log_path() const;
  const std::filesystem::path& data_dir() const noexcept { return options_.data_dir; }

 private:
  LogEvent append(std::string_view kind, nlohmann::ordered_json payload);
  void execute_run(const std::string& run_id, const agent::WorkflowConfig& config);
  void write_snapshot();
  agent::WorkflowConfig run_config(const std::string& run_id) const;

  ServiceOptions options_;
  mutable std::mutex mu_;
  ServiceState state_;
  EventLog log_;
  RunIdGenerator ids_;
  std::mutex threads_mu_;
  std::map<std::string, std::thread> threads_;
};

struct HttpOptions {
  std::string host = "127.0.0.1";
  /// 0 binds an ephemeral port.
  int port = 8080;
  std::optional<std::filesystem::path> static_dir;
};

/// JSON API over a Service. Errors map to 400 (bad input), 404 (unknown
/// run, event or report), 409 (already resolved) and 500.
class HttpServer {
 public:
  HttpServer(Service& service, HttpOptions options);
  ~HttpServer();

  /// Binds and serves on a background thread; returns the bound port.
  /// Throws Error(IoError) when binding fails.
  int start();
  /// Binds and serves on the calling thread until stop().
  void listen();
  void stop();
  int port() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tw::service
