#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tw/detect/detect.hpp"
#include "tw/nn/config.hpp"
#include "tw/prep/iforest.hpp"
#include "tw/prep/windows.hpp"
#include "tw/report/report.hpp"
#include "tw/track/synthetic.hpp"
#include "tw/verify/qlearning.hpp"

namespace tw::agent {

/// Where a run's telemetry comes from: a canonical CSV file or a generated
/// track. Text form: a path, or "synthetic:rows=1000,spikes=5,seed=7".
struct DatasetRef {
  std::optional<std::filesystem::path> path;
  std::optional<SyntheticSpec> synthetic;

  std::string to_string() const;
  /// Throws Error(BadDataset) on an unparsable synthetic spec.
  static DatasetRef parse(std::string_view text);
};

struct WorkflowConfig {
  DatasetRef dataset;
  /// Track to model; the first track in the file when unset.
  std::optional<TrackKey> track;
  /// Modeled columns; default is every telemetry column except weather.
  std::vector<std::string> features;
  ImputePolicy impute = ImputePolicy::ForwardFillThenDropLeading;
  double train_fraction = 0.7;
  bool filter_outliers = true;
  prep::ForestConfig forest{100, 256, 0.01, 0};
  prep::WindowSpec window{6, 1, 0};
  nn::ModelConfig model;
  nn::OptimHyper hyper;
  detect::ThresholdMethod threshold = detect::ThresholdMethod::mean_k_sigma(3.0);
  verify::QHyper qhyper;
  verify::SeverityRubric rubric;
  report::ReasoningBackend backend = report::TemplateBackend{};
  /// Passes through human_feedback -> verify; 0 disables the loop.
  int feedback_loop_max = 3;
  /// Without a source the human_feedback node is skipped and events stay
  /// pending for later review.
  bool feedback_source = false;
  std::chrono::milliseconds feedback_timeout{0};
  std::uint64_t seed = 0;

  /// Throws Error(BadConfig).
  void validate() const;
};

/// Desk-scale defaults: LstmRecon, hidden 32, lr 3e-3, 40 epochs.
WorkflowConfig default_config();

nlohmann::ordered_json to_json(const WorkflowConfig& c);
/// Missing fields keep their defaults; unknown fields are ignored. Throws
/// Error(BadConfig).
WorkflowConfig config_from_json(const nlohmann::ordered_json& j, WorkflowConfig base = default_config());

struct LogLine {
  Micros instant = 0;
  std::string node;
  std::string text;
};

struct Message {
  std::string role;
  std::string text;

  bool operator==(const Message&) const = default;
};

struct FeedbackEntry {
  std::string event_id;
  verify::FeedbackSignal signal;
  verify::Severity state = verify::Severity::Low;
  verify::Action action = verify::Action::Confirm;
  detect::EventStatus status_after = detect::EventStatus::Pending;
  double q_before = 0.0;
  double q_after = 0.0;
};

/// Operator verdicts waiting to be consumed. Keys are event ids; "*"
/// answers every event that has no entry of its own. Thread-safe.
class FeedbackQueue {
 public:
  void push(std::string event_id, verify::FeedbackSignal signal);
  /// Removes and returns the entry for `event_id`, else a copy of the
  /// wildcard entry.
  std::optional<verify::FeedbackSignal> take(const std::string& event_id);
  /// Blocks up to `timeout` until the queue is non-empty.
  bool wait(std::chrono::milliseconds timeout);
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, std::vector<verify::FeedbackSignal>> entries_;
};

/// Intermediate values passed between nodes; not part of the persisted
/// state.
struct Workspace {
  TrackFrame raw;
  TrackFrame frame;
  TrackFrame scaled;
  std::vector<std::string> features;
  std::size_t train_rows = 0;
  std::vector<std::size_t> removed_rows;
  prep::WindowBatch windows;
  prep::WindowBatch train;
  prep::WindowBatch validation;
  std::shared_ptr<nn::TrainedModel> model;
  nn::ErrorSeries errors;
  double threshold = 0.0;
  std::mt19937_64 rng;
};

struct WorkflowState {
  std::size_t cursor = 0;
  std::uint64_t seed = 0;
  nlohmann::ordered_json config_snapshot;
  std::vector<detect::AnomalyEvent> anomalies;
  std::vector<LogLine> logs;
  std::vector<Message> messages;
  std::optional<std::string> decision;
  std::vector<FeedbackEntry> feedback;
  std::map<std::string, std::string> artifacts;
  std::vector<report::DiscrepancyReport> reports;
  verify::QTable qtable;
  int feedback_iterations = 0;
  bool done = false;
  bool failed = false;
  std::shared_ptr<Workspace> work = std::make_shared<Workspace>();

  void log(std::string node, std::string text);
};

struct Environment {
  WorkflowConfig config;
  /// Artifacts are written here when set.
  std::optional<std::filesystem::path> run_dir;
  std::shared_ptr<FeedbackQueue> feedback;
};

using NodeFn = std::function<void(WorkflowState&, const Environment&)>;

struct WorkflowNode {
  std::string name;
  NodeFn transform;
  bool skippable = false;
};

/// After node `from`, jump to node `to` while `when` holds.
struct ConditionalEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  std::function<bool(const WorkflowState&, const Environment&)> when;
};

struct WorkflowGraph {
  std::vector<WorkflowNode> nodes;
  std::vector<ConditionalEdge> edges;
  Environment env;

  std::vector<std::string> node_names() const;
  std::optional<std::size_t> index_of(std::string_view name) const;
};

/// Nodes ingest, preprocess, score, verify, explain, plan, human_feedback,
/// report. Throws Error(BadConfig).
WorkflowGraph build_workflow(const WorkflowConfig& config, std::optional<std::filesystem::path> run_dir = std::nullopt,
                             std::shared_ptr<FeedbackQueue> feedback = nullptr);

/// Fresh state for `config`; `qtable` defaults to an untrained table.
WorkflowState initial_state(const WorkflowConfig& config, std::optional<verify::QTable> qtable = std::nullopt);

/// Applies the node under the cursor and advances it. A throwing node ends
/// the run: a failure line is logged, the decision is cleared and `done`
/// and `failed` are set.
WorkflowState step(const WorkflowGraph& graph, WorkflowState state);

/// Steps until done. Writes state.json and logs.txt into the run directory.
WorkflowState run(const WorkflowGraph& graph, WorkflowState state);

/// Loads the telemetry frame named by the dataset reference. Throws
/// Error(BadDataset).
TrackFrame load_dataset(const DatasetRef& ref, std::optional<TrackKey> track);

/// Persisted view: everything but wall-clock instants when
/// `with_instants` is false.
nlohmann::ordered_json to_json(const WorkflowState& s, bool with_instants = true);

}  // namespace tw::agent
