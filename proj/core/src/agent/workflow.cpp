#include "tw/agent/workflow.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tw/error.hpp"
#include "tw/nn/train.hpp"
#include "tw/prep/scaler.hpp"
#include "tw/prep/serialize.hpp"
#include "tw/track/canonical_csv.hpp"

namespace tw::agent {

using nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kVerifyStream = 0x5645524946590001ULL;

Micros now_micros() {
  return std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

bool is_context_column(const std::string& name) {
  static const detect::ContextColumns cc;
  for (const auto* list : {&cc.wind, &cc.rain, &cc.temperature, &cc.humidity}) {
    if (std::find(list->begin(), list->end(), name) != list->end()) return true;
  }
  return false;
}

void write_json(const std::filesystem::path& path, const ordered_json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

// ---- nodes ----------------------------------------------------------------

void node_ingest(WorkflowState& s, const Environment& env) {
  auto& w = *s.work;
  w.raw = load_dataset(env.config.dataset, env.config.track);
  s.artifacts["dataset"] = env.config.dataset.to_string();
  s.log("ingest", fmt::format("loaded {} rows x {} columns for DSS-{}/SCID {}", w.raw.rows(), w.raw.columns.size(),
                              w.raw.key.dss, w.raw.key.scid));
}

void node_preprocess(WorkflowState& s, const Environment& env) {
  const auto& cfg = env.config;
  auto& w = *s.work;
  w.features = cfg.features;
  if (w.features.empty()) {
    for (const auto& name : modeling_columns(w.raw)) {
      if (!is_context_column(name)) w.features.push_back(name);
    }
  }
  if (w.features.empty()) throw Error(Errc::BadDataset, "no telemetry columns to model");
  for (const auto& f : w.features) (void)w.raw.column(f);

  w.frame = impute_missing(w.raw, cfg.impute);
  const std::size_t n = w.frame.rows();
  const std::size_t L = static_cast<std::size_t>(cfg.window.length);
  if (n < L + 2) throw Error(Errc::TooFewWindows, fmt::format("{} rows after imputation; need at least {}", n, L + 2));
  w.train_rows = std::clamp<std::size_t>(static_cast<std::size_t>(cfg.train_fraction * static_cast<double>(n)), L + 1, n - 1);

  std::vector<std::size_t> train_idx(w.train_rows);
  for (std::size_t i = 0; i < w.train_rows; ++i) train_idx[i] = i;
  const TrackFrame train_frame = w.frame.take_rows(train_idx);
  const prep::ScalerParams scaler = prep::fit_minmax(train_frame, w.features);
  w.scaled = prep::apply_minmax(w.frame, scaler, prep::ScaleDirection::Forward);

  w.removed_rows.clear();
  if (cfg.filter_outliers) {
    std::vector<std::size_t> train_rows_idx(w.train_rows);
    for (std::size_t i = 0; i < w.train_rows; ++i) train_rows_idx[i] = i;
    const Eigen::MatrixXd X = prep::to_matrix(w.scaled.take_rows(train_rows_idx), w.features);
    prep::ForestConfig fc = cfg.forest;
    fc.seed = s.seed;
    const auto forest = prep::fit_isolation_forest(X, fc);
    const auto scores = prep::iforest_scores(forest, X);
    w.removed_rows = prep::top_outliers(scores, fc.contamination);
    std::sort(w.removed_rows.begin(), w.removed_rows.end());
  }

  w.windows = prep::make_windows(w.scaled, w.features, cfg.window);
  std::vector<std::size_t> train_w, val_w;
  for (std::size_t i = 0; i < w.windows.size(); ++i) {
    const auto r = w.windows.index_map[i];
    if (r.end <= w.train_rows) {
      const auto it = std::lower_bound(w.removed_rows.begin(), w.removed_rows.end(), r.begin);
      if (it == w.removed_rows.end() || *it >= r.end) train_w.push_back(i);
    } else if (r.begin >= w.train_rows) {
      val_w.push_back(i);
    }
  }
  if (train_w.empty() || val_w.empty()) throw Error(Errc::TooFewWindows, "train or validation split has no windows");
  w.train = prep::select(w.windows, train_w);
  w.validation = prep::select(w.windows, val_w);

  if (env.run_dir) {
    const auto dir = *env.run_dir / "checkpoints";
    std::filesystem::create_directories(dir);
    write_json(dir / "prep.json", prep::to_json(prep::PrepDocument{scaler, std::nullopt}));
    s.artifacts["prep"] = (dir / "prep.json").string();
  }
  s.log("preprocess", fmt::format("features [{}]; {} train rows; {} outlier rows removed; {} windows ({} train, {} validation)",
                                  fmt::join(w.features, ", "), w.train_rows, w.removed_rows.size(), w.windows.size(),
                                  w.train.size(), w.validation.size()));
}

void node_score(WorkflowState& s, const Environment& env) {
  const auto& cfg = env.config;
  auto& w = *s.work;
  nn::ModelConfig mc = cfg.model;
  mc.input_size = static_cast<int>(w.features.size());
  mc.output_size = static_cast<int>(w.features.size());
  mc.output_features.clear();
  mc.seq_len = cfg.window.length;
  mc.seed = s.seed;
  w.model = std::make_shared<nn::TrainedModel>(nn::train(mc, cfg.hyper, w.train, w.validation));
  w.errors = nn::reconstruct_errors(*w.model, w.windows);
  w.threshold = detect::compute_threshold(w.errors.errors, cfg.threshold);

  auto events = detect::flag_anomalies(w.errors, w.threshold, w.frame, mc.kind);
  for (auto& e : events) e = detect::attach_context(std::move(e), w.frame);
  s.anomalies = std::move(events);

  if (env.run_dir) {
    const auto dir = *env.run_dir / "checkpoints";
    std::filesystem::create_directories(dir);
    nn::save_checkpoint(*w.model, dir / "model.json");
    s.artifacts["checkpoint"] = (dir / "model.json").string();
    ordered_json series{{"dss", w.frame.key.dss},
                        {"scid", w.frame.key.scid},
                        {"model", nn::to_string(mc.kind)},
                        {"threshold", w.threshold},
                        {"errors", w.errors.errors},
                        {"timestamps_us", ordered_json::array()},
                        {"flagged", ordered_json::array()}};
    for (std::size_t i = 0; i < w.errors.errors.size(); ++i) {
      series["timestamps_us"].push_back(w.frame.timestamps[w.errors.index_map[i].end - 1]);
      if (w.errors.errors[i] > w.threshold) series["flagged"].push_back(i);
    }
    write_json(*env.run_dir / "errors.json", series);
    s.artifacts["errors"] = (*env.run_dir / "errors.json").string();
  }
  const auto& h = w.model->history;
  s.log("score", fmt::format("{} trained {} epochs (val loss {:.6g} -> {:.6g}); threshold {:.6g}; {} anomalies",
                             nn::to_string(mc.kind), h.size(), h.empty() ? 0.0 : h.front().validation,
                             h.empty() ? 0.0 : h.back().validation, w.threshold, s.anomalies.size()));
}

void node_verify(WorkflowState& s, const Environment& env) {
  auto& w = *s.work;
  std::size_t chosen = 0;
  for (auto& e : s.anomalies) {
    if (!detect::is_open(e.status)) continue;
    if (!e.severity) e.severity = verify::severity_of(e, env.config.rubric);
    const bool rechoose = e.status == detect::EventStatus::InfoRequested && e.proposed_action == verify::Action::RequestInfo;
    if (e.proposed_action && !rechoose) continue;
    e.proposed_action = verify::choose_action(s.qtable, *e.severity, w.rng, !rechoose);
    ++chosen;
  }
  s.log("verify", fmt::format("{} actions chosen; epsilon {:.4g}", chosen, s.qtable.epsilon));
}

void node_explain(WorkflowState& s, const Environment&) {
  std::string text;
  if (s.anomalies.empty()) {
    text = "No window exceeded the anomaly threshold.";
  } else {
    for (const auto& e : s.anomalies) {
      if (!text.empty()) text += "\n";
      text += fmt::format("{}: error {:.6g} vs threshold {:.6g} ({:.2f}x){}, severity {}, proposed {}", e.id, e.error,
                          e.threshold, e.threshold > 0 ? e.error / e.threshold : 0.0,
                          e.feature.empty() ? std::string() : " on " + e.feature,
                          e.severity ? verify::to_string(*e.severity) : "unrated",
                          e.proposed_action ? verify::to_string(*e.proposed_action) : "none");
    }
  }
  s.messages.push_back({"assistant", text});
  s.log("explain", fmt::format("explained {} anomalies", s.anomalies.size()));
}

std::string summarize(const WorkflowState& s) {
  if (s.anomalies.empty()) return "no anomalies detected";
  std::size_t confirmed = 0, rejected = 0, open = 0;
  std::array<std::size_t, verify::kActions> proposed{};
  for (const auto& e : s.anomalies) {
    if (e.status == detect::EventStatus::Confirmed) ++confirmed;
    else if (e.status == detect::EventStatus::Rejected) ++rejected;
    else ++open;
    if (e.proposed_action) ++proposed[static_cast<std::size_t>(*e.proposed_action)];
  }
  return fmt::format("{} anomalies: {} confirmed, {} rejected, {} open; proposed {} confirm, {} reject, {} request-info",
                     s.anomalies.size(), confirmed, rejected, open, proposed[0], proposed[1], proposed[2]);
}

void node_plan(WorkflowState& s, const Environment&) {
  s.decision = summarize(s);
  s.log("plan", "decision: " + *s.decision);
}

void node_feedback(WorkflowState& s, const Environment& env) {
  if (!env.config.feedback_source || !env.feedback) {
    s.log("human_feedback", "skipped: no feedback source");
    return;
  }
  ++s.feedback_iterations;
  if (env.config.feedback_timeout.count() > 0) env.feedback->wait(env.config.feedback_timeout);
  std::size_t applied = 0;
  for (auto& e : s.anomalies) {
    if (!detect::is_open(e.status) || !e.severity || !e.proposed_action) continue;
    const auto signal = env.feedback->take(e.id);
    if (!signal) continue;
    FeedbackEntry fe;
    fe.event_id = e.id;
    fe.signal = *signal;
    fe.state = *e.severity;
    fe.action = *e.proposed_action;
    fe.q_before = s.qtable.at(fe.state, fe.action);
    s.qtable = verify::apply_feedback(s.qtable, fe.state, fe.action, signal->verdict, env.config.qhyper);
    fe.q_after = s.qtable.at(fe.state, fe.action);
    fe.status_after = verify::status_after(fe.action, signal->verdict);
    e.status = fe.status_after;
    s.feedback.push_back(std::move(fe));
    ++applied;
  }
  s.log("human_feedback", fmt::format("pass {}: applied {} verdicts", s.feedback_iterations, applied));
}

void node_report(WorkflowState& s, const Environment& env) {
  s.reports.clear();
  for (const auto& e : s.anomalies) {
    const bool wanted = e.status == detect::EventStatus::Confirmed ||
                        (detect::is_open(e.status) && e.proposed_action == verify::Action::Confirm);
    if (!wanted) continue;
    s.reports.push_back(report::generate_report(e, env.config.backend));
  }
  if (env.run_dir) {
    const auto dir = *env.run_dir / "reports";
    std::filesystem::create_directories(dir);
    for (const auto& r : s.reports) {
      write_json(dir / (r.event_id + ".json"), report::to_json(r));
      write_text_file(dir / (r.event_id + ".md"), report::render_report_markdown(r));
      s.artifacts["report:" + r.event_id] = (dir / (r.event_id + ".md")).string();
    }
  }
  s.decision = summarize(s) + fmt::format("; {} reports", s.reports.size());
  if (s.anomalies.empty()) s.decision = "no anomalies detected";
  s.log("report", fmt::format("{} reports generated", s.reports.size()));
}

}  // namespace

// ---- queue ----------------------------------------------------------------

void FeedbackQueue::push(std::string event_id, verify::FeedbackSignal signal) {
  {
    std::lock_guard lock(mu_);
    entries_[std::move(event_id)].push_back(std::move(signal));
  }
  cv_.notify_all();
}

std::optional<verify::FeedbackSignal> FeedbackQueue::take(const std::string& event_id) {
  std::lock_guard lock(mu_);
  if (auto it = entries_.find(event_id); it != entries_.end() && !it->second.empty()) {
    auto sig = std::move(it->second.front());
    it->second.erase(it->second.begin());
    if (it->second.empty()) entries_.erase(it);
    return sig;
  }
  if (auto it = entries_.find("*"); it != entries_.end() && !it->second.empty()) return it->second.front();
  return std::nullopt;
}

bool FeedbackQueue::wait(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  return cv_.wait_for(lock, timeout, [&] { return !entries_.empty(); });
}

std::size_t FeedbackQueue::size() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& [k, v] : entries_) n += v.size();
  return n;
}

// ---- graph ----------------------------------------------------------------

void WorkflowState::log(std::string node, std::string text) {
  logs.push_back({now_micros(), std::move(node), std::move(text)});
}

std::vector<std::string> WorkflowGraph::node_names() const {
  std::vector<std::string> out;
  for (const auto& n : nodes) out.push_back(n.name);
  return out;
}

std::optional<std::size_t> WorkflowGraph::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].name == name) return i;
  }
  return std::nullopt;
}

TrackFrame load_dataset(const DatasetRef& ref, std::optional<TrackKey> track) {
  if (ref.synthetic) return make_synthetic_track(*ref.synthetic).frame;
  if (!ref.path) throw Error(Errc::BadDataset, "no dataset");
  std::error_code ec;
  if (!std::filesystem::is_regular_file(*ref.path, ec)) throw Error(Errc::BadDataset, "not a readable file: " + ref.path->string());
  FrameMap frames;
  try {
    frames = read_canonical_csv(read_text_file(*ref.path));
  } catch (const Error& e) {
    throw Error(Errc::BadDataset, fmt::format("{}: {}", ref.path->string(), e.what()));
  }
  if (frames.empty()) throw Error(Errc::BadDataset, ref.path->string() + " holds no tracks");
  if (!track) return frames.begin()->second;
  auto it = frames.find(*track);
  if (it == frames.end()) throw Error(Errc::BadDataset, fmt::format("track {} not in {}", to_string(*track), ref.path->string()));
  return it->second;
}

WorkflowGraph build_workflow(const WorkflowConfig& config, std::optional<std::filesystem::path> run_dir,
                             std::shared_ptr<FeedbackQueue> feedback) {
  config.validate();
  WorkflowGraph g;
  g.env = {config, std::move(run_dir), std::move(feedback)};
  g.nodes = {{"ingest", node_ingest},
             {"preprocess", node_preprocess},
             {"score", node_score},
             {"verify", node_verify},
             {"explain", node_explain},
             {"plan", node_plan},
             {"human_feedback", node_feedback, !config.feedback_source},
             {"report", node_report}};
  if (config.feedback_source && config.feedback_loop_max > 0) {
    g.edges.push_back({6, 3, [](const WorkflowState& s, const Environment& env) {
                         if (s.feedback_iterations >= env.config.feedback_loop_max) return false;
                         return std::any_of(s.anomalies.begin(), s.anomalies.end(), [](const detect::AnomalyEvent& e) {
                           return e.status == detect::EventStatus::InfoRequested;
                         });
                       }});
  }
  return g;
}

WorkflowState initial_state(const WorkflowConfig& config, std::optional<verify::QTable> qtable) {
  WorkflowState s;
  s.seed = config.seed;
  s.config_snapshot = to_json(config);
  s.qtable = qtable ? *qtable : verify::make_qtable(config.qhyper);
  s.work->rng.seed(config.seed ^ kVerifyStream);
  return s;
}

WorkflowState step(const WorkflowGraph& graph, WorkflowState state) {
  if (state.done) return state;
  if (state.cursor >= graph.nodes.size()) {
    state.done = true;
    return state;
  }
  const auto& node = graph.nodes[state.cursor];
  const std::size_t before = state.logs.size();
  try {
    node.transform(state, graph.env);
  } catch (const std::exception& ex) {
    state.log(node.name, fmt::format("failed: {}", ex.what()));
    spdlog::warn("workflow node {} failed: {}", node.name, ex.what());
    state.decision.reset();
    state.failed = true;
    state.done = true;
    return state;
  }
  if (state.logs.size() == before) state.log(node.name, "done");
  std::size_t next = state.cursor + 1;
  for (const auto& edge : graph.edges) {
    if (edge.from == state.cursor && edge.when(state, graph.env)) {
      next = edge.to;
      break;
    }
  }
  state.cursor = next;
  if (state.cursor >= graph.nodes.size()) state.done = true;
  return state;
}

WorkflowState run(const WorkflowGraph& graph, WorkflowState state) {
  while (!state.done) state = step(graph, std::move(state));
  if (graph.env.run_dir) {
    const auto& dir = *graph.env.run_dir;
    std::filesystem::create_directories(dir / "reports");
    std::filesystem::create_directories(dir / "checkpoints");
    std::string logs;
    for (const auto& l : state.logs) logs += fmt::format("{} [{}] {}\n", format_iso8601(l.instant), l.node, l.text);
    write_text_file(dir / "logs.txt", logs);
    write_json(dir / "state.json", to_json(state));
  }
  return state;
}

ordered_json to_json(const WorkflowState& s, bool with_instants) {
  ordered_json logs = ordered_json::array();
  for (const auto& l : s.logs) {
    ordered_json line{{"node", l.node}, {"text", l.text}};
    if (with_instants) line["instant"] = format_iso8601(l.instant);
    logs.push_back(line);
  }
  ordered_json anomalies = ordered_json::array();
  for (const auto& e : s.anomalies) anomalies.push_back(detect::to_json(e));
  ordered_json messages = ordered_json::array();
  for (const auto& m : s.messages) messages.push_back({{"role", m.role}, {"text", m.text}});
  ordered_json feedback = ordered_json::array();
  for (const auto& f : s.feedback) {
    feedback.push_back({{"event_id", f.event_id},
                        {"verdict", verify::to_string(f.signal.verdict)},
                        {"note", f.signal.note},
                        {"operator", f.signal.operator_id},
                        {"state", verify::to_string(f.state)},
                        {"action", verify::to_string(f.action)},
                        {"status_after", detect::to_string(f.status_after)},
                        {"q_before", f.q_before},
                        {"q_after", f.q_after}});
  }
  ordered_json reports = ordered_json::array();
  for (const auto& r : s.reports) reports.push_back(report::to_json(r));
  return {{"seed", s.seed},
          {"config", s.config_snapshot},
          {"cursor", s.cursor},
          {"done", s.done},
          {"failed", s.failed},
          {"decision", s.decision ? ordered_json(*s.decision) : ordered_json(nullptr)},
          {"feedback_iterations", s.feedback_iterations},
          {"anomalies", anomalies},
          {"messages", messages},
          {"feedback", feedback},
          {"reports", reports},
          {"qtable", verify::to_json(s.qtable)},
          {"artifacts", s.artifacts},
          {"logs", logs}};
}

}  // namespace tw::agent
