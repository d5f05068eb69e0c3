#include "tw/service/service.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tw/error.hpp"
#include "tw/track/canonical_csv.hpp"

namespace tw::service {

using nlohmann::ordered_json;

namespace {

Micros now_micros() {
  return std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr char kCrockford[] = "0123456789ABCDEFGHJKMNPQRSTVWXYZ";

}  // namespace

RunIdGenerator::RunIdGenerator() : rng_(std::random_device{}()) {}

std::string RunIdGenerator::next(Micros now) {
  std::lock_guard lock(mu_);
  auto ms = static_cast<std::uint64_t>(now / 1000) & ((1ULL << 48) - 1);
  if (ms <= last_ms_) {
    ms = last_ms_;
    if (++lo_ == 0) hi_ = (hi_ + 1) & 0xFFFF;
  } else {
    last_ms_ = ms;
    hi_ = rng_() & 0xFFFF;
    lo_ = rng_() & ~(1ULL << 63);  // headroom so increments rarely carry
  }
  std::string out(26, '0');
  for (int i = 9; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kCrockford[ms & 31];
    ms >>= 5;
  }
  // 80 random bits: 16 from hi_, 64 from lo_, as 16 base32 digits.
  auto bit = [&](int b) -> unsigned { return b >= 64 ? (hi_ >> (b - 64)) & 1U : (lo_ >> b) & 1U; };
  for (int d = 0; d < 16; ++d) {
    unsigned v = 0;
    for (int k = 0; k < 5; ++k) v = (v << 1) | bit(79 - 5 * d - k);
    out[static_cast<std::size_t>(10 + d)] = kCrockford[v];
  }
  return out;
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("TW_DATA_DIR"); env && *env) return env;
  return "tw-data";
}

ordered_json to_json(const FeedbackResult& r) {
  return {{"event_id", r.event_id},
          {"status_before", detect::to_string(r.status_before)},
          {"status", detect::to_string(r.status)},
          {"state", verify::to_string(r.state)},
          {"action", verify::to_string(r.action)},
          {"reward", r.reward},
          {"q_before", r.q_before},
          {"q_after", r.q_after},
          {"delta", r.delta()},
          {"epsilon", r.epsilon},
          {"next_action", r.next_action ? ordered_json(verify::to_string(*r.next_action)) : ordered_json(nullptr)},
          {"report_generated", r.report_generated}};
}

Service::Service(ServiceOptions options) : options_(std::move(options)) {
  std::filesystem::create_directories(options_.data_dir);
  state_ = fresh_state(options_.qhyper);
  const auto path = log_path();
  std::uint64_t good = 0;
  try {
    replay_into(path, state_, &good);
  } catch (const Error& e) {
    if (e.code() != Errc::CorruptLog) throw;
    const std::string text = read_text_file(path);
    const auto nl = text.find('\n', good);
    const bool tail_only = nl == std::string::npos || text.find_first_not_of(" \t\r\n", nl) == std::string::npos;
    if (!tail_only) throw;
    spdlog::warn("event log {}: dropping torn final line ({})", path.string(), e.what());
    std::filesystem::resize_file(path, good);
  }
  log_ = EventLog(path, state_.last_seq);
  for (const auto& [id, run] : ServiceState(state_).runs) {
    if (run.status != RunStatus::Running) continue;
    append(kind::kRunFinished, {{"run_id", id},
                                {"status", "failed"},
                                {"finished_us", now_micros()},
                                {"decision", nullptr},
                                {"error", "interrupted by service restart"},
                                {"anomalies", 0},
                                {"reports", 0}});
  }
}

Service::~Service() { wait_all(); }

std::filesystem::path Service::log_path() const { return options_.data_dir / "events.jsonl"; }

LogEvent Service::append(std::string_view k, ordered_json payload) {
  LogEvent e = log_.append(k, std::move(payload));
  // Apply what a replay would read back, so live and replayed state agree bit for bit.
  apply_event(state_, parse_line(to_line(e)));
  return e;
}

std::string Service::start_run(const std::string& dataset, const ordered_json& config_json) {
  agent::DatasetRef ref = agent::DatasetRef::parse(dataset);
  if (ref.path) {
    std::filesystem::path p = *ref.path;
    std::error_code ec;
    if (p.is_relative() && std::filesystem::exists(options_.data_dir / p, ec)) p = options_.data_dir / p;
    if (!std::filesystem::is_regular_file(p, ec) || !std::ifstream(p)) {
      throw Error(Errc::BadDataset, "dataset not readable: " + dataset);
    }
    ref.path = std::filesystem::absolute(p);
  }
  agent::WorkflowConfig config = agent::config_from_json(config_json.is_null() ? ordered_json::object() : config_json,
                                                         options_.base_config);
  config.dataset = ref;
  config.feedback_source = false;
  config.qhyper = options_.qhyper;
  config.validate();

  RunRecord record;
  record.id = ids_.next(now_micros());
  record.dataset = ref.to_string();
  record.config = agent::to_json(config);
  record.created = now_micros();
  {
    std::lock_guard lock(mu_);
    append(kind::kRunStarted, {{"run", to_json(record)}});
  }
  if (options_.background) {
    std::lock_guard lock(threads_mu_);
    threads_.emplace(record.id, std::thread([this, id = record.id, config] { execute_run(id, config); }));
  } else {
    execute_run(record.id, config);
  }
  return record.id;
}

void Service::execute_run(const std::string& run_id, const agent::WorkflowConfig& config) {
  agent::WorkflowState result;
  std::string error;
  try {
    verify::QTable table;
    {
      std::lock_guard lock(mu_);
      table = state_.qtable;
    }
    const auto graph = agent::build_workflow(config, options_.data_dir / "runs" / run_id);
    result = agent::run(graph, agent::initial_state(config, table));
    if (result.failed && !result.logs.empty()) error = result.logs.back().text;
  } catch (const std::exception& ex) {
    result.failed = true;
    error = ex.what();
  }

  std::lock_guard lock(mu_);
  try {
    std::size_t n_reports = 0;
    for (const auto& ev : result.anomalies) {
      auto it = state_.events.find(ev.id);
      const bool resolved = it != state_.events.end() && !detect::is_open(it->second.event.status);
      append(kind::kAnomalyFlagged, {{"run_id", run_id}, {"event", detect::to_json(resolved ? it->second.event : ev)}});
    }
    for (const auto& r : result.reports) {
      const auto it = state_.events.find(r.event_id);
      if (it != state_.events.end() && !detect::is_open(it->second.event.status) && state_.reports.count(r.event_id)) continue;
      append(kind::kReportGenerated, {{"run_id", run_id}, {"report", report::to_json(r)}});
      ++n_reports;
    }
    append(kind::kRunFinished, {{"run_id", run_id},
                                {"status", result.failed ? "failed" : "completed"},
                                {"finished_us", now_micros()},
                                {"decision", result.decision ? ordered_json(*result.decision) : ordered_json(nullptr)},
                                {"error", error},
                                {"anomalies", result.anomalies.size()},
                                {"reports", n_reports}});
    write_snapshot();
  } catch (const std::exception& ex) {
    spdlog::error("run {}: could not record results: {}", run_id, ex.what());
  }
}

void Service::write_snapshot() {
  try {
    write_text_file(options_.data_dir / "snapshot.json", to_json(state_).dump(2) + "\n");
  } catch (const std::exception& ex) {
    spdlog::warn("snapshot not written: {}", ex.what());
  }
}

void Service::wait(const std::string& run_id) {
  std::thread t;
  {
    std::lock_guard lock(threads_mu_);
    auto it = threads_.find(run_id);
    if (it == threads_.end()) return;
    t = std::move(it->second);
    threads_.erase(it);
  }
  if (t.joinable()) t.join();
}

void Service::wait_all() {
  std::map<std::string, std::thread> all;
  {
    std::lock_guard lock(threads_mu_);
    all.swap(threads_);
  }
  for (auto& [id, t] : all) {
    if (t.joinable()) t.join();
  }
}

RunRecord Service::run(const std::string& run_id) const {
  std::lock_guard lock(mu_);
  auto it = state_.runs.find(run_id);
  if (it == state_.runs.end()) throw Error(Errc::UnknownRun, "unknown run " + run_id);
  return it->second;
}

std::vector<RunRecord> Service::runs() const {
  std::lock_guard lock(mu_);
  std::vector<RunRecord> out;
  for (const auto& [id, r] : state_.runs) out.push_back(r);
  return out;
}

std::vector<detect::AnomalyEvent> Service::list_anomalies(const std::optional<detect::EventStatus>& status,
                                                          const std::optional<std::string>& run_id) const {
  std::lock_guard lock(mu_);
  if (run_id && !state_.runs.count(*run_id)) throw Error(Errc::UnknownRun, "unknown run " + *run_id);
  std::vector<detect::AnomalyEvent> out;
  for (const auto& [id, rec] : state_.events) {
    if (run_id && std::find(rec.runs.begin(), rec.runs.end(), *run_id) == rec.runs.end()) continue;
    if (status && rec.event.status != *status) continue;
    out.push_back(rec.event);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.id < b.id;
  });
  return out;
}

std::vector<detect::AnomalyEvent> Service::list_pending(const std::optional<std::string>& run_id) const {
  auto all = list_anomalies(std::nullopt, run_id);
  std::erase_if(all, [](const auto& e) { return !detect::is_open(e.status); });
  return all;
}

detect::AnomalyEvent Service::event(const std::string& event_id) const {
  std::lock_guard lock(mu_);
  auto it = state_.events.find(event_id);
  if (it == state_.events.end()) throw Error(Errc::UnknownEvent, "unknown event " + event_id);
  return it->second.event;
}

agent::WorkflowConfig Service::run_config(const std::string& run_id) const {
  auto it = state_.runs.find(run_id);
  if (it == state_.runs.end()) return options_.base_config;
  try {
    return agent::config_from_json(it->second.config, options_.base_config);
  } catch (const Error&) {
    return options_.base_config;
  }
}

FeedbackResult Service::submit_feedback(const std::string& event_id, const verify::FeedbackSignal& signal) {
  std::lock_guard lock(mu_);
  auto it = state_.events.find(event_id);
  if (it == state_.events.end()) throw Error(Errc::UnknownEvent, "unknown event " + event_id);
  detect::AnomalyEvent ev = it->second.event;
  const std::string run_id = it->second.runs.empty() ? std::string() : it->second.runs.front();
  if (!detect::is_open(ev.status)) {
    throw Error(Errc::AlreadyResolved, fmt::format("event {} is already {}", event_id, detect::to_string(ev.status)));
  }
  const agent::WorkflowConfig config = run_config(run_id);

  FeedbackResult r;
  r.event_id = event_id;
  r.status_before = ev.status;
  r.state = ev.severity.value_or(verify::severity_of(ev, config.rubric));
  r.action = ev.proposed_action.value_or(state_.qtable.greedy(r.state, ev.status != detect::EventStatus::InfoRequested));
  r.reward = verify::reward_of(r.action, signal.verdict, options_.qhyper.rewards);
  r.q_before = state_.qtable.at(r.state, r.action);
  const verify::QTable table = verify::apply_feedback(state_.qtable, r.state, r.action, signal.verdict, options_.qhyper);
  r.q_after = table.at(r.state, r.action);
  r.epsilon = table.epsilon;
  r.status = verify::status_after(r.action, signal.verdict);

  append(kind::kFeedbackReceived, {{"run_id", run_id},
                                   {"event_id", event_id},
                                   {"verdict", verify::to_string(signal.verdict)},
                                   {"note", signal.note},
                                   {"operator", signal.operator_id},
                                   {"state", verify::to_string(r.state)},
                                   {"action", verify::to_string(r.action)},
                                   {"status_before", detect::to_string(r.status_before)},
                                   {"status_after", detect::to_string(r.status)}});
  append(kind::kQTableUpdated, {{"event_id", event_id},
                                {"state", verify::to_string(r.state)},
                                {"action", verify::to_string(r.action)},
                                {"reward", r.reward},
                                {"q_before", r.q_before},
                                {"q_after", r.q_after},
                                {"delta", r.delta()},
                                {"table", verify::to_json(table)}});

  ev.status = r.status;
  ev.severity = r.state;
  if (r.status == detect::EventStatus::InfoRequested) {
    std::mt19937_64 rng(fnv1a(event_id) ^ static_cast<std::uint64_t>(state_.last_seq));
    r.next_action = verify::choose_action(state_.qtable, r.state, rng, false);
    ev.proposed_action = r.next_action;
    append(kind::kAnomalyFlagged, {{"run_id", run_id}, {"event", detect::to_json(ev)}});
  }
  if (r.status == detect::EventStatus::Confirmed || state_.reports.count(event_id)) {
    const auto rep = report::generate_report(ev, config.backend);
    append(kind::kReportGenerated, {{"run_id", run_id}, {"report", report::to_json(rep)}});
    r.report_generated = true;
    if (!run_id.empty()) {
      const auto dir = options_.data_dir / "runs" / run_id / "reports";
      try {
        std::filesystem::create_directories(dir);
        write_text_file(dir / (event_id + ".json"), report::to_json(rep).dump(2) + "\n");
        write_text_file(dir / (event_id + ".md"), report::render_report_markdown(rep));
      } catch (const std::exception& ex) {
        spdlog::warn("report files for {} not written: {}", event_id, ex.what());
      }
    }
  }
  return r;
}

report::DiscrepancyReport Service::report(const std::string& event_id) const {
  std::lock_guard lock(mu_);
  auto it = state_.reports.find(event_id);
  if (it == state_.reports.end()) throw Error(Errc::UnknownEvent, "no report for event " + event_id);
  return it->second;
}

std::vector<std::string> Service::report_ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, r] : state_.reports) out.push_back(id);
  return out;
}

ordered_json Service::error_series(const std::string& run_id, const std::optional<TrackKey>& track) const {
  (void)run(run_id);
  const auto path = options_.data_dir / "runs" / run_id / "errors.json";
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) throw Error(Errc::UnknownRun, "run " + run_id + " has no error series");
  auto j = ordered_json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded()) throw Error(Errc::BadFormat, "unreadable error series for run " + run_id);
  if (track && (j.value("dss", -1) != track->dss || j.value("scid", -1) != track->scid)) {
    throw Error(Errc::UnknownRun, fmt::format("run {} has no series for {}", run_id, to_string(*track)));
  }
  return j;
}

verify::QTable Service::qtable() const {
  std::lock_guard lock(mu_);
  return state_.qtable;
}

ServiceState Service::state() const {
  std::lock_guard lock(mu_);
  return state_;
}

}  // namespace tw::service
