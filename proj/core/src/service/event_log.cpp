#include "tw/service/event_log.hpp"

#include <chrono>

#include <fmt/format.h>

#include "tw/error.hpp"
#include "tw/track/canonical_csv.hpp"

namespace tw::service {

using nlohmann::ordered_json;

namespace {

Micros now_micros() {
  return std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

detect::EventStatus status_field(const ordered_json& j, const char* name) {
  const auto s = detect::parse_status(j.at(name).get<std::string>());
  if (!s) throw Error(Errc::BadFormat, fmt::format("bad {}", name));
  return *s;
}

}  // namespace

std::string_view to_string(RunStatus s) noexcept {
  switch (s) {
    case RunStatus::Running:
      return "running";
    case RunStatus::Completed:
      return "completed";
    case RunStatus::Failed:
      return "failed";
  }
  return "running";
}

std::optional<RunStatus> parse_run_status(std::string_view s) noexcept {
  if (s == "running") return RunStatus::Running;
  if (s == "completed") return RunStatus::Completed;
  if (s == "failed") return RunStatus::Failed;
  return std::nullopt;
}

ordered_json to_json(const RunRecord& r) {
  return {{"id", r.id},
          {"dataset", r.dataset},
          {"config", r.config},
          {"status", to_string(r.status)},
          {"created_us", r.created},
          {"created", format_iso8601(r.created)},
          {"finished_us", r.finished ? ordered_json(*r.finished) : ordered_json(nullptr)},
          {"decision", r.decision ? ordered_json(*r.decision) : ordered_json(nullptr)},
          {"error", r.error},
          {"anomalies", r.anomalies},
          {"reports", r.reports}};
}

RunRecord run_from_json(const ordered_json& j) {
  try {
    RunRecord r;
    r.id = j.at("id").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.config = j.value("config", ordered_json::object());
    const auto st = parse_run_status(j.at("status").get<std::string>());
    if (!st) throw Error(Errc::BadFormat, "bad run status");
    r.status = *st;
    r.created = j.at("created_us").get<Micros>();
    if (j.contains("finished_us") && !j["finished_us"].is_null()) r.finished = j["finished_us"].get<Micros>();
    if (j.contains("decision") && !j["decision"].is_null()) r.decision = j["decision"].get<std::string>();
    r.error = j.value("error", std::string());
    r.anomalies = j.value("anomalies", std::size_t{0});
    r.reports = j.value("reports", std::size_t{0});
    return r;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::BadFormat, std::string("malformed run record: ") + ex.what());
  }
}

std::string to_line(const LogEvent& e) {
  const ordered_json j{{"seq", e.seq}, {"instant", format_iso8601(e.instant)}, {"kind", e.kind}, {"payload", e.payload}};
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

LogEvent parse_line(std::string_view line) {
  const auto j = ordered_json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::BadFormat, "log line is not a JSON object");
  try {
    LogEvent e;
    e.seq = j.at("seq").get<std::uint64_t>();
    const auto instant = parse_iso8601(j.at("instant").get<std::string>());
    if (!instant) throw Error(Errc::BadFormat, "bad instant");
    e.instant = *instant;
    e.kind = j.at("kind").get<std::string>();
    e.payload = j.at("payload");
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::BadFormat, std::string("malformed log line: ") + ex.what());
  }
}

ServiceState fresh_state(const verify::QHyper& hyper) {
  ServiceState s;
  s.qtable = verify::make_qtable(hyper);
  return s;
}

void apply_event(ServiceState& s, const LogEvent& e) {
  const auto& p = e.payload;
  try {
    if (e.kind == kind::kRunStarted) {
      RunRecord r = run_from_json(p.at("run"));
      if (s.runs.count(r.id)) throw Error(Errc::BadFormat, "run started twice: " + r.id);
      s.runs.emplace(r.id, std::move(r));
    } else if (e.kind == kind::kAnomalyFlagged) {
      const std::string run_id = p.at("run_id").get<std::string>();
      if (!s.runs.count(run_id)) throw Error(Errc::BadFormat, "anomaly for unknown run " + run_id);
      detect::AnomalyEvent ev = detect::event_from_json(p.at("event"));
      auto& rec = s.events[ev.id];
      if (std::find(rec.runs.begin(), rec.runs.end(), run_id) == rec.runs.end()) rec.runs.push_back(run_id);
      rec.event = std::move(ev);
    } else if (e.kind == kind::kFeedbackReceived) {
      const std::string id = p.at("event_id").get<std::string>();
      const auto after = status_field(p, "status_after");
      auto it = s.events.find(id);
      if (it == s.events.end()) throw Error(Errc::BadFormat, "feedback for unknown event " + id);
      it->second.event.status = after;
    } else if (e.kind == kind::kQTableUpdated) {
      s.qtable = verify::qtable_from_json(p.at("table"));
    } else if (e.kind == kind::kReportGenerated) {
      report::DiscrepancyReport r = report::report_from_json(p.at("report"));
      s.reports[r.event_id] = std::move(r);
    } else if (e.kind == kind::kRunFinished) {
      const std::string run_id = p.at("run_id").get<std::string>();
      const auto st = parse_run_status(p.at("status").get<std::string>());
      if (!st || *st == RunStatus::Running) throw Error(Errc::BadFormat, "bad final run status");
      auto it = s.runs.find(run_id);
      if (it == s.runs.end()) throw Error(Errc::BadFormat, "finish for unknown run " + run_id);
      if (it->second.status != RunStatus::Running) throw Error(Errc::BadFormat, "run finished twice: " + run_id);
      RunRecord& r = it->second;
      r.status = *st;
      r.finished = p.at("finished_us").get<Micros>();
      if (!p.at("decision").is_null()) r.decision = p["decision"].get<std::string>();
      r.error = p.value("error", std::string());
      r.anomalies = p.value("anomalies", std::size_t{0});
      r.reports = p.value("reports", std::size_t{0});
    } else {
      throw Error(Errc::BadFormat, "unknown event kind '" + e.kind + "'");
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::BadFormat, fmt::format("malformed {} payload: {}", e.kind, ex.what()));
  }
  s.last_seq = e.seq;
}

void replay_into(const std::filesystem::path& path, ServiceState& state, std::uint64_t* good_bytes) {
  std::uint64_t scratch = 0;
  std::uint64_t& good = good_bytes ? *good_bytes : scratch;
  good = 0;
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return;
  const std::string text = read_text_file(path);
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    const std::size_t end = nl == std::string::npos ? text.size() : nl;
    const std::string_view line(text.data() + pos, end - pos);
    const std::size_t next = nl == std::string::npos ? text.size() : nl + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      pos = next;
      good = pos;
      continue;
    }
    const auto expected = static_cast<std::int64_t>(state.last_seq + 1);
    LogEvent e;
    try {
      e = parse_line(line);
    } catch (const Error& err) {
      throw Error(Errc::CorruptLog, fmt::format("line at seq {}: {}", expected, err.what()), expected);
    }
    if (e.seq <= state.last_seq) {
      throw Error(Errc::CorruptLog, fmt::format("seq {} does not increase past {}", e.seq, state.last_seq), expected);
    }
    ServiceState copy = state;
    try {
      apply_event(copy, e);
    } catch (const Error& err) {
      throw Error(Errc::CorruptLog, fmt::format("seq {}: {}", e.seq, err.what()), static_cast<std::int64_t>(e.seq));
    }
    state = std::move(copy);
    pos = next;
    good = pos;
  }
}

ServiceState replay_log(const std::filesystem::path& path, const verify::QHyper& hyper) {
  ServiceState s = fresh_state(hyper);
  replay_into(path, s);
  return s;
}

ordered_json to_json(const ServiceState& s) {
  ordered_json runs = ordered_json::array();
  for (const auto& [id, r] : s.runs) runs.push_back(to_json(r));
  ordered_json events = ordered_json::array();
  for (const auto& [id, r] : s.events) {
    ordered_json ev = detect::to_json(r.event);
    ev["runs"] = r.runs;
    events.push_back(ev);
  }
  ordered_json reports = ordered_json::array();
  for (const auto& [id, r] : s.reports) reports.push_back(id);
  return {{"last_seq", s.last_seq}, {"qtable", verify::to_json(s.qtable)}, {"runs", runs}, {"events", events}, {"reports", reports}};
}

EventLog::EventLog(const std::filesystem::path& path, std::uint64_t last_seq) : path_(path), next_seq_(last_seq + 1) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::app);
  if (!out_) throw Error(Errc::IoError, "cannot open event log " + path.string());
}

LogEvent EventLog::append(std::string_view kind, ordered_json payload) {
  if (!out_.is_open()) throw Error(Errc::IoError, "event log not open");
  LogEvent e{next_seq_, now_micros(), std::string(kind), std::move(payload)};
  out_ << to_line(e) << '\n';
  out_.flush();
  if (!out_) throw Error(Errc::IoError, "append failed for " + path_.string());
  ++next_seq_;
  return e;
}

}  // namespace tw::service
