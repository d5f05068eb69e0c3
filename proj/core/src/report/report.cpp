#include "tw/report/report.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "tw/error.hpp"
#include "tw/util/csv.hpp"

namespace tw::report {

using nlohmann::ordered_json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string id_text(const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string("unknown"); }

std::optional<double> parse_id(const std::string& cell, std::size_t line) {
  if (is_null_text(cell)) return std::nullopt;
  const auto v = csv::parse_double(cell);
  if (!v) throw Error(Errc::BadFormat, fmt::format("line {}: bad id '{}'", line, cell), static_cast<std::int64_t>(line));
  return v;
}

std::string feature_hint(std::string_view feature) {
  const std::string f = lower(feature);
  if (f == "ssnr") return "verify symbol loop lock and receiver SNR margins";
  if (f == "pcno") return "verify carrier loop lock and downlink carrier power";
  if (f == "agc") return "verify AGC level and front-end LNA gain";
  if (f.find("klys") != std::string::npos || f.find("pwr") != std::string::npos) {
    return "verify transmitter klystron power and cooling readings";
  }
  return fmt::format("inspect the {} telemetry chain", feature.empty() ? std::string("affected") : std::string(feature));
}

std::string severity_text(const std::optional<verify::Severity>& s) {
  return s ? std::string(verify::to_string(*s)) : std::string("unrated");
}

std::string capitalized(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

}  // namespace

bool is_null_text(std::string_view s) noexcept {
  const std::string t = lower(csv::trim(s));
  return t.empty() || t == "none" || t == "null" || t == "nan";
}

std::vector<DiscrepancyRecord> parse_discrepancy_csv(std::string_view text) {
  const auto lines = csv::split_records(text);
  std::size_t first = 0;
  while (first < lines.size() && csv::trim(lines[first]).empty()) ++first;
  if (first == lines.size()) throw Error(Errc::HeaderMissing, "discrepancy csv: no header");
  const auto header = csv::split_line(lines[first]);
  auto col = [&](std::string_view name) -> int {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (lower(csv::trim(header[i])) == lower(name)) return static_cast<int>(i);
    }
    return -1;
  };
  const int c_sc = col("SPACECRAFT_ID"), c_orig = col("GROUND_ANTENNA_ORIG_NUM"),
            c_clean = col("GROUND_ANTENNA_CLEAN_NUM"), c_ant = col("GROUND_ANTENNA_ID"),
            c_desc = col("DESCRIPTION_TXT"), c_act = col("CORRECTIVE_ACTION_TXT");
  if (c_desc < 0) throw Error(Errc::HeaderMissing, "discrepancy csv: DESCRIPTION_TXT column missing");

  std::vector<DiscrepancyRecord> out;
  for (std::size_t li = first + 1; li < lines.size(); ++li) {
    if (csv::trim(lines[li]).empty()) continue;
    const auto cells = csv::split_line(lines[li]);
    auto cell = [&](int c) -> std::string {
      return c >= 0 && static_cast<std::size_t>(c) < cells.size() ? cells[static_cast<std::size_t>(c)] : std::string();
    };
    DiscrepancyRecord r;
    r.spacecraft_id = parse_id(cell(c_sc), li + 1);
    r.ground_antenna_orig_num = parse_id(cell(c_orig), li + 1);
    r.ground_antenna_clean_num = parse_id(cell(c_clean), li + 1);
    r.ground_antenna_id = parse_id(cell(c_ant), li + 1);
    const std::string desc = cell(c_desc);
    r.description_txt = is_null_text(desc) ? std::string() : desc;
    const std::string act = cell(c_act);
    if (!is_null_text(act)) r.corrective_action_txt = act;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<DiscrepancyRecord> read_discrepancy_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_discrepancy_csv(ss.str());
}

std::string wrap_prompt(const DiscrepancyRecord& record) {
  if (csv::trim(record.description_txt).empty()) throw Error(Errc::MissingField, "discrepancy record has no description");
  std::string out;
  out += "SPACECRAFT_ID: " + id_text(record.spacecraft_id) + "\n";
  out += "GROUND_ANTENNA_ORIG_NUM: " + id_text(record.ground_antenna_orig_num) + "\n";
  out += "GROUND_ANTENNA_CLEAN_NUM: " + id_text(record.ground_antenna_clean_num) + "\n";
  out += "GROUND_ANTENNA_ID: " + id_text(record.ground_antenna_id) + "\n";
  out += "DESCRIPTION: " + record.description_txt + "\n";
  out += kPromptInstruction;
  out += "\n";
  return out;
}

std::string describe_event(const detect::AnomalyEvent& e) {
  const double ratio = e.threshold > 0.0 ? e.error / e.threshold : 0.0;
  std::string s = fmt::format("{} reconstruction error {:.6g} exceeded threshold {:.6g} ({:.2f}x)", nn::to_string(e.model),
                              e.error, e.threshold, ratio);
  if (!e.feature.empty()) s += fmt::format(" on {}", e.feature);
  s += fmt::format(" at {} for DSS-{} SCID {}", format_iso8601(e.timestamp), e.key.dss, e.key.scid);
  return s + ".";
}

DiscrepancyRecord event_record(const detect::AnomalyEvent& e) {
  DiscrepancyRecord r;
  r.spacecraft_id = e.key.scid;
  r.ground_antenna_orig_num = e.key.dss;
  r.ground_antenna_clean_num = e.key.dss;
  r.description_txt = describe_event(e);
  return r;
}

std::string wrap_prompt(const detect::AnomalyEvent& event, std::string_view verdict) {
  DiscrepancyRecord r = event_record(event);
  r.description_txt += fmt::format(" Severity: {}. Verifier verdict: {}.", severity_text(event.severity), verdict);
  return wrap_prompt(r);
}

PairDataset build_pair_dataset(const std::vector<DiscrepancyRecord>& records) {
  PairDataset out;
  for (const auto& r : records) {
    if (!r.corrective_action_txt || is_null_text(*r.corrective_action_txt) || csv::trim(r.description_txt).empty()) {
      ++out.skipped;
      continue;
    }
    out.pairs.push_back({wrap_prompt(r), *r.corrective_action_txt});
  }
  return out;
}

std::string to_jsonl(const PairDataset& dataset) {
  std::string out;
  for (const auto& p : dataset.pairs) {
    ordered_json j{{"prompt", p.prompt}, {"response", p.response}};
    out += j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

void write_pair_dataset(const std::filesystem::path& path, const PairDataset& dataset) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << to_jsonl(dataset);
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

std::string_view backend_tag(const ReasoningBackend& b) noexcept {
  return std::holds_alternative<TemplateBackend>(b) ? "template" : "remote";
}

std::string template_action(const detect::AnomalyEvent& e) {
  const std::string feature = e.feature.empty() ? std::string("the modeled features") : e.feature;
  const std::string model(nn::to_string(e.model));
  const std::string hint = feature_hint(e.feature);
  const verify::Severity sev = e.severity.value_or(verify::Severity::Low);
  switch (sev) {
    case verify::Severity::High:
      return fmt::format(
          "Severity high: {} deviation flagged by the {} model on DSS-{}. Treat as an active discrepancy: {}, "
          "reacquire the downlink if lock was lost and open a discrepancy report for the pass.",
          feature, model, e.key.dss, hint);
    case verify::Severity::Medium:
      return fmt::format(
          "Severity medium: {} deviation flagged by the {} model on DSS-{}. Investigate before the next pass: {} "
          "and compare against station weather for the same interval.",
          feature, model, e.key.dss, hint);
    case verify::Severity::Low:
      break;
  }
  return fmt::format(
      "Severity low: {} deviation flagged by the {} model on DSS-{}. Log the event and keep monitoring; {} if the "
      "deviation repeats.",
      feature, model, e.key.dss, hint);
}

std::string verdict_text(const detect::AnomalyEvent& e) {
  const std::string action = e.proposed_action ? std::string(verify::to_string(*e.proposed_action)) : std::string("none");
  switch (e.status) {
    case detect::EventStatus::Pending:
      return fmt::format("proposed {}, awaiting operator", action);
    case detect::EventStatus::InfoRequested:
      return fmt::format("proposed {}, more information requested", action);
    case detect::EventStatus::Confirmed:
      return fmt::format("confirmed (proposed {})", action);
    case detect::EventStatus::Rejected:
      return fmt::format("rejected (proposed {})", action);
  }
  return action;
}

DiscrepancyReport generate_report(const detect::AnomalyEvent& event, const ReasoningBackend& backend) {
  DiscrepancyReport r;
  r.event_id = event.id;
  r.key = event.key;
  r.timestamp = event.timestamp;
  r.severity = event.severity;
  r.verdict = verdict_text(event);
  r.description = describe_event(event);
  r.event = event;

  if (const auto* remote = std::get_if<RemoteBackend>(&backend)) {
    const RemoteReply reply = call_remote(*remote, wrap_prompt(event, r.verdict));
    if (!reply.text.empty()) {
      r.suggested_action = reply.text;
      r.backend = "remote";
      r.generation_log.push_back(fmt::format("remote {} model {}: ok", remote->base_url, remote->model));
      return r;
    }
    r.generation_log.push_back(
        fmt::format("warning: remote {} failed ({}); fell back to template", remote->base_url, reply.error));
  }
  r.suggested_action = template_action(event);
  r.backend = "template";
  r.generation_log.push_back("template: " + severity_text(event.severity) + "/" + std::string(nn::to_string(event.model)) +
                             "/" + (event.feature.empty() ? std::string("-") : event.feature));
  return r;
}

std::string render_report_markdown(const DiscrepancyReport& r) {
  const auto& e = r.event;
  std::string md = fmt::format("# Discrepancy report {}\n\n", r.event_id);
  md += "## Summary\n\n" + r.description + "\n\n";

  md += "## Data\n\n";
  md += fmt::format("- Track: DSS-{} / SCID {}\n", r.key.dss, r.key.scid);
  md += fmt::format("- Time: {}\n", format_iso8601(r.timestamp));
  md += fmt::format("- Window: {}\n", e.window);
  md += fmt::format("- Reconstruction error: {:.6g}\n", e.error);
  md += fmt::format("- Threshold: {:.6g}\n", e.threshold);
  if (!e.feature.empty()) md += fmt::format("- Worst feature: {}\n", e.feature);
  for (const auto& [name, v] : e.snapshot) {
    md += is_missing(v) ? fmt::format("- {}: missing\n", name) : fmt::format("- {}: {:.6g}\n", name, v);
  }
  if (e.context.empty()) {
    md += "- Weather context: not available\n";
  } else {
    auto field = [&](const char* label, const std::optional<double>& v) {
      md += v ? fmt::format("- {}: {:.6g}\n", label, *v) : fmt::format("- {}: not available\n", label);
    };
    field("Wind", e.context.wind);
    field("Rain", e.context.rain);
    field("Temperature", e.context.temperature);
    field("Humidity", e.context.humidity);
  }
  md += "\n## Severity\n\n" + capitalized(severity_text(r.severity)) + "\n\n";
  md += "## Verdict\n\n" + r.verdict + "\n\n";
  md += "## Suggested Action\n\n" + r.suggested_action + "\n\n";
  md += "## Provenance\n\n";
  md += fmt::format("- Event: {}\n- Model: {}\n- Backend: {}\n", r.event_id, nn::to_string(e.model), r.backend);
  for (const auto& line : r.generation_log) md += "- Log: " + line + "\n";
  return md;
}

ordered_json to_json(const DiscrepancyReport& r) {
  return {{"event_id", r.event_id},
          {"dss", r.key.dss},
          {"scid", r.key.scid},
          {"timestamp_us", r.timestamp},
          {"timestamp", format_iso8601(r.timestamp)},
          {"severity", r.severity ? ordered_json(verify::to_string(*r.severity)) : ordered_json(nullptr)},
          {"verdict", r.verdict},
          {"description", r.description},
          {"suggested_action", r.suggested_action},
          {"backend", r.backend},
          {"generation_log", r.generation_log},
          {"event", detect::to_json(r.event)}};
}

DiscrepancyReport report_from_json(const ordered_json& j) {
  try {
    DiscrepancyReport r;
    r.event_id = j.at("event_id").get<std::string>();
    r.key = {j.at("dss").get<int>(), j.at("scid").get<int>()};
    r.timestamp = j.at("timestamp_us").get<Micros>();
    if (!j.at("severity").is_null()) {
      r.severity = verify::parse_severity(j["severity"].get<std::string>());
      if (!r.severity) throw Error(Errc::BadFormat, "unknown severity");
    }
    r.verdict = j.at("verdict").get<std::string>();
    r.description = j.at("description").get<std::string>();
    r.suggested_action = j.at("suggested_action").get<std::string>();
    r.backend = j.at("backend").get<std::string>();
    r.generation_log = j.value("generation_log", std::vector<std::string>{});
    r.event = detect::event_from_json(j.at("event"));
    return r;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::BadFormat, std::string("malformed report: ") + ex.what());
  }
}

}  // namespace tw::report
