#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tw/detect/event.hpp"

namespace tw::report {

/// One discrepancy report row. Ids are stored as the reals the source
/// spreadsheets use (108.0); integral values print without a fraction.
struct DiscrepancyRecord {
  std::optional<double> spacecraft_id;
  std::optional<double> ground_antenna_orig_num;
  std::optional<double> ground_antenna_clean_num;
  std::optional<double> ground_antenna_id;
  std::string description_txt;
  std::optional<std::string> corrective_action_txt;

  bool operator==(const DiscrepancyRecord&) const = default;
};

/// Text that the source tables use for an empty cell ("", "None", "null",
/// "NaN", any case, surrounding blanks ignored).
bool is_null_text(std::string_view s) noexcept;

/// Reads the CSV form of the discrepancy table. Columns are found by name
/// (case-insensitive); an unnamed leading index column is ignored. Null
/// corrective actions become nullopt. Throws Error(HeaderMissing) when the
/// description column is absent and Error(BadFormat) on unparsable ids.
std::vector<DiscrepancyRecord> parse_discrepancy_csv(std::string_view text);
/// Throws Error(IoError) plus the parse errors above.
std::vector<DiscrepancyRecord> read_discrepancy_csv(const std::filesystem::path& path);

inline constexpr std::string_view kPromptInstruction =
    "Suggest a corrective action for this discrepancy.";

/// Labeled lines SPACECRAFT_ID, GROUND_ANTENNA_ORIG_NUM,
/// GROUND_ANTENNA_CLEAN_NUM, GROUND_ANTENNA_ID, DESCRIPTION followed by
/// kPromptInstruction. Absent ids print as "unknown". Throws
/// Error(MissingField) when the description is blank.
std::string wrap_prompt(const DiscrepancyRecord& record);

/// Templated one-line description of a flagged event.
std::string describe_event(const detect::AnomalyEvent& event);

/// The event seen as a discrepancy record: spacecraft = SCID, antenna
/// numbers = DSS, antenna id unknown, description = describe_event.
DiscrepancyRecord event_record(const detect::AnomalyEvent& event);

/// Prompt for an event and the verifier's verdict text.
std::string wrap_prompt(const detect::AnomalyEvent& event, std::string_view verdict);

struct PromptResponsePair {
  std::string prompt;
  std::string response;

  bool operator==(const PromptResponsePair&) const = default;
};

struct PairDataset {
  std::vector<PromptResponsePair> pairs;
  std::size_t skipped = 0;
};

/// Records without a corrective action are skipped and counted.
PairDataset build_pair_dataset(const std::vector<DiscrepancyRecord>& records);
/// One {"prompt","response"} JSON object per line.
std::string to_jsonl(const PairDataset& dataset);
/// Throws Error(IoError).
void write_pair_dataset(const std::filesystem::path& path, const PairDataset& dataset);

struct TemplateBackend {
  bool operator==(const TemplateBackend&) const = default;
};

/// Text-completion endpoint: POST {model, prompt, stream:false} to
/// base_url + path, read the `response` field of the JSON reply.
struct RemoteBackend {
  std::string base_url;
  std::string model = "dr-assistant";
  std::string path = "/api/generate";
  double timeout_s = 10.0;

  bool operator==(const RemoteBackend&) const = default;
};

using ReasoningBackend = std::variant<TemplateBackend, RemoteBackend>;

std::string_view backend_tag(const ReasoningBackend& b) noexcept;

/// Outcome of one remote call; `text` is empty on failure and `error` says why.
struct RemoteReply {
  std::string text;
  std::string error;
};

RemoteReply call_remote(const RemoteBackend& backend, const std::string& prompt);

/// Corrective-action skeleton keyed by severity, model kind and feature.
std::string template_action(const detect::AnomalyEvent& event);

/// Verifier verdict in words, from the event status and proposed action.
std::string verdict_text(const detect::AnomalyEvent& event);

struct DiscrepancyReport {
  std::string event_id;
  TrackKey key;
  Micros timestamp = 0;
  std::optional<verify::Severity> severity;
  std::string verdict;
  std::string description;
  std::string suggested_action;
  /// "template" or "remote": the backend that produced suggested_action.
  std::string backend;
  std::vector<std::string> generation_log;
  detect::AnomalyEvent event;

  bool operator==(const DiscrepancyReport&) const = default;
};

/// Never fails: remote errors and empty replies fall back to the template
/// backend with a warning in the generation log.
DiscrepancyReport generate_report(const detect::AnomalyEvent& event, const ReasoningBackend& backend);

/// Sections in fixed order: Summary, Data, Severity, Verdict, Suggested
/// Action, Provenance.
std::string render_report_markdown(const DiscrepancyReport& report);

nlohmann::ordered_json to_json(const DiscrepancyReport& r);
/// Throws Error(BadFormat).
DiscrepancyReport report_from_json(const nlohmann::ordered_json& j);

}  // namespace tw::report
