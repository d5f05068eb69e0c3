// tw: command-line front end for ingest, training, detection, review,
// serving, reporting and event-log replay.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tw/agent/workflow.hpp"
#include "tw/detect/detect.hpp"
#include "tw/error.hpp"
#include "tw/ingest/pipeline.hpp"
#include "tw/nn/train.hpp"
#include "tw/prep/scaler.hpp"
#include "tw/prep/serialize.hpp"
#include "tw/report/report.hpp"
#include "tw/service/service.hpp"
#include "tw/track/canonical_csv.hpp"

#include <CLI11.hpp>

namespace {

using namespace tw;
using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitBadInput = 2;
constexpr int kExitInternal = 3;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::ShapeMismatch:
    case Errc::OddWidth:
    case Errc::EmptyBatch:
    case Errc::NonFiniteLoss:
      return kExitInternal;
    default:
      return kExitBadInput;
  }
}

Micros parse_instant_or_throw(const std::string& text) {
  const auto t = parse_iso8601(text);
  if (!t) throw Error(Errc::BadConfig, "bad timestamp '" + text + "'");
  return *t;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size() && !s.empty()) {
    const auto comma = s.find(',', pos);
    const auto item = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

// ---- options shared by train and run ----------------------------------------

struct ModelOptions {
  std::string dataset;
  std::string track;
  std::string features;
  std::string model;
  int epochs = 0;
  int hidden = 0;
  int window = 0;
  double lr = 0.0;
  std::optional<std::uint64_t> seed;
  std::string config_file;

  void add(CLI::App* app) {
    app->add_option("--dataset", dataset, "Canonical CSV path or synthetic:rows=..,spikes=..,seed=..")->required();
    app->add_option("--track", track, "Track key DSS:SCID (default: first track)");
    app->add_option("--features", features, "Comma-separated modeled columns");
    app->add_option("--model", model, "lstm | gan-lstm | tst (default lstm)");
    app->add_option("--epochs", epochs, "Training epochs");
    app->add_option("--hidden", hidden, "Hidden width");
    app->add_option("--window", window, "Window length");
    app->add_option("--lr", lr, "Learning rate");
    app->add_option("--seed", seed, "Seed");
    app->add_option("--config", config_file, "Workflow config JSON file (flags override it)");
  }

  ordered_json to_config() const {
    ordered_json j = ordered_json::object();
    if (!config_file.empty()) {
      j = ordered_json::parse(read_text_file(config_file), nullptr, false);
      if (j.is_discarded() || !j.is_object()) throw Error(Errc::BadConfig, "config file is not a JSON object");
    }
    if (!track.empty()) j["track"] = track;
    if (!features.empty()) j["features"] = split_list(features);
    if (!model.empty()) j["model"]["kind"] = model;
    if (hidden > 0) j["model"]["hidden_size"] = hidden;
    if (epochs > 0) j["hyper"]["epochs"] = epochs;
    if (lr > 0) j["hyper"]["lr"] = lr;
    if (window > 0) j["window"]["length"] = window;
    if (seed) j["seed"] = *seed;
    return j;
  }
};

// ---- subcommands -----------------------------------------------------------

int cmd_ingest(const std::string& mailbox, const std::string& out, const std::string& from, const std::string& until,
               const std::string& to, const std::string& subject, const std::string& features,
               const std::string& equipment, int dss) {
  ingest::MailboxFilter filter;
  if (!from.empty()) filter.from = parse_instant_or_throw(from);
  if (!until.empty()) filter.until = parse_instant_or_throw(until);
  if (!to.empty()) filter.recipient = to;
  if (!subject.empty()) filter.subject_contains = subject;
  ingest::CecSelection sel;
  if (!features.empty()) sel.features = split_list(features);
  if (!equipment.empty()) sel.equipment = equipment;
  if (dss > 0) sel.dss = dss;
  const auto summary = ingest::run_ingest(mailbox, out, filter, sel);
  fmt::print("messages: {} ({} unrecognized)\n", summary.messages, summary.unknown_messages);
  for (const auto& o : summary.outputs) fmt::print("wrote {} ({} rows)\n", o.path.string(), o.rows);
  for (const auto& [group, r] : summary.reports) {
    fmt::print("{}: {} parsed, {} rejected{}{}\n", group, r.rows_parsed, r.rows_rejected, r.empty_body ? ", empty body" : "",
               r.columns_missing.empty() ? "" : fmt::format(", missing [{}]", fmt::join(r.columns_missing, ", ")));
  }
  for (const auto& s : summary.skipped) fmt::print("skipped: {}\n", s);
  return kExitOk;
}

int cmd_train(const ModelOptions& opts, const std::string& out) {
  agent::WorkflowConfig cfg = agent::config_from_json(opts.to_config());
  cfg.dataset = agent::DatasetRef::parse(opts.dataset);
  const auto graph = agent::build_workflow(cfg, std::filesystem::path(out));
  auto state = agent::initial_state(cfg);
  const auto score = *graph.index_of("score");
  while (!state.done && state.cursor <= score) state = agent::step(graph, std::move(state));
  for (const auto& l : state.logs) fmt::print("[{}] {}\n", l.node, l.text);
  if (state.failed) return kExitBadInput;
  const auto& model = *state.work->model;
  for (std::size_t e = 0; e < model.history.size(); ++e) {
    fmt::print("epoch {:3d}  train {:.6g}  validation {:.6g}\n", e + 1, model.history[e].train, model.history[e].validation);
  }
  fmt::print("checkpoint: {}\n", state.artifacts.at("checkpoint"));
  return kExitOk;
}

int cmd_detect(const std::string& dataset, const std::string& track_text, const std::string& model_dir, double k,
               double percentile, const std::string& out) {
  const std::filesystem::path dir(model_dir);
  const auto trained = nn::load_checkpoint(dir / "checkpoints" / "model.json");
  const auto prep_doc = prep::prep_from_json(ordered_json::parse(read_text_file(dir / "checkpoints" / "prep.json")));
  std::optional<TrackKey> track;
  if (!track_text.empty()) {
    track = parse_track_key(track_text);
    if (!track) throw Error(Errc::BadConfig, "bad track key '" + track_text + "'");
  }
  const TrackFrame frame = impute_missing(agent::load_dataset(agent::DatasetRef::parse(dataset), track),
                                          ImputePolicy::ForwardFillThenDropLeading);
  const TrackFrame scaled = prep::apply_minmax(frame, prep_doc.scaler, prep::ScaleDirection::Forward);
  const auto windows = prep::make_windows(scaled, trained.features, {trained.config.seq_len, 1, 0});
  const auto series = nn::reconstruct_errors(trained, windows);
  const auto method = percentile > 0 ? detect::ThresholdMethod::percentile(percentile) : detect::ThresholdMethod::mean_k_sigma(k);
  const double threshold = detect::compute_threshold(series.errors, method);
  auto events = detect::flag_anomalies(series, threshold, frame, trained.config.kind);
  ordered_json arr = ordered_json::array();
  for (auto& e : events) arr.push_back(detect::to_json(detect::attach_context(std::move(e), frame)));
  fmt::print("windows {}  threshold {:.6g}  flagged {}\n", series.errors.size(), threshold, arr.size());
  if (out.empty()) {
    std::cout << arr.dump(2) << "\n";
  } else {
    write_text_file(out, arr.dump(2) + "\n");
    fmt::print("events: {}\n", out);
  }
  return kExitOk;
}

void print_event(const detect::AnomalyEvent& e) {
  fmt::print("{}  DSS-{}/SCID {}  {}  error {:.6g} / threshold {:.6g}{}  severity {}  proposed {}  [{}]\n", e.id, e.key.dss,
             e.key.scid, format_iso8601(e.timestamp), e.error, e.threshold, e.feature.empty() ? "" : "  " + e.feature,
             e.severity ? verify::to_string(*e.severity) : "-", e.proposed_action ? verify::to_string(*e.proposed_action) : "-",
             detect::to_string(e.status));
}

void print_feedback(const service::FeedbackResult& r) {
  fmt::print("  -> {} (Q[{}][{}] {:+.6g} = {:.6g}){}\n", detect::to_string(r.status), verify::to_string(r.state),
             verify::to_string(r.action), r.delta(), r.q_after,
             r.next_action ? fmt::format("; next proposal {}", verify::to_string(*r.next_action)) : std::string());
}

int cmd_review(service::Service& svc, const std::string& run, const std::string& event, const std::string& verdict_text,
               const std::string& all, const std::string& note, const std::string& op) {
  const std::optional<std::string> run_id = run.empty() ? std::nullopt : std::optional(run);
  if (!event.empty()) {
    const auto v = verify::parse_verdict(verdict_text);
    if (!v) throw Error(Errc::BadConfig, "--verdict must be agree or disagree");
    print_event(svc.event(event));
    print_feedback(svc.submit_feedback(event, {*v, note, op}));
    return kExitOk;
  }
  if (!all.empty()) {
    const auto v = verify::parse_verdict(all);
    if (!v) throw Error(Errc::BadConfig, "--all must be agree or disagree");
    // Info requests re-open events, so keep going until nothing is pending.
    for (int pass = 0; pass < 8; ++pass) {
      const auto pending = svc.list_pending(run_id);
      if (pending.empty()) break;
      for (const auto& e : pending) {
        print_event(e);
        print_feedback(svc.submit_feedback(e.id, {*v, note, op}));
      }
    }
    fmt::print("pending: {}\n", svc.list_pending(run_id).size());
    return kExitOk;
  }
  for (;;) {
    const auto pending = svc.list_pending(run_id);
    if (pending.empty()) {
      fmt::print("no pending anomalies\n");
      return kExitOk;
    }
    const auto& e = pending.front();
    print_event(e);
    fmt::print("[a]gree / [d]isagree / [q]uit > ");
    std::fflush(stdout);
    std::string line;
    if (!std::getline(std::cin, line) || line == "q") return kExitOk;
    std::optional<verify::Verdict> v;
    if (line == "a" || line == "agree") v = verify::Verdict::Agree;
    if (line == "d" || line == "disagree") v = verify::Verdict::Disagree;
    if (!v) {
      fmt::print("answer a, d or q\n");
      continue;
    }
    print_feedback(svc.submit_feedback(e.id, {*v, note, op}));
  }
}

std::function<void()> g_stop;
extern "C" void on_signal(int) {
  if (g_stop) g_stop();
}

int cmd_serve(service::Service& svc, const std::string& host, int port, const std::string& static_dir) {
  service::HttpOptions opts{host, port, static_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(static_dir)};
  service::HttpServer server(svc, opts);
  g_stop = [&server] { server.stop(); };
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  spdlog::info("serving {} on {}:{}", svc.data_dir().string(), host, port);
  server.listen();
  svc.wait_all();
  return kExitOk;
}

int cmd_report(service::Service* svc, const std::string& event, const std::string& format, const std::string& pairs_from,
               const std::string& out) {
  if (!pairs_from.empty()) {
    const auto records = report::read_discrepancy_csv(pairs_from);
    const auto dataset = report::build_pair_dataset(records);
    if (out.empty()) {
      std::cout << report::to_jsonl(dataset);
    } else {
      report::write_pair_dataset(out, dataset);
    }
    std::cerr << fmt::format("records {}  pairs {}  skipped {}\n", records.size(), dataset.pairs.size(), dataset.skipped);
    return kExitOk;
  }
  if (event.empty()) {
    for (const auto& id : svc->report_ids()) fmt::print("{}\n", id);
    return kExitOk;
  }
  const auto rep = svc->report(event);
  const std::string text = format == "json" ? report::to_json(rep).dump(2) + "\n" : report::render_report_markdown(rep);
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text_file(out, text);
  }
  return kExitOk;
}

int cmd_replay(const std::string& path) {
  service::ServiceState state = service::fresh_state();
  try {
    service::replay_into(path, state);
  } catch (const Error& e) {
    if (e.code() != Errc::CorruptLog) throw;
    std::cout << service::to_json(state).dump(2) << "\n";
    std::cerr << fmt::format("corrupt log at seq {}: {}\n", e.detail(), e.what());
    return kExitBadInput;
  }
  std::cout << service::to_json(state).dump(2) << "\n";
  return kExitOk;
}

int cmd_run(service::Service& svc, const ModelOptions& opts) {
  const auto id = svc.start_run(opts.dataset, opts.to_config());
  svc.wait(id);
  const auto rec = svc.run(id);
  fmt::print("run {} {}\n", rec.id, service::to_string(rec.status));
  if (rec.decision) fmt::print("decision: {}\n", *rec.decision);
  if (!rec.error.empty()) fmt::print("error: {}\n", rec.error);
  fmt::print("pending: {}\n", svc.list_pending(id).size());
  return rec.status == service::RunStatus::Completed ? kExitOk : kExitInternal;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"telewatch: DSN telemetry anomaly detection with operator feedback"};
  app.require_subcommand(1);
  std::string data_dir = tw::service::default_data_dir().string();
  std::string log_level = "info";
  app.add_option("--data-dir", data_dir, "Data root (default: $TW_DATA_DIR or ./tw-data)");
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse a mailbox of JPL/CEC messages into canonical CSVs");
  std::string mailbox, ingest_out, from, until, to, subject, cec_features, equipment;
  int cec_dss = 0;
  ingest_cmd->add_option("--mailbox", mailbox, "Directory of .msg/.eml files")->required();
  ingest_cmd->add_option("--out", ingest_out, "Output directory")->required();
  ingest_cmd->add_option("--from", from, "Received at or after (ISO 8601)");
  ingest_cmd->add_option("--until", until, "Received at or before (ISO 8601)");
  ingest_cmd->add_option("--to", to, "Recipient address");
  ingest_cmd->add_option("--subject", subject, "Subject substring");
  ingest_cmd->add_option("--cec-features", cec_features, "Comma-separated CEC features to keep");
  ingest_cmd->add_option("--equipment", equipment, "CEC equipment class filter");
  ingest_cmd->add_option("--dss", cec_dss, "Station for CEC files without a dss column");

  // train
  auto* train_cmd = app.add_subcommand("train", "Preprocess a track and train a reconstruction model");
  ModelOptions train_opts;
  std::string train_out;
  train_opts.add(train_cmd);
  train_cmd->add_option("--out", train_out, "Output directory for checkpoints and the error series")->required();

  // detect
  auto* detect_cmd = app.add_subcommand("detect", "Score a track with a trained model and flag anomalies");
  std::string detect_dataset, detect_track, model_dir, detect_out;
  double k = 3.0, percentile = 0.0;
  detect_cmd->add_option("--dataset", detect_dataset, "Canonical CSV or synthetic spec")->required();
  detect_cmd->add_option("--track", detect_track, "Track key DSS:SCID");
  detect_cmd->add_option("--model-dir", model_dir, "Directory written by `tw train`")->required();
  detect_cmd->add_option("--k", k, "Threshold: mean + k sigma");
  detect_cmd->add_option("--percentile", percentile, "Threshold: nearest-rank percentile instead of k sigma");
  detect_cmd->add_option("--out", detect_out, "Write events JSON here");

  // run
  auto* run_cmd = app.add_subcommand("run", "Run the full workflow into the data root and wait for it");
  ModelOptions run_opts;
  run_opts.add(run_cmd);

  // review
  auto* review_cmd = app.add_subcommand("review", "Give operator feedback on pending anomalies");
  std::string review_run, review_event, review_verdict, review_all, note, op = "cli";
  review_cmd->add_option("--run", review_run, "Only events of this run");
  review_cmd->add_option("--event", review_event, "Event id (with --verdict)");
  review_cmd->add_option("--verdict", review_verdict, "agree | disagree");
  review_cmd->add_option("--all", review_all, "Apply this verdict to every pending event");
  review_cmd->add_option("--note", note, "Free-text note");
  review_cmd->add_option("--operator", op, "Operator id");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Serve the JSON API (and optionally the UI bundle)");
  std::string host = "127.0.0.1", static_dir;
  int port = 8080;
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--port", port, "Port");
  serve_cmd->add_option("--static", static_dir, "Directory served at /");

  // report
  auto* report_cmd = app.add_subcommand("report", "Print a discrepancy report or build the prompt/response dataset");
  std::string report_event, report_format = "markdown", pairs_from, report_out;
  report_cmd->add_option("--event", report_event, "Event id (lists report ids when omitted)");
  report_cmd->add_option("--format", report_format, "markdown | json");
  report_cmd->add_option("--pairs-from", pairs_from, "Discrepancy CSV to turn into JSON-lines pairs");
  report_cmd->add_option("--out", report_out, "Output file");

  // replay
  auto* replay_cmd = app.add_subcommand("replay", "Rebuild state from an event log and print it");
  std::string log_path;
  replay_cmd->add_option("--log", log_path, "Event log (default: <data-dir>/events.jsonl)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitBadInput;
  }

  spdlog::set_level(spdlog::level::from_str(log_level));
  try {
    if (*ingest_cmd) return cmd_ingest(mailbox, ingest_out, from, until, to, subject, cec_features, equipment, cec_dss);
    if (*train_cmd) return cmd_train(train_opts, train_out);
    if (*detect_cmd) return cmd_detect(detect_dataset, detect_track, model_dir, k, percentile, detect_out);
    if (*replay_cmd) return cmd_replay(log_path.empty() ? (std::filesystem::path(data_dir) / "events.jsonl").string() : log_path);
    if (*report_cmd && !pairs_from.empty()) return cmd_report(nullptr, "", "", pairs_from, report_out);

    service::ServiceOptions sopts;
    sopts.data_dir = data_dir;
    sopts.background = !*run_cmd;
    service::Service svc(sopts);
    if (*run_cmd) return cmd_run(svc, run_opts);
    if (*review_cmd) return cmd_review(svc, review_run, review_event, review_verdict, review_all, note, op);
    if (*serve_cmd) return cmd_serve(svc, host, port, static_dir);
    if (*report_cmd) return cmd_report(&svc, report_event, report_format, "", report_out);
  } catch (const tw::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitBadInput;
}
