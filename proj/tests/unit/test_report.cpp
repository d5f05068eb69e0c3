#include <gtest/gtest.h>

#include <filesystem>

#include "tw/error.hpp"
#include "tw/report/report.hpp"
#include "tw/track/canonical_csv.hpp"

#include "../support/stub_llm.hpp"

using namespace tw;
using namespace tw::report;
namespace fs = std::filesystem;

namespace {

const fs::path kExport = fs::path(TW_FIXTURE_DIR) / "report" / "discrepancy_export.csv";

detect::AnomalyEvent sample_event() {
  detect::AnomalyEvent e;
  e.key = {34, 21};
  e.timestamp = 1735689600000000 + 3600000000LL;
  e.id = detect::event_id(e.key, e.timestamp, nn::ModelKind::LstmRecon);
  e.window = 12;
  e.error = 0.9;
  e.threshold = 0.3;
  e.feature = "SSNR";
  e.snapshot = {{"SSNR", 1.4}, {"PCNO", 0.2}};
  e.context.wind = 14.0;
  e.severity = verify::Severity::High;
  e.proposed_action = verify::Action::Confirm;
  return e;
}

}  // namespace

TEST(DiscrepancyCsv, ReadsExportFixture) {
  const auto records = read_discrepancy_csv(kExport);
  ASSERT_EQ(records.size(), 10u);
  EXPECT_EQ(records[1].spacecraft_id, 108.0);
  EXPECT_EQ(records[1].ground_antenna_id, 219.0);
  EXPECT_EQ(records[1].description_txt, "Receiver unexpectedly out of lock at 10:20:03.");
  // "None" in the export reads as absent.
  EXPECT_FALSE(records[0].corrective_action_txt.has_value());
}

TEST(DiscrepancyCsv, Errors) {
  try {
    parse_discrepancy_csv("A,B\n1,2\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::HeaderMissing);
  }
  EXPECT_THROW(parse_discrepancy_csv("SPACECRAFT_ID,DESCRIPTION_TXT\nabc,x\n"), Error);
  try {
    read_discrepancy_csv("/nonexistent/t4.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::IoError);
  }
}

TEST(NullText, Variants) {
  for (const char* s : {"", "None", "none", " NULL ", "NaN", "nan"}) EXPECT_TRUE(is_null_text(s)) << s;
  EXPECT_FALSE(is_null_text("Nonetheless"));
}

TEST(Prompt, ExportRowOne) {
  const auto records = read_discrepancy_csv(kExport);
  const std::string p = wrap_prompt(records[1]);
  EXPECT_NE(p.find("SPACECRAFT_ID: 108"), std::string::npos);
  EXPECT_NE(p.find("GROUND_ANTENNA_ID: 219"), std::string::npos);
  EXPECT_NE(p.find("Receiver unexpectedly out of lock at 10:20:03."), std::string::npos);
  EXPECT_NE(p.find(kPromptInstruction), std::string::npos);
  EXPECT_EQ(p, wrap_prompt(records[1]));
}

TEST(Prompt, BlankDescriptionIsMissingField) {
  DiscrepancyRecord r;
  r.description_txt = "  ";
  try {
    wrap_prompt(r);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingField);
  }
  r.description_txt = "x";
  EXPECT_NE(wrap_prompt(r).find("SPACECRAFT_ID: unknown"), std::string::npos);
}

TEST(PairDataset, SkipsNullCorrectiveActions) {
  const auto records = read_discrepancy_csv(kExport);
  std::size_t nulls = 0;
  for (const auto& r : records) nulls += !r.corrective_action_txt || is_null_text(*r.corrective_action_txt);
  const PairDataset ds = build_pair_dataset(records);
  EXPECT_EQ(ds.skipped, nulls);
  EXPECT_EQ(ds.pairs.size(), records.size() - nulls);
  for (const auto& p : ds.pairs) EXPECT_FALSE(is_null_text(p.response));
  EXPECT_EQ(ds.pairs[0].response, "Signal reacquired. Carrier locked at 10:23:47...");

  const std::string jsonl = to_jsonl(ds);
  std::size_t lines = 0;
  for (char c : jsonl) lines += c == '\n';
  EXPECT_EQ(lines, ds.pairs.size());
  const auto first = nlohmann::json::parse(jsonl.substr(0, jsonl.find('\n')));
  EXPECT_EQ(first["response"], ds.pairs[0].response);

  const fs::path out = fs::temp_directory_path() / "tw_pairs_test.jsonl";
  write_pair_dataset(out, ds);
  EXPECT_EQ(read_text_file(out), jsonl);
  fs::remove(out);
}

TEST(Template, KeyedBySeverityAndFeature) {
  auto e = sample_event();
  const std::string high = template_action(e);
  e.severity = verify::Severity::Low;
  EXPECT_NE(template_action(e), high);
  EXPECT_NE(high.find("SSNR"), std::string::npos);
  EXPECT_EQ(template_action(e), template_action(e));
}

TEST(Verdict, Wording) {
  auto e = sample_event();
  EXPECT_EQ(verdict_text(e), "proposed confirm, awaiting operator");
  e.status = detect::EventStatus::Confirmed;
  EXPECT_EQ(verdict_text(e), "confirmed (proposed confirm)");
  e.status = detect::EventStatus::Rejected;
  EXPECT_EQ(verdict_text(e), "rejected (proposed confirm)");
}

TEST(Report, TemplateBackendRendersAllSections) {
  const auto r = generate_report(sample_event(), TemplateBackend{});
  EXPECT_EQ(r.backend, "template");
  EXPECT_EQ(r.suggested_action, template_action(sample_event()));
  const std::string md = render_report_markdown(r);
  std::size_t pos = 0;
  for (const char* h : {"## Summary", "## Data", "## Severity", "## Verdict", "## Suggested Action", "## Provenance"}) {
    const auto at = md.find(h);
    ASSERT_NE(at, std::string::npos) << h;
    EXPECT_GT(at, pos);
    pos = at;
  }
  EXPECT_EQ(md, render_report_markdown(generate_report(sample_event(), TemplateBackend{})));
}

TEST(Report, JsonRoundTrip) {
  const auto r = generate_report(sample_event(), TemplateBackend{});
  EXPECT_EQ(report_from_json(to_json(r)), r);
  EXPECT_THROW(report_from_json(nlohmann::ordered_json::array()), Error);
}

TEST(Remote, StubTextIsUsedVerbatim) {
  const std::string reply = "Re-point DSS-34 and verify the\nLNA bias.  Trailing spaces  ";
  tw::testing::StubLlm stub(reply);
  RemoteBackend backend{stub.url()};
  const auto r = generate_report(sample_event(), backend);
  EXPECT_EQ(r.backend, "remote");
  EXPECT_EQ(r.suggested_action, reply);
  EXPECT_EQ(stub.calls(), 1);
  const auto body = nlohmann::json::parse(stub.last_body());
  EXPECT_EQ(body["model"], "dr-assistant");
  EXPECT_EQ(body["stream"], false);
  EXPECT_NE(body["prompt"].get<std::string>().find(kPromptInstruction), std::string::npos);
}

TEST(Remote, FailuresFallBackToTemplate) {
  tw::testing::StubLlm stub;
  const auto expected = template_action(sample_event());
  for (auto mode : {tw::testing::StubLlm::Mode::ServerError, tw::testing::StubLlm::Mode::EmptyReply,
                    tw::testing::StubLlm::Mode::NotJson}) {
    stub.set_mode(mode);
    const auto r = generate_report(sample_event(), RemoteBackend{stub.url()});
    EXPECT_EQ(r.backend, "template");
    EXPECT_EQ(r.suggested_action, expected);
    ASSERT_FALSE(r.generation_log.empty());
    EXPECT_NE(r.generation_log[0].find("fell back to template"), std::string::npos);
  }
  EXPECT_EQ(stub.calls(), 3);
}

TEST(Remote, TimeoutFallsBack) {
  tw::testing::StubLlm stub;
  stub.set_mode(tw::testing::StubLlm::Mode::Slow);
  RemoteBackend backend{stub.url()};
  backend.timeout_s = 0.3;
  const auto r = generate_report(sample_event(), backend);
  EXPECT_EQ(r.backend, "template");
}

TEST(Remote, UnreachableFallsBack) {
  const RemoteBackend backend{"http://127.0.0.1:" + std::to_string(tw::testing::closed_port())};
  const RemoteReply reply = call_remote(backend, "hi");
  EXPECT_TRUE(reply.text.empty());
  EXPECT_FALSE(reply.error.empty());
  EXPECT_EQ(generate_report(sample_event(), backend).backend, "template");
  EXPECT_EQ(generate_report(sample_event(), RemoteBackend{"not a url"}).backend, "template");
}
