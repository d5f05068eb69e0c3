#include <gtest/gtest.h>

#include <filesystem>
#include <thread>

#include "tw/agent/workflow.hpp"
#include "tw/error.hpp"
#include "tw/track/canonical_csv.hpp"

using namespace tw;
using namespace tw::agent;
namespace fs = std::filesystem;

namespace {

// Small enough to run in a couple of seconds.
WorkflowConfig small_config(std::uint64_t seed = 3) {
  WorkflowConfig c = default_config();
  c.dataset = DatasetRef::parse("synthetic:rows=400,spikes=3,seed=" + std::to_string(seed));
  c.model.hidden_size = 16;
  c.hyper.epochs = 30;
  c.forest.n_trees = 20;
  c.seed = seed;
  return c;
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tw_agent_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(DatasetRef, ParseAndFormat) {
  const auto s = DatasetRef::parse("synthetic:rows=1000,spikes=5,seed=7,dss=14,scid=99");
  ASSERT_TRUE(s.synthetic.has_value());
  EXPECT_EQ(s.synthetic->rows, 1000u);
  EXPECT_EQ(s.synthetic->spikes, 5u);
  EXPECT_EQ(s.synthetic->seed, 7u);
  EXPECT_EQ(s.synthetic->key, (TrackKey{14, 99}));
  EXPECT_EQ(DatasetRef::parse(s.to_string()).to_string(), s.to_string());
  const auto p = DatasetRef::parse("data/track.csv");
  EXPECT_EQ(p.path, fs::path("data/track.csv"));
  for (const char* bad : {"synthetic:rows=abc", "synthetic:bogus=1", "synthetic:rows"}) {
    try {
      DatasetRef::parse(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::BadDataset) << bad;
    }
  }
}

TEST(Config, JsonRoundTripAndPartialMerge) {
  const WorkflowConfig c = small_config();
  const auto j = to_json(c);
  EXPECT_EQ(to_json(config_from_json(j)), j);
  const WorkflowConfig merged = config_from_json({{"seed", 42}, {"hyper", {{"epochs", 2}}}, {"unknown_field", 1}}, c);
  EXPECT_EQ(merged.seed, 42u);
  EXPECT_EQ(merged.hyper.epochs, 2);
  EXPECT_EQ(merged.hyper.lr, c.hyper.lr);
  EXPECT_EQ(merged.model.hidden_size, 16);
}

TEST(Config, ValidationErrors) {
  WorkflowConfig c = small_config();
  c.window.horizon = 2;
  EXPECT_THROW(c.validate(), Error);
  c = small_config();
  c.train_fraction = 1.5;
  EXPECT_THROW(c.validate(), Error);
  try {
    config_from_json({{"impute", "sideways"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BadConfig);
  }
}

TEST(FeedbackQueue, ExactEntriesBeforeWildcard) {
  FeedbackQueue q;
  q.push("*", {verify::Verdict::Agree, "all", "op"});
  q.push("e1", {verify::Verdict::Disagree, "", "op"});
  EXPECT_EQ(q.take("e1")->verdict, verify::Verdict::Disagree);
  EXPECT_EQ(q.take("e1")->verdict, verify::Verdict::Agree);
  EXPECT_EQ(q.take("e2")->note, "all");
  EXPECT_EQ(q.size(), 1u);
  FeedbackQueue empty;
  EXPECT_FALSE(empty.take("x").has_value());
  EXPECT_FALSE(empty.wait(std::chrono::milliseconds(10)));
  std::thread t([&] { empty.push("x", {}); });
  EXPECT_TRUE(empty.wait(std::chrono::milliseconds(2000)));
  t.join();
}

TEST(Workflow, NodeOrder) {
  const auto g = build_workflow(small_config());
  EXPECT_EQ(g.node_names(), (std::vector<std::string>{"ingest", "preprocess", "score", "verify", "explain", "plan",
                                                      "human_feedback", "report"}));
  EXPECT_EQ(g.index_of("verify"), 3u);
  EXPECT_FALSE(g.index_of("nope").has_value());
}

TEST(Workflow, EndToEndWithoutFeedbackSource) {
  const fs::path dir = temp_dir("e2e");
  const auto cfg = small_config();
  const WorkflowState s = run(build_workflow(cfg, dir), initial_state(cfg));
  ASSERT_FALSE(s.failed) << (s.logs.empty() ? "" : s.logs.back().text);
  EXPECT_TRUE(s.done);
  std::string trace;
  for (const auto& l : s.logs) trace += l.node + ": " + l.text + "\n";
  EXPECT_GE(s.anomalies.size(), 1u) << trace;
  EXPECT_GE(s.reports.size(), 1u);
  ASSERT_TRUE(s.decision.has_value());
  bool skipped = false;
  for (const auto& l : s.logs) skipped = skipped || (l.node == "human_feedback" && l.text.find("skipped") == 0);
  EXPECT_TRUE(skipped);
  for (const auto& e : s.anomalies) {
    EXPECT_TRUE(e.severity.has_value());
    EXPECT_TRUE(e.proposed_action.has_value());
    EXPECT_EQ(e.status, detect::EventStatus::Pending);
  }
  for (const char* f : {"state.json", "logs.txt", "errors.json", "checkpoints/model.json", "checkpoints/prep.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  for (const auto& r : s.reports) EXPECT_TRUE(fs::exists(dir / "reports" / (r.event_id + ".md")));
  fs::remove_all(dir);
}

TEST(Workflow, SeededRunsAreIdentical) {
  const auto cfg = small_config(5);
  const auto a = run(build_workflow(cfg), initial_state(cfg));
  const auto b = run(build_workflow(cfg), initial_state(cfg));
  EXPECT_EQ(to_json(a, false), to_json(b, false));
  EXPECT_EQ(a.reports, b.reports);
}

TEST(Workflow, WildcardAgreeResolvesEvents) {
  auto cfg = small_config();
  cfg.feedback_source = true;
  auto queue = std::make_shared<FeedbackQueue>();
  queue->push("*", {verify::Verdict::Agree, "", "tester"});
  const auto s = run(build_workflow(cfg, std::nullopt, queue), initial_state(cfg));
  ASSERT_FALSE(s.failed);
  EXPECT_GE(s.feedback.size(), s.anomalies.size());
  std::int64_t visits = 0;
  for (const auto& row : s.qtable.visits) {
    for (auto v : row) visits += v;
  }
  EXPECT_EQ(visits, static_cast<std::int64_t>(s.feedback.size()));
  EXPECT_LE(s.feedback_iterations, cfg.feedback_loop_max);
  // Agreeing with RequestInfo leaves the event waiting; everything else resolves.
  for (const auto& e : s.anomalies) {
    if (e.status == detect::EventStatus::InfoRequested) {
      EXPECT_EQ(s.feedback_iterations, cfg.feedback_loop_max);
    } else {
      EXPECT_FALSE(detect::is_open(e.status));
    }
  }
}

TEST(Workflow, FailureClearsDecision) {
  auto cfg = small_config();
  cfg.dataset = DatasetRef::parse("/nonexistent/file.csv");
  const auto s = run(build_workflow(cfg), initial_state(cfg));
  EXPECT_TRUE(s.failed);
  EXPECT_TRUE(s.done);
  EXPECT_FALSE(s.decision.has_value());
  ASSERT_FALSE(s.logs.empty());
  EXPECT_EQ(s.logs.back().text.rfind("failed:", 0), 0u);
}

TEST(Workflow, LoadsCanonicalCsvDataset) {
  const fs::path dir = temp_dir("csv");
  SyntheticSpec spec;
  spec.rows = 300;
  spec.spikes = 2;
  write_text_file(dir / "track.csv", write_canonical_csv(make_synthetic_track(spec).frame));
  auto cfg = small_config();
  cfg.dataset = DatasetRef::parse((dir / "track.csv").string());
  const TrackFrame f = load_dataset(cfg.dataset, std::nullopt);
  EXPECT_EQ(f.rows(), 300u);
  try {
    load_dataset(cfg.dataset, TrackKey{1, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BadDataset);
  }
  const auto s = run(build_workflow(cfg), initial_state(cfg));
  EXPECT_FALSE(s.failed);
  fs::remove_all(dir);
}
