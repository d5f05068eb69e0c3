#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <thread>

#include "tw/error.hpp"
#include "tw/service/event_log.hpp"
#include "tw/service/service.hpp"
#include "tw/track/canonical_csv.hpp"

#include "../support/stub_llm.hpp"

using namespace tw;
using namespace tw::service;
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kDataset = "synthetic:rows=400,spikes=3,seed=3";

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tw_service_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ServiceOptions small_options(const fs::path& dir, bool background = true) {
  ServiceOptions o;
  o.data_dir = dir;
  o.background = background;
  o.base_config.model.hidden_size = 16;
  o.base_config.hyper.epochs = 30;
  o.base_config.forest.n_trees = 20;
  o.base_config.seed = 3;
  return o;
}

#define EXPECT_REPLAY_MATCHES(svc) EXPECT_EQ(replay_log((svc).log_path(), verify::QHyper{}), (svc).state())

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no tw::Error thrown";
  return Errc::BadFormat;
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(RunIds, SortableAndDistinct) {
  RunIdGenerator gen;
  std::vector<std::string> ids;
  for (int i = 0; i < 100; ++i) ids.push_back(gen.next(1735689600000000 + (i / 10) * 1000));
  for (const auto& id : ids) {
    EXPECT_EQ(id.size(), 26u);
    EXPECT_EQ(id.find_first_not_of("0123456789ABCDEFGHJKMNPQRSTVWXYZ"), std::string::npos);
  }
  EXPECT_TRUE(std::is_sorted(ids.begin(), ids.end()));
  EXPECT_EQ(std::adjacent_find(ids.begin(), ids.end()), ids.end());
}

TEST(EventLogFile, LineRoundTrip) {
  const LogEvent e{7, 123, std::string(kind::kRunStarted), {{"x", 1}}};
  const LogEvent back = parse_line(to_line(e));
  EXPECT_EQ(back.seq, 7u);
  EXPECT_EQ(back.kind, e.kind);
  EXPECT_EQ(back.payload, e.payload);
  EXPECT_EQ(code_of([] { parse_line("{not json"); }), Errc::BadFormat);
}

TEST(EventLogFile, EmptyOrMissingLogIsFreshState) {
  const fs::path dir = fresh_dir("empty");
  EXPECT_EQ(replay_log(dir / "missing.jsonl"), fresh_state());
  write_text_file(dir / "empty.jsonl", "");
  EXPECT_EQ(replay_log(dir / "empty.jsonl"), fresh_state());
}

TEST(EventLogFile, ThreeEventsReplayToSameQTable) {
  const fs::path dir = fresh_dir("three");
  ServiceState live = fresh_state();
  {
    EventLog log(dir / "events.jsonl", 0);
    verify::QHyper h;
    auto t = live.qtable;
    for (int i = 0; i < 3; ++i) {
      t = verify::apply_feedback(t, verify::Severity::High, verify::Action::Confirm, verify::Verdict::Agree, h);
      apply_event(live, log.append(kind::kQTableUpdated, {{"table", verify::to_json(t)}}));
    }
  }
  const ServiceState back = replay_log(dir / "events.jsonl");
  EXPECT_EQ(back.qtable, live.qtable);
  EXPECT_EQ(back.last_seq, 3u);
}

TEST(EventLogFile, TruncatedLastLineIsCorruptAtThatSeq) {
  const fs::path dir = fresh_dir("torn");
  const fs::path path = dir / "events.jsonl";
  ServiceState live = fresh_state();
  {
    EventLog log(path, 0);
    verify::QHyper h;
    auto t = verify::apply_feedback(live.qtable, verify::Severity::Low, verify::Action::Reject, verify::Verdict::Agree, h);
    apply_event(live, log.append(kind::kQTableUpdated, {{"table", verify::to_json(t)}}));
    apply_event(live, log.append(kind::kQTableUpdated, {{"table", verify::to_json(t)}}));
  }
  std::string text = read_text_file(path);
  const auto good = text.size();
  text += R"({"seq":3,"kind":"qtable-upd)";
  write_text_file(path, text);

  ServiceState state = fresh_state();
  std::uint64_t good_bytes = 0;
  try {
    replay_into(path, state, &good_bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::CorruptLog);
    EXPECT_EQ(e.detail(), 3);
  }
  EXPECT_EQ(state, live);
  EXPECT_EQ(good_bytes, good);
}

TEST(EventLogFile, NonIncreasingSeqIsCorrupt) {
  const fs::path dir = fresh_dir("seq");
  const LogEvent a{1, 0, std::string(kind::kQTableUpdated), {{"table", verify::to_json(verify::QTable{})}}};
  write_text_file(dir / "events.jsonl", to_line(a) + "\n" + to_line(a) + "\n");
  EXPECT_EQ(code_of([&] { replay_log(dir / "events.jsonl"); }), Errc::CorruptLog);
}

TEST(ServiceRuns, LifecycleAndErrors) {
  const fs::path dir = fresh_dir("lifecycle");
  Service svc(small_options(dir));
  EXPECT_REPLAY_MATCHES(svc);
  const std::string a = svc.start_run(kDataset);
  EXPECT_REPLAY_MATCHES(svc);
  const std::string b = svc.start_run(kDataset);
  EXPECT_NE(a, b);
  EXPECT_LT(a, b);
  svc.wait_all();
  EXPECT_EQ(svc.run(a).status, RunStatus::Completed);
  EXPECT_TRUE(svc.run(a).finished.has_value());
  EXPECT_GE(svc.list_pending(a).size(), 1u);
  // Both runs flag the same events; they are tracked once.
  EXPECT_EQ(svc.list_pending(a).size(), svc.list_pending().size());
  const auto pending = svc.list_pending();
  for (std::size_t i = 1; i < pending.size(); ++i) EXPECT_LE(pending[i - 1].timestamp, pending[i].timestamp);
  EXPECT_REPLAY_MATCHES(svc);

  EXPECT_EQ(code_of([&] { svc.start_run("does/not/exist.csv"); }), Errc::BadDataset);
  EXPECT_EQ(code_of([&] { svc.start_run(kDataset, {{"impute", "sideways"}}); }), Errc::BadConfig);
  EXPECT_EQ(code_of([&] { svc.run("NOPE"); }), Errc::UnknownRun);
  EXPECT_EQ(code_of([&] { svc.list_pending(std::string("NOPE")); }), Errc::UnknownRun);
  EXPECT_EQ(code_of([&] { svc.event("0000000000000000"); }), Errc::UnknownEvent);

  const auto series = svc.error_series(a, TrackKey{34, 21});
  EXPECT_EQ(series["errors"].size(), series["timestamps_us"].size());
  EXPECT_GT(series["threshold"].get<double>(), 0.0);
  EXPECT_EQ(code_of([&] { svc.error_series(a, TrackKey{1, 1}); }), Errc::UnknownRun);
  EXPECT_REPLAY_MATCHES(svc);
}

TEST(ServiceFeedback, DeltasStatusesAndReplay) {
  const fs::path dir = fresh_dir("feedback");
  Service svc(small_options(dir, false));
  svc.start_run(kDataset);
  const auto pending = svc.list_pending();
  ASSERT_GE(pending.size(), 2u);
  const verify::QHyper h;

  auto confirm_chosen = std::find_if(pending.begin(), pending.end(), [](const detect::AnomalyEvent& e) {
    return e.proposed_action == verify::Action::Confirm;
  });
  ASSERT_NE(confirm_chosen, pending.end());
  const auto first = svc.submit_feedback(confirm_chosen->id, {verify::Verdict::Agree, "looks real", "op1"});
  EXPECT_EQ(first.status, detect::EventStatus::Confirmed);
  EXPECT_EQ(first.q_before, 0.0);
  EXPECT_EQ(first.delta(), h.alpha * 1.0);
  EXPECT_TRUE(first.report_generated);
  EXPECT_NO_THROW(svc.report(confirm_chosen->id));
  EXPECT_REPLAY_MATCHES(svc);

  EXPECT_EQ(code_of([&] { svc.submit_feedback(confirm_chosen->id, {}); }), Errc::AlreadyResolved);
  EXPECT_EQ(code_of([&] { svc.submit_feedback("ffffffffffffffff", {}); }), Errc::UnknownEvent);
  EXPECT_REPLAY_MATCHES(svc);

  for (const auto& e : svc.list_pending()) {
    const auto before = svc.qtable();
    const auto r = svc.submit_feedback(e.id, {verify::Verdict::Disagree, "", "op2"});
    const double reward = verify::reward_of(r.action, verify::Verdict::Disagree);
    EXPECT_EQ(r.q_before, before.at(r.state, r.action));
    EXPECT_DOUBLE_EQ(r.q_after, r.q_before + h.alpha * (reward - r.q_before));
    if (r.action == verify::Action::Confirm) EXPECT_EQ(r.status, detect::EventStatus::Rejected);
    if (r.action == verify::Action::RequestInfo) {
      EXPECT_EQ(r.status, detect::EventStatus::InfoRequested);
      ASSERT_TRUE(r.next_action.has_value());
      EXPECT_NE(*r.next_action, verify::Action::RequestInfo);
    }
    EXPECT_REPLAY_MATCHES(svc);
  }
  // Info-requested events come back with a concrete proposal; answer them.
  for (const auto& e : svc.list_pending()) {
    EXPECT_EQ(e.status, detect::EventStatus::InfoRequested);
    svc.submit_feedback(e.id, {verify::Verdict::Agree, "", "op2"});
    EXPECT_REPLAY_MATCHES(svc);
  }
  EXPECT_TRUE(svc.list_pending().empty());
}

TEST(ServiceFeedback, ConcurrentSubmissionsSerialize) {
  const fs::path dir = fresh_dir("concurrent");
  Service svc(small_options(dir, false));
  svc.start_run(kDataset);
  const auto pending = svc.list_pending();
  ASSERT_GE(pending.size(), 2u);
  std::vector<std::thread> threads;
  std::atomic<int> ok{0}, conflicts{0};
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (std::size_t i = 0; i < pending.size(); ++i) {
        const auto& e = pending[(i + static_cast<std::size_t>(t)) % pending.size()];
        try {
          svc.submit_feedback(e.id, {t % 2 ? verify::Verdict::Agree : verify::Verdict::Disagree, "", "t"});
          ++ok;
        } catch (const Error& err) {
          if (err.code() == Errc::AlreadyResolved) ++conflicts;
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(ok + conflicts, static_cast<int>(4 * pending.size()));
  // Replaying the log applies the updates one by one in log order.
  EXPECT_REPLAY_MATCHES(svc);
  std::int64_t visits = 0;
  for (const auto& row : svc.qtable().visits) {
    for (auto v : row) visits += v;
  }
  EXPECT_EQ(visits, ok.load());
}

TEST(ServiceRestart, StateSurvivesAndTornTailIsCut) {
  const fs::path dir = fresh_dir("restart");
  ServiceState before;
  {
    Service svc(small_options(dir, false));
    svc.start_run(kDataset);
    const auto p = svc.list_pending();
    svc.submit_feedback(p.front().id, {verify::Verdict::Agree, "", "op"});
    before = svc.state();
  }
  {
    Service svc(small_options(dir, false));
    EXPECT_EQ(svc.state(), before);
  }
  std::ofstream(dir / "events.jsonl", std::ios::app) << R"({"seq":99999,"kind":"run-)";
  Service svc(small_options(dir, false));
  EXPECT_EQ(svc.state(), before);
  EXPECT_REPLAY_MATCHES(svc);
  // Appends after the cut stay readable.
  svc.submit_feedback(svc.list_pending().front().id, {verify::Verdict::Disagree, "", "op"});
  EXPECT_REPLAY_MATCHES(svc);
}

TEST(ServiceReports, SeededRunsGiveIdenticalReports) {
  const fs::path d1 = fresh_dir("det1"), d2 = fresh_dir("det2");
  Service a(small_options(d1, false)), b(small_options(d2, false));
  a.start_run(kDataset);
  b.start_run(kDataset);
  ASSERT_FALSE(a.report_ids().empty());
  ASSERT_EQ(a.report_ids(), b.report_ids());
  for (const auto& id : a.report_ids()) EXPECT_EQ(report::to_json(a.report(id)), report::to_json(b.report(id)));
}

TEST(ServiceReports, RemoteBackendFallsBackWhenUnreachable) {
  const fs::path dir = fresh_dir("remote");
  auto opts = small_options(dir, false);
  opts.base_config.backend = report::RemoteBackend{"http://127.0.0.1:" + std::to_string(tw::testing::closed_port())};
  Service svc(opts);
  const auto id = svc.start_run(kDataset);
  EXPECT_EQ(svc.run(id).status, RunStatus::Completed);
  ASSERT_FALSE(svc.report_ids().empty());
  for (const auto& rid : svc.report_ids()) EXPECT_EQ(svc.report(rid).backend, "template");
}

namespace {

struct HttpFixture {
  fs::path dir;
  Service service;
  HttpServer server;
  int port;
  httplib::Client client;

  explicit HttpFixture(const std::string& name)
      : dir(fresh_dir(name)),
        service(small_options(dir)),
        server(service, HttpOptions{"127.0.0.1", 0, std::nullopt}),
        port(server.start()),
        client("127.0.0.1", port) {
    client.set_read_timeout(30, 0);
  }
  ~HttpFixture() { server.stop(); }
};

ordered_json body_of(const httplib::Result& r) { return ordered_json::parse(r->body); }

}  // namespace

TEST(HttpApi, EndToEnd) {
  HttpFixture f("http");
  auto health = f.client.Get("/api/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);

  auto created = f.client.Post("/api/runs", ordered_json{{"dataset", kDataset}}.dump(), "application/json");
  ASSERT_TRUE(created);
  ASSERT_EQ(created->status, 201) << created->body;
  const std::string run_id = body_of(created)["id"];
  EXPECT_REPLAY_MATCHES(f.service);
  f.service.wait(run_id);

  auto run = f.client.Get("/api/runs/" + run_id);
  ASSERT_TRUE(run);
  EXPECT_EQ(body_of(run)["status"], "completed");
  EXPECT_EQ(body_of(f.client.Get("/api/runs"))[0]["id"], run_id);

  auto errors = f.client.Get("/api/runs/" + run_id + "/errors?dss=34&scid=21");
  ASSERT_TRUE(errors);
  EXPECT_EQ(errors->status, 200);
  EXPECT_TRUE(body_of(errors).contains("threshold"));

  auto pending = f.client.Get("/api/anomalies?status=pending");
  ASSERT_TRUE(pending);
  const auto list = body_of(pending);
  ASSERT_GE(list.size(), 1u);
  EXPECT_EQ(list.size(), f.service.list_pending().size());
  const std::string event_id = list[0]["id"];
  EXPECT_EQ(body_of(f.client.Get("/api/anomalies/" + event_id))["id"], event_id);

  auto fb = f.client.Post("/api/anomalies/" + event_id + "/feedback",
                          ordered_json{{"verdict", "agree"}, {"note", "n"}, {"operator", "op"}, {"extra", 1}}.dump(),
                          "application/json");
  ASSERT_TRUE(fb);
  EXPECT_EQ(fb->status, 200) << fb->body;
  EXPECT_TRUE(body_of(fb).contains("delta"));
  EXPECT_REPLAY_MATCHES(f.service);

  const std::string action = body_of(fb)["action"];
  if (action != "request-info") {
    auto again = f.client.Post("/api/anomalies/" + event_id + "/feedback", R"({"verdict":"agree"})", "application/json");
    ASSERT_TRUE(again);
    EXPECT_EQ(again->status, 409);
    EXPECT_EQ(body_of(again)["error"], "AlreadyResolved");
  }
  EXPECT_REPLAY_MATCHES(f.service);

  auto bad_verdict = f.client.Post("/api/anomalies/" + event_id + "/feedback", R"({"verdict":"maybe"})", "application/json");
  EXPECT_EQ(bad_verdict->status, 400);
  auto bad_json = f.client.Post("/api/runs", "{nope", "application/json");
  EXPECT_EQ(bad_json->status, 400);
  auto bad_dataset = f.client.Post("/api/runs", R"({"dataset":"missing.csv"})", "application/json");
  EXPECT_EQ(bad_dataset->status, 400);
  EXPECT_EQ(f.client.Get("/api/runs/NOPE")->status, 404);
  EXPECT_EQ(f.client.Get("/api/anomalies/ffffffffffffffff")->status, 404);
  EXPECT_EQ(f.client.Get("/api/reports/ffffffffffffffff")->status, 404);
  EXPECT_EQ(f.client.Get("/api/anomalies?status=bogus")->status, 400);

  const auto reports = body_of(f.client.Get("/api/reports"));
  ASSERT_GE(reports.size(), 1u);
  const std::string rid = reports[0];
  auto md = f.client.Get("/api/reports/" + rid + "?format=markdown");
  ASSERT_TRUE(md);
  EXPECT_EQ(md->body.rfind("# Discrepancy report " + rid, 0), 0u);
  EXPECT_EQ(body_of(f.client.Get("/api/reports/" + rid))["event_id"], rid);

  const auto q = body_of(f.client.Get("/api/qtable"));
  EXPECT_EQ(verify::qtable_from_json(q), f.service.qtable());
  EXPECT_REPLAY_MATCHES(f.service);
}

TEST(HttpApi, ServesStaticFiles) {
  const fs::path dir = fresh_dir("static");
  fs::create_directories(dir / "ui");
  write_text_file(dir / "ui" / "index.html", "<html>ok</html>");
  Service svc(small_options(dir / "data"));
  HttpServer server(svc, HttpOptions{"127.0.0.1", 0, dir / "ui"});
  const int port = server.start();
  httplib::Client c("127.0.0.1", port);
  auto r = c.Get("/index.html");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->body, "<html>ok</html>");
  server.stop();
}
