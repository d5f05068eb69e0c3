#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "tw/service/event_log.hpp"
#include "tw/track/canonical_csv.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
};

// Runs the CLI with stderr folded into stdout.
Outcome tw_cli(const std::string& args) {
  const std::string cmd = std::string(TW_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  EXPECT_NE(pipe, nullptr);
  std::string out;
  std::array<char, 4096> buf{};
  while (const auto n = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tw_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const std::string kSmall = "--dataset synthetic:rows=400,spikes=3,seed=3 --hidden 16 --epochs 30 --seed 3";

}  // namespace

TEST(Cli, RunReviewReplayReport) {
  const fs::path dir = fresh_dir("flow");
  const std::string root = "--data-dir " + dir.string() + " ";
  const auto run = tw_cli(root + "run " + kSmall);
  ASSERT_EQ(run.code, 0) << run.out;
  EXPECT_NE(run.out.find("completed"), std::string::npos);

  const auto review = tw_cli(root + "review --all agree --operator ci");
  ASSERT_EQ(review.code, 0) << review.out;
  EXPECT_NE(review.out.find("pending: 0"), std::string::npos) << review.out;

  const auto replay = tw_cli(root + "replay");
  ASSERT_EQ(replay.code, 0) << replay.out;
  const auto state = tw::service::replay_log(dir / "events.jsonl");
  EXPECT_EQ(nlohmann::ordered_json::parse(replay.out), tw::service::to_json(state));
  ASSERT_FALSE(state.events.empty());
  for (const auto& [id, r] : state.events) EXPECT_FALSE(tw::detect::is_open(r.event.status)) << id;

  const auto ids = tw_cli(root + "report");
  ASSERT_EQ(ids.code, 0);
  const std::string first = ids.out.substr(0, ids.out.find('\n'));
  ASSERT_EQ(first.size(), 16u) << ids.out;
  const auto md = tw_cli(root + "report --event " + first);
  EXPECT_EQ(md.code, 0);
  EXPECT_EQ(md.out.rfind("# Discrepancy report " + first, 0), 0u);
  EXPECT_EQ(tw_cli(root + "report --event ffffffffffffffff").code, 2);
}

TEST(Cli, TrainThenDetect) {
  const fs::path dir = fresh_dir("train");
  const auto train = tw_cli("train " + kSmall + " --out " + dir.string());
  ASSERT_EQ(train.code, 0) << train.out;
  EXPECT_TRUE(fs::exists(dir / "checkpoints" / "model.json"));
  const auto det = tw_cli("detect --dataset synthetic:rows=400,spikes=3,seed=3 --model-dir " + dir.string() +
                          " --out " + (dir / "events.json").string());
  ASSERT_EQ(det.code, 0) << det.out;
  const auto events = nlohmann::json::parse(tw::read_text_file(dir / "events.json"));
  EXPECT_TRUE(events.is_array());
  EXPECT_NE(det.out.find("flagged " + std::to_string(events.size())), std::string::npos);
}

TEST(Cli, IngestFixtureMailbox) {
  const fs::path out = fresh_dir("ingest");
  const auto r = tw_cli("ingest --mailbox " + std::string(TW_FIXTURE_DIR) + "/ingest/mailbox --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(tw::read_text_file(out / "jpl_X_sx20.csv"),
            tw::read_text_file(fs::path(TW_FIXTURE_DIR) / "ingest" / "golden" / "jpl_X_sx20.csv"));
}

TEST(Cli, ExitCodes) {
  const fs::path dir = fresh_dir("codes");
  EXPECT_EQ(tw_cli("").code, 2);
  EXPECT_EQ(tw_cli("--help").code, 0);
  EXPECT_EQ(tw_cli("bogus-command").code, 2);
  EXPECT_EQ(tw_cli("--data-dir " + dir.string() + " run --dataset /nonexistent.csv").code, 2);
  EXPECT_EQ(tw_cli("--data-dir " + dir.string() + " review --event 0000000000000000 --verdict agree").code, 2);
  tw::write_text_file(dir / "events.jsonl", "{\"seq\":1,\"ki");
  EXPECT_EQ(tw_cli("replay --log " + (dir / "events.jsonl").string()).code, 2);
}
