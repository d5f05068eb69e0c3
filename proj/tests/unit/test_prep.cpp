#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "tw/error.hpp"
#include "tw/prep/iforest.hpp"
#include "tw/prep/pca.hpp"
#include "tw/prep/scaler.hpp"
#include "tw/prep/serialize.hpp"
#include "tw/prep/windows.hpp"
#include "tw/track/antenna_csv.hpp"
#include "tw/track/canonical_csv.hpp"

using namespace tw;
using namespace tw::prep;
namespace fs = std::filesystem;

namespace {

TrackFrame frame_of(std::vector<Column> cols) {
  TrackFrame f;
  f.key = {34, 21};
  const std::size_t n = cols.empty() ? 0 : cols[0].values.size();
  for (std::size_t r = 0; r < n; ++r) {
    f.timestamps.push_back(static_cast<Micros>(r) * 1000000);
    f.sequence.push_back(r);
  }
  f.columns = std::move(cols);
  return f;
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no tw::Error thrown";
  return Errc::BadFormat;
}

}  // namespace

TEST(Scaler, SampleHumidityUnderFirstTwoRows) {
  const auto parsed = read_antenna_csv(read_text_file(fs::path(TW_FIXTURE_DIR) / "track" / "antenna_sample.csv"));
  const TrackFrame f = build_track_frames(parsed.records).at({34, 21});
  const std::vector<std::size_t> first_two{0, 1};
  const std::vector<std::string> cols{"WX_HUMID"};
  const ScalerParams p = fit_minmax(f.take_rows(first_two), cols);
  EXPECT_EQ(p.columns[0], (ColumnRange{"WX_HUMID", 25.4, 26.3}));
  const TrackFrame scaled = apply_minmax(f, p, ScaleDirection::Forward);
  // Row 2 holds 25.9.
  EXPECT_NEAR(scaled.column("WX_HUMID").values[2], (25.9 - 25.4) / (26.3 - 25.4), 1e-12);
  EXPECT_NEAR(scaled.column("WX_HUMID").values[2], 0.555556, 1e-6);
  // AGC was not fitted and passes through.
  EXPECT_DOUBLE_EQ(scaled.column("AGC").values[0], -93.342);
}

TEST(Scaler, RoundTripAndConstantColumn) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d(5.0, 3.0);
  Column a{"a", {}}, c{"c", {}};
  for (int i = 0; i < 50; ++i) {
    a.values.push_back(d(rng));
    c.values.push_back(7.0);
  }
  const TrackFrame f = frame_of({a, c});
  const std::vector<std::string> cols{"a", "c"};
  const ScalerParams p = fit_minmax(f, cols);
  const TrackFrame fwd = apply_minmax(f, p, ScaleDirection::Forward);
  for (double v : fwd.column("a").values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  for (double v : fwd.column("c").values) EXPECT_EQ(v, 0.0);
  const TrackFrame back = apply_minmax(fwd, p, ScaleDirection::Inverse);
  for (std::size_t r = 0; r < 50; ++r) {
    EXPECT_NEAR(back.column("a").values[r], a.values[r], 1e-9);
    EXPECT_EQ(back.column("c").values[r], 7.0);
  }
}

TEST(Scaler, Errors) {
  const std::vector<std::string> cols{"a"};
  EXPECT_EQ(code_of([&] { fit_minmax(frame_of({Column{"a", {}}}), cols); }), Errc::EmptyColumn);
  EXPECT_EQ(code_of([&] { fit_minmax(frame_of({Column{"b", {1.0}}}), cols); }), Errc::UnknownColumn);
  EXPECT_EQ(code_of([&] { fit_minmax(frame_of({Column{"a", {1.0, kMissing}}}), cols); }), Errc::MissingValue);
  const ScalerParams p{{{"a", 0, 1}}};
  EXPECT_EQ(code_of([&] { apply_minmax(frame_of({Column{"b", {1.0}}}), p, ScaleDirection::Forward); }),
            Errc::UnknownColumn);
}

TEST(IsolationForest, HarmonicAndNormalizer) {
  EXPECT_DOUBLE_EQ(harmonic(1), 1.0);
  EXPECT_NEAR(harmonic(4), 1.0 + 0.5 + 1.0 / 3 + 0.25, 1e-15);
  EXPECT_EQ(path_normalizer(0), 0.0);
  EXPECT_EQ(path_normalizer(1), 0.0);
  EXPECT_NEAR(path_normalizer(2), 1.0, 1e-15);
  // c(256) = 2 H(255) - 2 * 255/256
  double h = 0;
  for (int i = 1; i <= 255; ++i) h += 1.0 / i;
  EXPECT_NEAR(path_normalizer(256), 2 * h - 2.0 * 255 / 256, 1e-12);
}

TEST(IsolationForest, PlantedPointIsolatedFirst) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(100, 1);
  X(57, 0) = 100.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto forest = fit_isolation_forest(X, ForestConfig{100, 256, 0.01, seed});
    const auto scores = iforest_scores(forest, X);
    EXPECT_EQ(top_outliers(scores, 0.01), std::vector<std::size_t>{57}) << "seed " << seed;
  }
}

TEST(IsolationForest, IdenticalRowsScoreEqually) {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Constant(64, 3, 2.5);
  const auto scores = iforest_scores(fit_isolation_forest(X, ForestConfig{50, 32, 0.05, 4}), X);
  for (double s : scores) EXPECT_EQ(s, scores[0]);
  EXPECT_GT(scores[0], 0.0);
  EXPECT_LE(scores[0], 1.0);
}

TEST(IsolationForest, DeterministicPerSeedAndConfigChecks) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> d;
  Eigen::MatrixXd X(300, 2);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = d(rng);
  const auto a = iforest_scores(fit_isolation_forest(X, {30, 64, 0.05, 3}), X);
  const auto b = iforest_scores(fit_isolation_forest(X, {30, 64, 0.05, 3}), X);
  EXPECT_EQ(a, b);
  EXPECT_EQ(code_of([] { ForestConfig{0, 64, 0.05, 0}.validate(); }), Errc::BadConfig);
  EXPECT_EQ(code_of([] { ForestConfig{10, 64, 1.5, 0}.validate(); }), Errc::BadConfig);
  EXPECT_EQ(code_of([] { fit_isolation_forest(Eigen::MatrixXd(0, 2), {}); }), Errc::EmptyInput);
}

TEST(IsolationForest, TopOutliersTieBreakAndFilter) {
  const std::vector<double> scores{0.5, 0.9, 0.9, 0.1};
  EXPECT_EQ(top_outliers(scores, 0.25), std::vector<std::size_t>{1});
  EXPECT_EQ(top_outliers(scores, 0.5), (std::vector<std::size_t>{1, 2}));
  const TrackFrame f = frame_of({Column{"a", {1, 2, 3, 4}}});
  const auto res = filter_outliers(f, scores, 0.5);
  EXPECT_EQ(res.removed, (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(res.kept.column("a").values, (std::vector<double>{1, 4}));
}

TEST(Pca, RankOneData) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> d;
  Eigen::MatrixXd X(200, 4);
  for (int i = 0; i < 200; ++i) {
    const double z = d(rng);
    X.row(i) << z, 2 * z, -3 * z, 0.5 * z;
  }
  const auto res = pca_analyze(X, {"a", "b", "c", "d"}, 0.95);
  EXPECT_EQ(res.n_for_target, 1);
  EXPECT_GE(res.explained_ratio[0], 0.999999);
  double total = 0;
  for (double r : res.explained_ratio) total += r;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Pca, SymmetricFixtureSplitsVarianceEvenly) {
  Eigen::MatrixXd X(4, 2);
  X << 1, 0, -1, 0, 0, 1, 0, -1;
  const auto res = pca_analyze(X, {"x", "y"}, 0.95);
  ASSERT_EQ(res.explained_ratio.size(), 2u);
  EXPECT_NEAR(res.explained_ratio[0], 0.5, 1e-9);
  EXPECT_NEAR(res.explained_ratio[1], 0.5, 1e-9);
  EXPECT_EQ(res.n_for_target, 2);
}

TEST(Pca, DropsConstantColumnsAndRejectsDegenerate) {
  Eigen::MatrixXd X(5, 3);
  X << 1, 9, 2, 2, 9, 1, 3, 9, 5, 4, 9, 3, 5, 9, 4;
  const auto res = pca_analyze(X, {"a", "const", "b"});
  EXPECT_EQ(res.dropped, std::vector<std::string>{"const"});
  EXPECT_EQ(res.features, (std::vector<std::string>{"a", "b"}));
  for (int k = 0; k < res.components.cols(); ++k) EXPECT_NEAR(res.components.col(k).norm(), 1.0, 1e-12);
  EXPECT_EQ(code_of([] { pca_analyze(Eigen::MatrixXd::Ones(1, 2), {"a", "b"}); }), Errc::DegenerateInput);
  EXPECT_EQ(code_of([] { pca_analyze(Eigen::MatrixXd::Ones(4, 2), {"a", "b"}); }), Errc::DegenerateInput);
  EXPECT_EQ(code_of([&] { pca_analyze(X, {"a"}); }), Errc::ShapeMismatch);
  EXPECT_EQ(code_of([&] { pca_analyze(X, {"a", "b", "c"}, 1.5); }), Errc::BadConfig);
}

TEST(Windows, CountsAndIndexMap) {
  EXPECT_EQ(window_count(10, {4, 1, 0}), 7u);
  EXPECT_EQ(window_count(10, {4, 3, 0}), 3u);
  EXPECT_EQ(window_count(10, {4, 1, 2}), 5u);
  EXPECT_EQ(window_count(3, {4, 1, 0}), 0u);
  Column a{"a", {}}, b{"b", {}};
  for (int i = 0; i < 10; ++i) {
    a.values.push_back(i);
    b.values.push_back(100 + i);
  }
  const TrackFrame f = frame_of({a, b});
  const std::vector<std::string> cols{"b", "a"};
  const auto batch = make_windows(f, cols, {4, 2, 0});
  ASSERT_EQ(batch.size(), 4u);
  EXPECT_EQ(batch.index_map[3], (RowRange{6, 10}));
  EXPECT_EQ(batch.data(3, 0, 0), 106.0f);
  EXPECT_EQ(batch.data(3, 3, 1), 9.0f);
  EXPECT_FALSE(batch.targets.has_value());

  const auto fc = make_windows(f, cols, {4, 1, 2});
  ASSERT_TRUE(fc.targets.has_value());
  EXPECT_EQ(fc.targets->d1, 2u);
  EXPECT_EQ((*fc.targets)(0, 1, 1), 5.0f);
}

TEST(Windows, SplitIsChronological) {
  Column a{"a", {}};
  for (int i = 0; i < 20; ++i) a.values.push_back(i);
  const std::vector<std::string> cols{"a"};
  const auto batch = make_windows(frame_of({a}), cols, {5, 1, 0});
  const auto [train, test] = chrono_split(batch, 0.7);
  EXPECT_EQ(train.size(), 11u);  // floor(0.7 * 16)
  EXPECT_EQ(test.size(), 5u);
  EXPECT_LT(train.index_map.back().begin, test.index_map.front().begin);
  EXPECT_EQ(code_of([&] { chrono_split(batch, 1.0); }), Errc::BadConfig);
  EXPECT_EQ(code_of([&] { chrono_split(slice(batch, 0, 1), 0.5); }), Errc::TooFewWindows);
}

TEST(Windows, Errors) {
  const std::vector<std::string> cols{"a"};
  EXPECT_EQ(code_of([&] { make_windows(frame_of({Column{"a", {1, kMissing, 3}}}), cols, {2, 1, 0}); }),
            Errc::MissingValue);
  EXPECT_EQ(code_of([&] { make_windows(frame_of({Column{"b", {1, 2, 3}}}), cols, {2, 1, 0}); }), Errc::UnknownColumn);
  EXPECT_EQ(code_of([] { WindowSpec{0, 1, 0}.validate(); }), Errc::BadConfig);
}

TEST(PrepDocument, JsonRoundTrip) {
  Eigen::MatrixXd X(4, 2);
  X << 1, 0, -1, 0, 0, 1, 0, -1;
  PrepDocument doc{ScalerParams{{{"a", 0.5, 2.0}, {"b", -1, 1}}}, pca_analyze(X, {"x", "y"})};
  const PrepDocument back = prep_from_json(to_json(doc));
  EXPECT_EQ(back.scaler, doc.scaler);
  ASSERT_TRUE(back.pca.has_value());
  EXPECT_EQ(back.pca->explained_ratio, doc.pca->explained_ratio);
  EXPECT_TRUE(back.pca->components.isApprox(doc.pca->components));
  auto bad = to_json(doc);
  bad["magic"] = "nope";
  EXPECT_EQ(code_of([&] { prep_from_json(bad); }), Errc::BadFormat);
}
