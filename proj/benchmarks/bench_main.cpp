#include <benchmark/benchmark.h>

#include <random>

#include "tw/detect/detect.hpp"
#include "tw/nn/layers.hpp"
#include "tw/nn/model.hpp"
#include "tw/prep/iforest.hpp"
#include "tw/prep/scaler.hpp"
#include "tw/prep/windows.hpp"
#include "tw/track/synthetic.hpp"

using namespace tw;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Eigen::MatrixXd X(rows, cols);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = d(rng);
  return X;
}

void BM_IsolationForestFit(benchmark::State& state) {
  const auto X = gaussian(state.range(0), 7, 1);
  for (auto _ : state) benchmark::DoNotOptimize(prep::fit_isolation_forest(X, {100, 256, 0.05, 1}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_IsolationForestFit)->Arg(1000)->Arg(10000);

void BM_IsolationForestScore(benchmark::State& state) {
  const auto X = gaussian(state.range(0), 7, 2);
  const auto forest = prep::fit_isolation_forest(X, {100, 256, 0.05, 1});
  for (auto _ : state) benchmark::DoNotOptimize(prep::iforest_scores(forest, X));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_IsolationForestScore)->Arg(1000)->Arg(10000);

nn::Seq<float> random_seq(int steps, int features, int batch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(0.0f, 1.0f);
  nn::Seq<float> x;
  for (int t = 0; t < steps; ++t) {
    nn::Mat<float> m(features, batch);
    for (nn::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
    x.push_back(m);
  }
  return x;
}

// One forward + backward pass over a batch of 32 windows of length 64.
void BM_ModelStep(benchmark::State& state, nn::ModelKind kind) {
  nn::ModelConfig cfg;
  cfg.kind = kind;
  cfg.input_size = 7;
  cfg.output_size = 5;
  cfg.hidden_size = static_cast<int>(state.range(0));
  cfg.seq_len = 64;
  auto model = nn::make_model<float>(cfg);
  const auto x = random_seq(cfg.seq_len, cfg.input_size, 32, 3);
  nn::Rng rng(0);
  for (auto _ : state) {
    model->params().zero_grad();
    benchmark::DoNotOptimize(model->forward_backward(x, true, rng));
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK_CAPTURE(BM_ModelStep, lstm, nn::ModelKind::LstmRecon)->Arg(32)->Arg(64);
BENCHMARK_CAPTURE(BM_ModelStep, tst, nn::ModelKind::Tst)->Arg(32)->Arg(64);

void BM_Attention(benchmark::State& state) {
  const auto len = static_cast<nn::Index>(state.range(0));
  nn::Rng rng(4);
  nn::ParamStore<float> store;
  nn::MultiHeadAttention<float> mha(store, "a", 64, 4, false, rng);
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  nn::Mat<float> X(64, len);
  for (nn::Index i = 0; i < X.size(); ++i) X.data()[i] = d(rng);
  for (auto _ : state) {
    nn::AttentionCache<float> c;
    benchmark::DoNotOptimize(mha.forward(X, X, &c));
  }
  state.SetComplexityN(len);
}
BENCHMARK(BM_Attention)->RangeMultiplier(2)->Range(16, 256)->Complexity();

void BM_Threshold(benchmark::State& state) {
  const auto X = gaussian(state.range(0), 1, 5);
  const std::vector<double> e(X.data(), X.data() + X.size());
  for (auto _ : state) benchmark::DoNotOptimize(detect::compute_threshold(e, detect::ThresholdMethod::mean_k_sigma(3)));
}
BENCHMARK(BM_Threshold)->Arg(100000);

void BM_Windows(benchmark::State& state) {
  SyntheticSpec spec;
  spec.rows = static_cast<std::size_t>(state.range(0));
  const auto track = make_synthetic_track(spec);
  for (auto _ : state) benchmark::DoNotOptimize(prep::make_windows(track.frame, synthetic_features(), {64, 1, 0}));
}
BENCHMARK(BM_Windows)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
