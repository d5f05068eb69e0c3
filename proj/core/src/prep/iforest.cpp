#include "tw/prep/iforest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "tw/error.hpp"

namespace tw::prep {
namespace {

constexpr double kEulerGamma = 0.57721566490153286061;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& X, int max_depth, std::mt19937_64& rng)
      : X_(X), max_depth_(max_depth), rng_(rng) {}

  IsolationTree build(std::vector<Eigen::Index> rows) {
    IsolationTree tree;
    grow(tree, rows, 0);
    return tree;
  }

 private:
  int grow(IsolationTree& tree, std::vector<Eigen::Index>& rows, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(IsolationNode{});
    tree.nodes[id].size = static_cast<int>(rows.size());
    if (depth >= max_depth_ || rows.size() <= 1) return id;

    std::vector<int> candidates;
    std::vector<std::pair<double, double>> ranges(static_cast<std::size_t>(X_.cols()));
    for (Eigen::Index f = 0; f < X_.cols(); ++f) {
      double lo = X_(rows[0], f), hi = lo;
      for (Eigen::Index r : rows) {
        lo = std::min(lo, X_(r, f));
        hi = std::max(hi, X_(r, f));
      }
      ranges[static_cast<std::size_t>(f)] = {lo, hi};
      if (hi > lo) candidates.push_back(static_cast<int>(f));
    }
    if (candidates.empty()) return id;

    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    const int feature = candidates[pick(rng_)];
    const auto [lo, hi] = ranges[static_cast<std::size_t>(feature)];
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double split = lo;
    while (!(split > lo && split < hi)) split = lo + unit(rng_) * (hi - lo);

    std::vector<Eigen::Index> left, right;
    for (Eigen::Index r : rows) (X_(r, feature) < split ? left : right).push_back(r);

    tree.nodes[id].feature = feature;
    tree.nodes[id].split = split;
    tree.nodes[id].lo = lo;
    tree.nodes[id].hi = hi;
    const int l = grow(tree, left, depth + 1);
    const int r = grow(tree, right, depth + 1);
    tree.nodes[id].left = l;
    tree.nodes[id].right = r;
    return id;
  }

  const Eigen::MatrixXd& X_;
  int max_depth_;
  std::mt19937_64& rng_;
};

}  // namespace

void ForestConfig::validate() const {
  if (n_trees < 1) throw Error(Errc::BadConfig, "n_trees must be >= 1");
  if (subsample < 1) throw Error(Errc::BadConfig, "subsample must be >= 1");
  if (!(contamination >= 0.0 && contamination <= 0.5)) {
    throw Error(Errc::BadConfig, "contamination must lie in [0, 0.5]");
  }
}

double harmonic(std::size_t n) {
  if (n == 0) return 0.0;
  if (n <= 100'000) {
    double h = 0.0;
    for (std::size_t k = n; k >= 1; --k) h += 1.0 / static_cast<double>(k);
    return h;
  }
  const double x = static_cast<double>(n);
  return std::log(x) + kEulerGamma + 1.0 / (2.0 * x) - 1.0 / (12.0 * x * x);
}

double path_normalizer(std::size_t n) {
  if (n <= 1) return 0.0;
  const double x = static_cast<double>(n);
  return 2.0 * harmonic(n - 1) - 2.0 * (x - 1.0) / x;
}

double IsolationForest::path_length(std::size_t t, std::span<const double> x) const {
  const auto& nodes = trees.at(t).nodes;
  int id = 0;
  int depth = 0;
  while (nodes[static_cast<std::size_t>(id)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(id)];
    id = x[static_cast<std::size_t>(n.feature)] < n.split ? n.left : n.right;
    ++depth;
  }
  return depth + path_normalizer(static_cast<std::size_t>(nodes[static_cast<std::size_t>(id)].size));
}

IsolationForest fit_isolation_forest(const Eigen::MatrixXd& X, const ForestConfig& config) {
  config.validate();
  if (X.rows() == 0 || X.cols() == 0) throw Error(Errc::EmptyInput, "isolation forest needs at least one row");

  IsolationForest forest;
  forest.n_features = static_cast<int>(X.cols());
  forest.subsample_size = static_cast<int>(std::min<Eigen::Index>(config.subsample, X.rows()));
  const int max_depth = static_cast<int>(std::ceil(std::log2(static_cast<double>(forest.subsample_size))));

  std::vector<Eigen::Index> all(static_cast<std::size_t>(X.rows()));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  forest.trees.reserve(static_cast<std::size_t>(config.n_trees));
  for (int t = 0; t < config.n_trees; ++t) {
    std::mt19937_64 rng(splitmix64(config.seed * 0x100000001b3ULL + static_cast<std::uint64_t>(t)));
    // Partial Fisher-Yates: the first subsample_size entries are the draw.
    std::vector<Eigen::Index> idx = all;
    for (std::size_t i = 0; i < static_cast<std::size_t>(forest.subsample_size); ++i) {
      std::uniform_int_distribution<std::size_t> d(i, idx.size() - 1);
      std::swap(idx[i], idx[d(rng)]);
    }
    idx.resize(static_cast<std::size_t>(forest.subsample_size));
    TreeBuilder builder(X, max_depth, rng);
    forest.trees.push_back(builder.build(std::move(idx)));
  }
  return forest;
}

std::vector<double> mean_path_lengths(const IsolationForest& forest, const Eigen::MatrixXd& X) {
  if (X.cols() != forest.n_features) {
    throw Error(Errc::ShapeMismatch, fmt::format("forest has {} features, input {}", forest.n_features, X.cols()));
  }
  std::vector<double> out(static_cast<std::size_t>(X.rows()), 0.0);
  std::vector<double> row(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    for (Eigen::Index c = 0; c < X.cols(); ++c) row[static_cast<std::size_t>(c)] = X(r, c);
    double sum = 0.0;
    for (std::size_t t = 0; t < forest.trees.size(); ++t) sum += forest.path_length(t, row);
    out[static_cast<std::size_t>(r)] = sum / static_cast<double>(forest.trees.size());
  }
  return out;
}

std::vector<double> iforest_scores(const IsolationForest& forest, const Eigen::MatrixXd& X) {
  auto scores = mean_path_lengths(forest, X);
  const double c = path_normalizer(static_cast<std::size_t>(forest.subsample_size));
  for (double& s : scores) s = c > 0.0 ? std::exp2(-s / c) : 1.0;
  return scores;
}

std::vector<std::size_t> top_outliers(std::span<const double> scores, double contamination) {
  const auto k = static_cast<std::size_t>(std::ceil(contamination * static_cast<double>(scores.size()) - 1e-12));
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  order.resize(std::min(k, order.size()));
  std::sort(order.begin(), order.end());
  return order;
}

FilterResult filter_outliers(const TrackFrame& frame, std::span<const double> scores, double contamination) {
  if (scores.size() != frame.rows()) {
    throw Error(Errc::ShapeMismatch, fmt::format("{} scores for {} rows", scores.size(), frame.rows()));
  }
  FilterResult result;
  result.removed = top_outliers(scores, contamination);
  std::vector<std::size_t> keep;
  keep.reserve(frame.rows() - result.removed.size());
  std::size_t j = 0;
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    if (j < result.removed.size() && result.removed[j] == r) {
      ++j;
      continue;
    }
    keep.push_back(r);
  }
  result.kept = frame.take_rows(keep);
  return result;
}

}  // namespace tw::prep
