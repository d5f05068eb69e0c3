#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tw/track/track.hpp"

namespace tw::prep {

struct ForestConfig {
  int n_trees = 100;
  int subsample = 256;
  /// Fraction of rows filter_outliers removes.
  double contamination = 0.05;
  std::uint64_t seed = 0;

  /// Throws Error(BadConfig).
  void validate() const;
};

/// Leaf when `feature < 0`; `size` is the number of training points that
/// reached the node.
struct IsolationNode {
  int feature = -1;
  double split = 0.0;
  int left = -1;
  int right = -1;
  int size = 0;
  /// Range of `feature` over the node's points; split lies in [lo, hi].
  double lo = 0.0;
  double hi = 0.0;
};

struct IsolationTree {
  std::vector<IsolationNode> nodes;  ///< nodes[0] is the root
};

struct IsolationForest {
  std::vector<IsolationTree> trees;
  int subsample_size = 0;
  int n_features = 0;

  /// Path length of `x` in tree `t`: edges to its leaf plus c(leaf size).
  double path_length(std::size_t t, std::span<const double> x) const;
};

/// Exact harmonic number H(n) for n up to 10^5, asymptotic expansion above.
double harmonic(std::size_t n);

/// Average unsuccessful-search path length of a binary search tree on n
/// points: c(n) = 2 H(n-1) - 2 (n-1) / n, with c(0) = c(1) = 0.
double path_normalizer(std::size_t n);

/// Grows `n_trees` trees, each on a uniform subsample drawn without
/// replacement (capped at the row count). A node splits on a feature drawn
/// uniformly among those with a nonzero range at the node, at a uniform
/// value strictly inside that range, until the depth reaches
/// ceil(log2(subsample size)) or no feature can split. Throws
/// Error(EmptyInput).
IsolationForest fit_isolation_forest(const Eigen::MatrixXd& X, const ForestConfig& config);

/// Mean path length per row of X across the forest.
std::vector<double> mean_path_lengths(const IsolationForest& forest, const Eigen::MatrixXd& X);

/// Anomaly score s(x) = 2^(-E[h(x)] / c(subsample size)), in (0, 1]; higher
/// means easier to isolate.
std::vector<double> iforest_scores(const IsolationForest& forest, const Eigen::MatrixXd& X);

/// Indices of the ceil(contamination * n) highest scores, ascending. Equal
/// scores are taken lowest index first.
std::vector<std::size_t> top_outliers(std::span<const double> scores, double contamination);

struct FilterResult {
  TrackFrame kept;
  std::vector<std::size_t> removed;  ///< ascending row indices
};

FilterResult filter_outliers(const TrackFrame& frame, std::span<const double> scores, double contamination);

}  // namespace tw::prep
