#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tw::prep {

struct PcaResult {
  /// Names of the columns that entered the decomposition (zero-variance
  /// columns are dropped).
  std::vector<std::string> features;
  std::vector<std::string> dropped;
  /// features x components; column k is component k, unit norm, with its
  /// largest-magnitude loading positive.
  Eigen::MatrixXd components;
  std::vector<double> eigenvalues;
  std::vector<double> explained_ratio;
  int n_for_target = 0;
  double variance_target = 0.95;
  /// Up to three feature names per component, by descending |loading|.
  std::vector<std::vector<std::string>> top_features;
};

/// Column-wise standardization with population variance. Columns whose
/// variance is zero are removed and their indices returned in `dropped`.
struct Standardized {
  Eigen::MatrixXd X;
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
  std::vector<Eigen::Index> kept;
  std::vector<Eigen::Index> dropped;
};
Standardized standardize(const Eigen::MatrixXd& X);

/// Standardizes X, eigendecomposes its covariance and ranks components by
/// eigenvalue (ties by the index of each component's dominant feature).
/// Throws Error(DegenerateInput) for fewer than two rows or when every column
/// is constant, Error(ShapeMismatch) when names and columns disagree, and
/// Error(BadConfig) for a target outside (0, 1].
PcaResult pca_analyze(const Eigen::MatrixXd& X, const std::vector<std::string>& names,
                      double variance_target = 0.95);

}  // namespace tw::prep
