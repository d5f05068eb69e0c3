#include "tw/prep/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tw/error.hpp"

namespace tw::prep {

Standardized standardize(const Eigen::MatrixXd& X) {
  Standardized s;
  const auto n = static_cast<double>(X.rows());
  s.mean = X.colwise().mean().transpose();
  Eigen::VectorXd var(X.cols());
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    var(c) = (X.col(c).array() - s.mean(c)).square().sum() / n;
    (var(c) > 0.0 ? s.kept : s.dropped).push_back(c);
  }
  s.X.resize(X.rows(), static_cast<Eigen::Index>(s.kept.size()));
  s.stddev.resize(static_cast<Eigen::Index>(s.kept.size()));
  for (std::size_t k = 0; k < s.kept.size(); ++k) {
    const auto c = s.kept[k];
    const auto kk = static_cast<Eigen::Index>(k);
    s.stddev(kk) = std::sqrt(var(c));
    s.X.col(kk) = (X.col(c).array() - s.mean(c)) / s.stddev(kk);
  }
  return s;
}

PcaResult pca_analyze(const Eigen::MatrixXd& X, const std::vector<std::string>& names, double variance_target) {
  if (static_cast<Eigen::Index>(names.size()) != X.cols()) {
    throw Error(Errc::ShapeMismatch, fmt::format("{} names for {} columns", names.size(), X.cols()));
  }
  if (!(variance_target > 0.0 && variance_target <= 1.0)) {
    throw Error(Errc::BadConfig, "variance target must lie in (0, 1]");
  }
  if (X.rows() < 2) throw Error(Errc::DegenerateInput, "PCA needs at least two rows");

  const Standardized s = standardize(X);
  PcaResult out;
  out.variance_target = variance_target;
  for (auto c : s.dropped) {
    out.dropped.push_back(names[static_cast<std::size_t>(c)]);
    spdlog::warn("pca: dropping zero-variance column '{}'", names[static_cast<std::size_t>(c)]);
  }
  for (auto c : s.kept) out.features.push_back(names[static_cast<std::size_t>(c)]);
  if (s.kept.empty()) throw Error(Errc::DegenerateInput, "every column has zero variance");

  const Eigen::MatrixXd cov = (s.X.transpose() * s.X) / static_cast<double>(X.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error(Errc::DegenerateInput, "eigendecomposition failed");

  const Eigen::Index p = cov.rows();
  Eigen::MatrixXd vecs = solver.eigenvectors();
  Eigen::VectorXd vals = solver.eigenvalues().cwiseMax(0.0);
  std::vector<Eigen::Index> dominant(static_cast<std::size_t>(p));
  for (Eigen::Index k = 0; k < p; ++k) {
    Eigen::Index arg = 0;
    vecs.col(k).cwiseAbs().maxCoeff(&arg);
    if (vecs(arg, k) < 0.0) vecs.col(k) = -vecs.col(k);
    dominant[static_cast<std::size_t>(k)] = arg;
  }

  const double scale = std::max(1.0, vals.maxCoeff());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (std::abs(vals(a) - vals(b)) > 1e-12 * scale) return vals(a) > vals(b);
    return dominant[static_cast<std::size_t>(a)] < dominant[static_cast<std::size_t>(b)];
  });

  out.components.resize(p, p);
  const double total = vals.sum();
  double cumulative = 0.0;
  out.n_for_target = static_cast<int>(p);
  bool reached = false;
  for (Eigen::Index k = 0; k < p; ++k) {
    const auto src = order[static_cast<std::size_t>(k)];
    out.components.col(k) = vecs.col(src);
    out.eigenvalues.push_back(vals(src));
    const double ratio = total > 0.0 ? vals(src) / total : 0.0;
    out.explained_ratio.push_back(ratio);
    cumulative += ratio;
    if (!reached && cumulative >= variance_target - 1e-12) {
      out.n_for_target = static_cast<int>(k + 1);
      reached = true;
    }

    std::vector<Eigen::Index> idx(static_cast<std::size_t>(p));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
      return std::abs(vecs(a, src)) > std::abs(vecs(b, src));
    });
    std::vector<std::string> top;
    for (std::size_t j = 0; j < std::min<std::size_t>(3, idx.size()); ++j) {
      top.push_back(out.features[static_cast<std::size_t>(idx[j])]);
    }
    out.top_features.push_back(std::move(top));
  }
  return out;
}

}  // namespace tw::prep
