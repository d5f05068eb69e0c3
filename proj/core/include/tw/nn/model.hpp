#pragma once

#include <memory>
#include <vector>

#include "tw/nn/config.hpp"
#include "tw/nn/layers.hpp"
#include "tw/util/tensor.hpp"

namespace tw::nn {

/// A window minibatch as L time steps, each features x batch.
template <typename T>
using Seq = std::vector<Mat<T>>;

/// Windows [begin, end) of `data` ([window, step, feature]) as a sequence.
template <typename T, typename U>
Seq<T> to_sequence(const Tensor3<U>& data, std::size_t begin, std::size_t end) {
  Seq<T> seq(data.d1, Mat<T>(static_cast<Index>(data.d2), static_cast<Index>(end - begin)));
  for (std::size_t w = begin; w < end; ++w)
    for (std::size_t t = 0; t < data.d1; ++t)
      for (std::size_t f = 0; f < data.d2; ++f) {
        seq[t](static_cast<Index>(f), static_cast<Index>(w - begin)) = static_cast<T>(data(w, t, f));
      }
  return seq;
}

/// Common interface of the three reconstruction architectures.
template <typename T>
class Model {
 public:
  explicit Model(ModelConfig config);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  virtual ~Model() = default;

  const ModelConfig& config() const { return config_; }
  ParamStore<T>& params() { return store_; }
  const std::vector<int>& outputs() const { return outputs_; }

  /// Reconstruction objective on x: runs forward and backward, accumulates
  /// parameter gradients and returns the MSE. Dropout only when `training`.
  virtual T forward_backward(const Seq<T>& x, bool training, Rng& rng) = 0;

  /// Squared reconstruction error averaged over time, per output feature and
  /// window (outputs x batch). Dropout is off.
  virtual Mat<T> feature_errors(const Seq<T>& x) = 0;

  /// Creates the optimizer state used by train_batch.
  virtual void prepare_training(const OptimHyper& hyper);

  /// One optimization step; returns the batch reconstruction loss. Throws
  /// Error(NonFiniteLoss) before updating when a loss is not finite.
  virtual T train_batch(const Seq<T>& x, Rng& rng);

 protected:
  void check_input(const Seq<T>& x) const;
  /// Rows `outputs_` of m.
  Mat<T> select_outputs(const Mat<T>& m) const;

  ModelConfig config_;
  std::vector<int> outputs_;
  ParamStore<T> store_;
  OptimHyper hyper_;
  AdamW<T> opt_;
};

/// Builds an initialized model of config.kind, seeded by config.seed.
/// Throws Error(BadConfig).
template <typename T>
std::unique_ptr<Model<T>> make_model(const ModelConfig& config);

extern template class Model<float>;
extern template class Model<double>;
extern template std::unique_ptr<Model<float>> make_model<float>(const ModelConfig&);
extern template std::unique_ptr<Model<double>> make_model<double>(const ModelConfig&);

}  // namespace tw::nn
