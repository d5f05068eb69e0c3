#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "tw/nn/model.hpp"
#include "tw/prep/windows.hpp"

namespace tw::nn {

inline constexpr const char* kCheckpointMagic = "twnn1";

struct EpochLoss {
  double train = 0.0;
  double validation = 0.0;
};

struct TrainedModel {
  ModelConfig config;
  OptimHyper hyper;
  std::vector<std::string> features;  ///< input feature names, in order
  std::vector<EpochLoss> history;
  std::shared_ptr<Model<float>> model;

  std::vector<std::string> output_names() const;
};

/// Trains sequentially over minibatches in window order (the last partial
/// batch is kept). An epoch's train loss is the window-weighted mean batch
/// loss; its validation loss is the mean window error on `val`. Throws
/// Error(EmptyBatch), Error(ShapeMismatch), Error(BadConfig) (forecast
/// targets are not supported) or Error(NonFiniteLoss).
TrainedModel train(const ModelConfig& config, const OptimHyper& hyper, const prep::WindowBatch& train,
                   const prep::WindowBatch& val);

struct ErrorSeries {
  std::vector<double> errors;        ///< per window: MSE over output features
  Eigen::MatrixXd per_feature;       ///< windows x outputs
  std::vector<prep::RowRange> index_map;
  std::vector<std::string> output_features;
};

/// Per-window reconstruction errors with dropout disabled.
/// Throws Error(ShapeMismatch) when the batch does not fit the model.
ErrorSeries reconstruct_errors(const TrainedModel& model, const prep::WindowBatch& batch);

/// Mean window error over `batch` (0 windows gives 0).
double mean_error(const TrainedModel& model, const prep::WindowBatch& batch);

nlohmann::ordered_json config_to_json(const ModelConfig& c);
ModelConfig config_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json hyper_to_json(const OptimHyper& h);
OptimHyper hyper_from_json(const nlohmann::ordered_json& j);

/// {"magic": "twnn1", config, hyper, features, history, params: [{name,
/// shape, data}]} with data as base64 little-endian float32.
nlohmann::ordered_json checkpoint_to_json(const TrainedModel& model);
/// Throws Error(BadFormat).
TrainedModel checkpoint_from_json(const nlohmann::ordered_json& j);

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace tw::nn
