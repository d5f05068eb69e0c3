#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace tw::nn {

enum class ModelKind { LstmRecon, GanLstm, Tst };

std::string_view to_string(ModelKind kind) noexcept;
std::optional<ModelKind> parse_model_kind(std::string_view text) noexcept;

struct ModelConfig {
  ModelKind kind = ModelKind::LstmRecon;
  int input_size = 1;
  int hidden_size = 64;
  int n_layers = 2;
  /// Number of reconstructed features; the first `output_size` inputs unless
  /// `output_features` lists them explicitly.
  int output_size = 5;
  std::vector<int> output_features;
  double dropout = 0.2;
  int seq_len = 64;
  std::uint64_t seed = 0;
  /// GanLstm noise width.
  int latent_size = 16;
  /// Weight of the adversarial term in the GanLstm generator objective.
  double adversarial_weight = 0.1;
  /// Tst attention heads and feed-forward width.
  int n_heads = 4;
  int ff_size = 128;

  /// Throws Error(BadConfig).
  void validate() const;
  /// Indices of the reconstructed input features.
  std::vector<int> resolved_outputs() const;
};

struct OptimHyper {
  double lr = 1e-4;
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double max_grad_norm = 1.0;
  int epochs = 10;
  int batch_size = 32;

  /// Throws Error(BadConfig).
  void validate() const;
};

}  // namespace tw::nn
