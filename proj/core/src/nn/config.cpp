#include "tw/nn/config.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "tw/error.hpp"

namespace tw::nn {

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::LstmRecon: return "lstm";
    case ModelKind::GanLstm: return "gan-lstm";
    case ModelKind::Tst: return "tst";
  }
  return "lstm";
}

std::optional<ModelKind> parse_model_kind(std::string_view text) noexcept {
  if (text == "lstm" || text == "LstmRecon") return ModelKind::LstmRecon;
  if (text == "gan-lstm" || text == "gan" || text == "GanLstm") return ModelKind::GanLstm;
  if (text == "tst" || text == "Tst") return ModelKind::Tst;
  return std::nullopt;
}

void ModelConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(Errc::BadConfig, m); };
  if (input_size < 1) bad("input_size must be >= 1");
  if (hidden_size < 1) bad("hidden_size must be >= 1");
  if (n_layers < 1) bad("n_layers must be >= 1");
  if (output_size < 1) bad("output_size must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) bad("dropout must lie in [0, 1)");
  if (seq_len < 1) bad("seq_len must be >= 1");
  if (kind == ModelKind::LstmRecon && seq_len < 2) bad("lstm predicts each next step and needs seq_len >= 2");
  if (latent_size < 1) bad("latent_size must be >= 1");
  if (adversarial_weight < 0.0) bad("adversarial_weight must be >= 0");
  if (kind == ModelKind::Tst) {
    if (n_heads < 1 || hidden_size % n_heads != 0) {
      bad(fmt::format("hidden_size {} is not divisible by {} heads", hidden_size, n_heads));
    }
    if (ff_size < 1) bad("ff_size must be >= 1");
  }
  for (int f : output_features) {
    if (f < 0 || f >= input_size) bad(fmt::format("output feature {} out of range", f));
  }
}

std::vector<int> ModelConfig::resolved_outputs() const {
  if (!output_features.empty()) return output_features;
  std::vector<int> out;
  for (int f = 0; f < std::min(output_size, input_size); ++f) out.push_back(f);
  return out;
}

void OptimHyper::validate() const {
  auto bad = [](const std::string& m) { throw Error(Errc::BadConfig, m); };
  if (!(lr > 0.0)) bad("lr must be > 0");
  if (weight_decay < 0.0) bad("weight_decay must be >= 0");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) bad("betas must lie in (0, 1)");
  if (!(eps > 0.0)) bad("eps must be > 0");
  if (!(max_grad_norm > 0.0)) bad("max_grad_norm must be > 0");
  if (epochs < 0) bad("epochs must be >= 0");
  if (batch_size < 1) bad("batch_size must be >= 1");
}

}  // namespace tw::nn
