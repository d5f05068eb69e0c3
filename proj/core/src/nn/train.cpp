#include "tw/nn/train.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tw/error.hpp"
#include "tw/track/canonical_csv.hpp"
#include "tw/util/base64.hpp"

namespace tw::nn {
namespace {

constexpr std::uint64_t kTrainStream = 0x7a11'0000'0000'0002ULL;
constexpr std::size_t kEvalBatch = 256;

void check_batch(const TrainedModel& m, const prep::WindowBatch& b, const char* what) {
  if (b.empty()) return;
  if (static_cast<int>(b.n_features()) != m.config.input_size) {
    throw Error(Errc::ShapeMismatch,
                fmt::format("{} batch has {} features, model expects {}", what, b.n_features(), m.config.input_size));
  }
  if (static_cast<int>(b.length()) != m.config.seq_len) {
    throw Error(Errc::ShapeMismatch,
                fmt::format("{} batch has windows of {}, model expects {}", what, b.length(), m.config.seq_len));
  }
}

std::vector<std::uint8_t> pack_floats(const Mat<float>& m) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(m.size()) * 4);
  for (Index k = 0; k < m.size(); ++k) {
    auto bits = std::bit_cast<std::uint32_t>(m.data()[k]);
    for (int i = 0; i < 4; ++i) out[static_cast<std::size_t>(k) * 4 + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(bits >> (8 * i));
  }
  return out;
}

void unpack_floats(const std::vector<std::uint8_t>& bytes, Mat<float>& m) {
  if (bytes.size() != static_cast<std::size_t>(m.size()) * 4) throw Error(Errc::BadFormat, "parameter payload size mismatch");
  for (Index k = 0; k < m.size(); ++k) {
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(bytes[static_cast<std::size_t>(k) * 4 + static_cast<std::size_t>(i)]) << (8 * i);
    m.data()[k] = std::bit_cast<float>(bits);
  }
}

}  // namespace

std::vector<std::string> TrainedModel::output_names() const {
  std::vector<std::string> out;
  for (int f : config.resolved_outputs()) {
    out.push_back(static_cast<std::size_t>(f) < features.size() ? features[static_cast<std::size_t>(f)] : fmt::format("f{}", f));
  }
  return out;
}

TrainedModel train(const ModelConfig& config, const OptimHyper& hyper, const prep::WindowBatch& train,
                   const prep::WindowBatch& val) {
  config.validate();
  hyper.validate();
  if (train.empty()) throw Error(Errc::EmptyBatch, "training batch has no windows");
  if (val.empty()) throw Error(Errc::EmptyBatch, "validation batch has no windows");
  if (train.targets || val.targets) throw Error(Errc::BadConfig, "training needs reconstruction windows (horizon 0)");

  TrainedModel out;
  out.config = config;
  out.hyper = hyper;
  out.features = train.features;
  check_batch(out, train, "training");
  check_batch(out, val, "validation");
  out.model = make_model<float>(config);
  out.model->prepare_training(hyper);

  Rng rng(config.seed ^ kTrainStream);
  const std::size_t n = train.size();
  const auto bs = static_cast<std::size_t>(hyper.batch_size);
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    double weighted = 0.0;
    for (std::size_t b0 = 0; b0 < n; b0 += bs) {
      const std::size_t b1 = std::min(n, b0 + bs);
      const Seq<float> x = to_sequence<float>(train.data, b0, b1);
      try {
        weighted += static_cast<double>(out.model->train_batch(x, rng)) * static_cast<double>(b1 - b0);
      } catch (const Error& e) {
        if (e.code() != Errc::NonFiniteLoss) throw;
        throw Error(Errc::NonFiniteLoss,
                    fmt::format("{} (model {}, epoch {}, windows [{}, {}), lr {})", e.what(), to_string(config.kind),
                                epoch + 1, b0, b1, hyper.lr),
                    epoch);
      }
    }
    EpochLoss loss{weighted / static_cast<double>(n), mean_error(out, val)};
    if (!std::isfinite(loss.validation)) {
      throw Error(Errc::NonFiniteLoss,
                  fmt::format("validation loss is not finite (model {}, epoch {})", to_string(config.kind), epoch + 1), epoch);
    }
    spdlog::debug("{} epoch {}: train {:.6g} val {:.6g}", to_string(config.kind), epoch + 1, loss.train, loss.validation);
    out.history.push_back(loss);
  }
  return out;
}

ErrorSeries reconstruct_errors(const TrainedModel& model, const prep::WindowBatch& batch) {
  check_batch(model, batch, "scoring");
  ErrorSeries out;
  out.index_map = batch.index_map;
  out.output_features = model.output_names();
  const auto outputs = static_cast<Index>(out.output_features.size());
  out.per_feature.resize(static_cast<Index>(batch.size()), outputs);
  out.errors.reserve(batch.size());
  for (std::size_t b0 = 0; b0 < batch.size(); b0 += kEvalBatch) {
    const std::size_t b1 = std::min(batch.size(), b0 + kEvalBatch);
    const Mat<float> fe = model.model->feature_errors(to_sequence<float>(batch.data, b0, b1));
    for (Index w = 0; w < fe.cols(); ++w) {
      double sum = 0.0;
      for (Index f = 0; f < outputs; ++f) {
        out.per_feature(static_cast<Index>(b0) + w, f) = static_cast<double>(fe(f, w));
        sum += static_cast<double>(fe(f, w));
      }
      out.errors.push_back(sum / static_cast<double>(outputs));
    }
  }
  return out;
}

double mean_error(const TrainedModel& model, const prep::WindowBatch& batch) {
  if (batch.empty()) return 0.0;
  const auto s = reconstruct_errors(model, batch);
  double sum = 0.0;
  for (double e : s.errors) sum += e;
  return sum / static_cast<double>(s.errors.size());
}

nlohmann::ordered_json config_to_json(const ModelConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"input_size", c.input_size},
          {"hidden_size", c.hidden_size},
          {"n_layers", c.n_layers},
          {"output_size", c.output_size},
          {"output_features", c.output_features},
          {"dropout", c.dropout},
          {"seq_len", c.seq_len},
          {"seed", c.seed},
          {"latent_size", c.latent_size},
          {"adversarial_weight", c.adversarial_weight},
          {"n_heads", c.n_heads},
          {"ff_size", c.ff_size}};
}

ModelConfig config_from_json(const nlohmann::ordered_json& j) {
  ModelConfig c;
  const auto kind = parse_model_kind(j.value("kind", std::string("lstm")));
  if (!kind) throw Error(Errc::BadConfig, fmt::format("unknown model kind '{}'", j.value("kind", std::string())));
  c.kind = *kind;
  c.input_size = j.value("input_size", c.input_size);
  c.hidden_size = j.value("hidden_size", c.hidden_size);
  c.n_layers = j.value("n_layers", c.n_layers);
  c.output_size = j.value("output_size", c.output_size);
  c.output_features = j.value("output_features", c.output_features);
  c.dropout = j.value("dropout", c.dropout);
  c.seq_len = j.value("seq_len", c.seq_len);
  c.seed = j.value("seed", c.seed);
  c.latent_size = j.value("latent_size", c.latent_size);
  c.adversarial_weight = j.value("adversarial_weight", c.adversarial_weight);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.ff_size = j.value("ff_size", c.ff_size);
  return c;
}

nlohmann::ordered_json hyper_to_json(const OptimHyper& h) {
  return {{"lr", h.lr},         {"weight_decay", h.weight_decay},   {"beta1", h.beta1},
          {"beta2", h.beta2},   {"eps", h.eps},                     {"max_grad_norm", h.max_grad_norm},
          {"epochs", h.epochs}, {"batch_size", h.batch_size}};
}

OptimHyper hyper_from_json(const nlohmann::ordered_json& j) {
  OptimHyper h;
  h.lr = j.value("lr", h.lr);
  h.weight_decay = j.value("weight_decay", h.weight_decay);
  h.beta1 = j.value("beta1", h.beta1);
  h.beta2 = j.value("beta2", h.beta2);
  h.eps = j.value("eps", h.eps);
  h.max_grad_norm = j.value("max_grad_norm", h.max_grad_norm);
  h.epochs = j.value("epochs", h.epochs);
  h.batch_size = j.value("batch_size", h.batch_size);
  return h;
}

nlohmann::ordered_json checkpoint_to_json(const TrainedModel& m) {
  nlohmann::ordered_json j;
  j["magic"] = kCheckpointMagic;
  j["config"] = config_to_json(m.config);
  j["hyper"] = hyper_to_json(m.hyper);
  j["features"] = m.features;
  auto hist = nlohmann::ordered_json::array();
  for (const auto& e : m.history) hist.push_back({{"train", e.train}, {"validation", e.validation}});
  j["history"] = hist;
  auto params = nlohmann::ordered_json::array();
  for (const auto& p : m.model->params().items()) {
    params.push_back({{"name", p.name},
                      {"shape", {p.value.rows(), p.value.cols()}},
                      {"data", base64::encode(pack_floats(p.value))}});
  }
  j["params"] = params;
  return j;
}

TrainedModel checkpoint_from_json(const nlohmann::ordered_json& j) {
  try {
    if (j.at("magic").get<std::string>() != kCheckpointMagic) throw Error(Errc::BadFormat, "not a twnn1 checkpoint");
    TrainedModel m;
    m.config = config_from_json(j.at("config"));
    m.hyper = hyper_from_json(j.at("hyper"));
    m.features = j.at("features").get<std::vector<std::string>>();
    for (const auto& e : j.at("history")) m.history.push_back({e.at("train").get<double>(), e.at("validation").get<double>()});
    m.model = make_model<float>(m.config);
    auto& items = m.model->params().items();
    const auto& params = j.at("params");
    if (params.size() != items.size()) {
      throw Error(Errc::BadFormat, fmt::format("checkpoint has {} tensors, model {}", params.size(), items.size()));
    }
    for (const auto& pj : params) {
      auto* p = m.model->params().find(pj.at("name").get<std::string>());
      if (p == nullptr) throw Error(Errc::BadFormat, fmt::format("unknown tensor '{}'", pj.at("name").get<std::string>()));
      const auto shape = pj.at("shape").get<std::vector<Index>>();
      if (shape.size() != 2 || shape[0] != p->value.rows() || shape[1] != p->value.cols()) {
        throw Error(Errc::BadFormat, fmt::format("tensor '{}' has the wrong shape", p->name));
      }
      unpack_floats(base64::decode(pj.at("data").get<std::string>()), p->value);
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadFormat, std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path) {
  write_text_file(path, checkpoint_to_json(model).dump());
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadFormat, std::string("checkpoint is not JSON: ") + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace tw::nn
