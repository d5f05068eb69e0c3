#include <charconv>

#include <fmt/format.h>

#include "tw/agent/workflow.hpp"
#include "tw/error.hpp"
#include "tw/nn/train.hpp"
#include "tw/util/csv.hpp"

namespace tw::agent {

using nlohmann::ordered_json;

namespace {

std::string_view impute_name(ImputePolicy p) {
  switch (p) {
    case ImputePolicy::ForwardFillThenDropLeading:
      return "ffill";
    case ImputePolicy::DropRowsWithMissing:
      return "drop";
    case ImputePolicy::ZeroFill:
      return "zero";
  }
  return "ffill";
}

ImputePolicy parse_impute(const std::string& s) {
  if (s == "ffill") return ImputePolicy::ForwardFillThenDropLeading;
  if (s == "drop") return ImputePolicy::DropRowsWithMissing;
  if (s == "zero") return ImputePolicy::ZeroFill;
  throw Error(Errc::BadConfig, "unknown impute policy '" + s + "'");
}

ordered_json backend_json(const report::ReasoningBackend& b) {
  if (const auto* r = std::get_if<report::RemoteBackend>(&b)) {
    return {{"kind", "remote"}, {"base_url", r->base_url}, {"model", r->model}, {"path", r->path}, {"timeout_s", r->timeout_s}};
  }
  return {{"kind", "template"}};
}

report::ReasoningBackend backend_from(const ordered_json& j) {
  const std::string kind = j.value("kind", std::string("template"));
  if (kind == "template") return report::TemplateBackend{};
  if (kind != "remote") throw Error(Errc::BadConfig, "unknown backend '" + kind + "'");
  report::RemoteBackend r;
  r.base_url = j.value("base_url", r.base_url);
  r.model = j.value("model", r.model);
  r.path = j.value("path", r.path);
  r.timeout_s = j.value("timeout_s", r.timeout_s);
  return r;
}

}  // namespace

std::string DatasetRef::to_string() const {
  if (synthetic) {
    const auto& s = *synthetic;
    return fmt::format("synthetic:rows={},spikes={},seed={},dss={},scid={},period={},noise={},sigmas={},weather={}", s.rows,
                       s.spikes, s.seed, s.key.dss, s.key.scid, s.period, csv::format_double(s.noise_sigma),
                       csv::format_double(s.spike_sigmas), s.weather ? 1 : 0);
  }
  return path ? path->string() : std::string();
}

DatasetRef DatasetRef::parse(std::string_view text) {
  DatasetRef ref;
  constexpr std::string_view prefix = "synthetic";
  if (text.substr(0, prefix.size()) != prefix) {
    if (text.empty()) throw Error(Errc::BadDataset, "empty dataset reference");
    ref.path = std::filesystem::path(std::string(text));
    return ref;
  }
  SyntheticSpec spec;
  std::string_view rest = text.substr(prefix.size());
  if (!rest.empty() && rest.front() == ':') rest.remove_prefix(1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view() : rest.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw Error(Errc::BadDataset, fmt::format("bad synthetic option '{}'", item));
    const std::string key(item.substr(0, eq));
    const auto value = csv::parse_double(item.substr(eq + 1));
    if (!value || *value < 0) throw Error(Errc::BadDataset, fmt::format("bad value for synthetic option '{}'", key));
    const double v = *value;
    if (key == "rows") spec.rows = static_cast<std::size_t>(v);
    else if (key == "spikes") spec.spikes = static_cast<std::size_t>(v);
    else if (key == "seed") spec.seed = static_cast<std::uint64_t>(v);
    else if (key == "dss") spec.key.dss = static_cast<int>(v);
    else if (key == "scid") spec.key.scid = static_cast<int>(v);
    else if (key == "period") spec.period = v;
    else if (key == "noise") spec.noise_sigma = v;
    else if (key == "sigmas") spec.spike_sigmas = v;
    else if (key == "weather") spec.weather = v != 0.0;
    else throw Error(Errc::BadDataset, fmt::format("unknown synthetic option '{}'", key));
  }
  ref.synthetic = spec;
  return ref;
}

void WorkflowConfig::validate() const {
  if (!dataset.path && !dataset.synthetic) throw Error(Errc::BadConfig, "no dataset");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error(Errc::BadConfig, "train_fraction must be in (0, 1)");
  if (feedback_loop_max < 0) throw Error(Errc::BadConfig, "feedback_loop_max must be >= 0");
  if (feedback_timeout.count() < 0) throw Error(Errc::BadConfig, "feedback timeout must be >= 0");
  forest.validate();
  window.validate();
  if (window.horizon != 0) throw Error(Errc::BadConfig, "workflow models reconstruct windows; horizon must be 0");
  hyper.validate();
  threshold.validate();
  qhyper.validate();
  if (const auto* r = std::get_if<report::RemoteBackend>(&backend); r && r->base_url.empty()) {
    throw Error(Errc::BadConfig, "remote backend needs a base url");
  }
}

WorkflowConfig default_config() {
  WorkflowConfig c;
  c.dataset.synthetic = SyntheticSpec{};
  c.dataset.synthetic->rows = 1000;
  c.dataset.synthetic->spikes = 5;
  c.model.kind = nn::ModelKind::LstmRecon;
  c.model.hidden_size = 32;
  c.hyper.lr = 3e-3;
  c.hyper.epochs = 40;
  return c;
}

ordered_json to_json(const WorkflowConfig& c) {
  return {{"dataset", c.dataset.to_string()},
          {"track", c.track ? ordered_json(tw::to_string(*c.track)) : ordered_json(nullptr)},
          {"features", c.features},
          {"impute", impute_name(c.impute)},
          {"train_fraction", c.train_fraction},
          {"filter_outliers", c.filter_outliers},
          {"forest", {{"n_trees", c.forest.n_trees}, {"subsample", c.forest.subsample}, {"contamination", c.forest.contamination}}},
          {"window", {{"length", c.window.length}, {"stride", c.window.stride}}},
          {"model", nn::config_to_json(c.model)},
          {"hyper", nn::hyper_to_json(c.hyper)},
          {"threshold",
           {{"method", c.threshold.kind == detect::ThresholdMethod::Kind::MeanKSigma ? "mean-k-sigma" : "percentile"},
            {"value", c.threshold.value}}},
          {"qhyper", verify::to_json(c.qhyper)},
          {"rubric", {{"z_high", c.rubric.z_high}, {"z_medium", c.rubric.z_medium}, {"wind_cutoff", c.rubric.wind_cutoff}}},
          {"backend", backend_json(c.backend)},
          {"feedback_loop_max", c.feedback_loop_max},
          {"feedback_source", c.feedback_source},
          {"feedback_timeout_ms", c.feedback_timeout.count()},
          {"seed", c.seed}};
}

WorkflowConfig config_from_json(const ordered_json& j, WorkflowConfig c) {
  if (!j.is_object()) throw Error(Errc::BadConfig, "config must be a JSON object");
  try {
    if (j.contains("dataset")) c.dataset = DatasetRef::parse(j["dataset"].get<std::string>());
    if (j.contains("track")) {
      if (j["track"].is_null()) {
        c.track.reset();
      } else {
        c.track = parse_track_key(j["track"].get<std::string>());
        if (!c.track) throw Error(Errc::BadConfig, "bad track key");
      }
    }
    c.features = j.value("features", c.features);
    if (j.contains("impute")) c.impute = parse_impute(j["impute"].get<std::string>());
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    c.filter_outliers = j.value("filter_outliers", c.filter_outliers);
    if (j.contains("forest")) {
      const auto& f = j["forest"];
      c.forest.n_trees = f.value("n_trees", c.forest.n_trees);
      c.forest.subsample = f.value("subsample", c.forest.subsample);
      c.forest.contamination = f.value("contamination", c.forest.contamination);
    }
    if (j.contains("window")) {
      c.window.length = j["window"].value("length", c.window.length);
      c.window.stride = j["window"].value("stride", c.window.stride);
    }
    if (j.contains("model")) {
      ordered_json m = nn::config_to_json(c.model);
      m.merge_patch(j["model"]);
      c.model = nn::config_from_json(m);
    }
    if (j.contains("hyper")) {
      ordered_json h = nn::hyper_to_json(c.hyper);
      h.merge_patch(j["hyper"]);
      c.hyper = nn::hyper_from_json(h);
    }
    if (j.contains("threshold")) {
      const auto& t = j["threshold"];
      const std::string method = t.value("method", std::string("mean-k-sigma"));
      if (method == "mean-k-sigma") c.threshold.kind = detect::ThresholdMethod::Kind::MeanKSigma;
      else if (method == "percentile") c.threshold.kind = detect::ThresholdMethod::Kind::Percentile;
      else throw Error(Errc::BadConfig, "unknown threshold method '" + method + "'");
      c.threshold.value = t.value("value", c.threshold.value);
    }
    if (j.contains("qhyper")) {
      ordered_json q = verify::to_json(c.qhyper);
      q.merge_patch(j["qhyper"]);
      c.qhyper = verify::qhyper_from_json(q);
    }
    if (j.contains("rubric")) {
      const auto& r = j["rubric"];
      c.rubric.z_high = r.value("z_high", c.rubric.z_high);
      c.rubric.z_medium = r.value("z_medium", c.rubric.z_medium);
      c.rubric.wind_cutoff = r.value("wind_cutoff", c.rubric.wind_cutoff);
    }
    if (j.contains("backend")) c.backend = backend_from(j["backend"]);
    c.feedback_loop_max = j.value("feedback_loop_max", c.feedback_loop_max);
    c.feedback_source = j.value("feedback_source", c.feedback_source);
    if (j.contains("feedback_timeout_ms")) c.feedback_timeout = std::chrono::milliseconds(j["feedback_timeout_ms"].get<long long>());
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::BadConfig, std::string("bad config: ") + ex.what());
  } catch (const Error& e) {
    if (e.code() == Errc::BadDataset) throw;
    if (e.code() != Errc::BadConfig) throw Error(Errc::BadConfig, e.what());
    throw;
  }
  return c;
}

}  // namespace tw::agent
