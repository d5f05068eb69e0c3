#include "tw/prep/serialize.hpp"

#include "tw/error.hpp"

namespace tw::prep {

using nlohmann::ordered_json;

ordered_json to_json(const PrepDocument& doc) {
  ordered_json j;
  j["magic"] = kPrepMagic;
  ordered_json cols = ordered_json::array();
  for (const auto& c : doc.scaler.columns) cols.push_back({{"name", c.name}, {"min", c.min}, {"max", c.max}});
  j["scaler"] = {{"columns", cols}};
  if (doc.pca) {
    const auto& p = *doc.pca;
    ordered_json comps = ordered_json::array();
    for (Eigen::Index k = 0; k < p.components.cols(); ++k) {
      std::vector<double> col(p.components.col(k).data(), p.components.col(k).data() + p.components.rows());
      comps.push_back(col);
    }
    j["pca"] = {{"features", p.features},       {"dropped", p.dropped},
                {"variance_target", p.variance_target}, {"n_for_target", p.n_for_target},
                {"eigenvalues", p.eigenvalues}, {"explained_ratio", p.explained_ratio},
                {"top_features", p.top_features}, {"components", comps}};
  }
  return j;
}

PrepDocument prep_from_json(const ordered_json& j) {
  try {
    if (j.at("magic").get<std::string>() != kPrepMagic) throw Error(Errc::BadFormat, "not a twpp1 document");
    PrepDocument doc;
    for (const auto& c : j.at("scaler").at("columns")) {
      doc.scaler.columns.push_back({c.at("name").get<std::string>(), c.at("min").get<double>(), c.at("max").get<double>()});
    }
    if (j.contains("pca")) {
      const auto& q = j["pca"];
      PcaResult p;
      p.features = q.at("features").get<std::vector<std::string>>();
      p.dropped = q.at("dropped").get<std::vector<std::string>>();
      p.variance_target = q.at("variance_target").get<double>();
      p.n_for_target = q.at("n_for_target").get<int>();
      p.eigenvalues = q.at("eigenvalues").get<std::vector<double>>();
      p.explained_ratio = q.at("explained_ratio").get<std::vector<double>>();
      p.top_features = q.at("top_features").get<std::vector<std::vector<std::string>>>();
      const auto& comps = q.at("components");
      const auto rows = static_cast<Eigen::Index>(p.features.size());
      p.components.resize(rows, static_cast<Eigen::Index>(comps.size()));
      for (std::size_t k = 0; k < comps.size(); ++k) {
        const auto col = comps[k].get<std::vector<double>>();
        if (static_cast<Eigen::Index>(col.size()) != rows) throw Error(Errc::BadFormat, "component length mismatch");
        for (Eigen::Index r = 0; r < rows; ++r) p.components(r, static_cast<Eigen::Index>(k)) = col[static_cast<std::size_t>(r)];
      }
      doc.pca = std::move(p);
    }
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadFormat, std::string("malformed preprocessing document: ") + e.what());
  }
}

}  // namespace tw::prep
