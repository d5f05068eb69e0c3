#pragma once

#include <optional>

#include <nlohmann/json.hpp>

#include "tw/prep/pca.hpp"
#include "tw/prep/scaler.hpp"

namespace tw::prep {

inline constexpr const char* kPrepMagic = "twpp1";

/// Versioned preprocessing document: {"magic": "twpp1", "scaler": ..., "pca": ...}.
struct PrepDocument {
  ScalerParams scaler;
  std::optional<PcaResult> pca;
};

nlohmann::ordered_json to_json(const PrepDocument& doc);
/// Throws Error(BadFormat) on a wrong magic or malformed document.
PrepDocument prep_from_json(const nlohmann::ordered_json& j);

}  // namespace tw::prep
