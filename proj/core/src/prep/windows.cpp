#include "tw/prep/windows.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "tw/error.hpp"

namespace tw::prep {

void WindowSpec::validate() const {
  if (length < 1) throw Error(Errc::BadConfig, "window length must be >= 1");
  if (stride < 1) throw Error(Errc::BadConfig, "window stride must be >= 1");
  if (horizon < 0) throw Error(Errc::BadConfig, "window horizon must be >= 0");
}

std::size_t window_count(std::size_t n, const WindowSpec& spec) {
  const auto need = static_cast<std::size_t>(spec.length) + static_cast<std::size_t>(spec.horizon);
  if (n < need) return 0;
  return (n - need) / static_cast<std::size_t>(spec.stride) + 1;
}

WindowBatch make_windows(const TrackFrame& frame, std::span<const std::string> columns, const WindowSpec& spec) {
  spec.validate();
  std::vector<const std::vector<double>*> cols;
  for (const auto& name : columns) {
    const auto& col = frame.column(name);
    for (std::size_t r = 0; r < col.values.size(); ++r) {
      if (is_missing(col.values[r])) {
        throw Error(Errc::MissingValue, fmt::format("column '{}' is missing at row {}", name, r),
                    static_cast<std::int64_t>(r));
      }
    }
    cols.push_back(&col.values);
  }

  WindowBatch out;
  out.key = frame.key;
  out.features.assign(columns.begin(), columns.end());
  const std::size_t n = window_count(frame.rows(), spec);
  const auto L = static_cast<std::size_t>(spec.length);
  const auto H = static_cast<std::size_t>(spec.horizon);
  const std::size_t F = cols.size();
  out.data = Tensor3f(n, L, F);
  if (H > 0) out.targets = Tensor3f(n, H, F);
  out.index_map.reserve(n);
  for (std::size_t w = 0; w < n; ++w) {
    const std::size_t start = w * static_cast<std::size_t>(spec.stride);
    out.index_map.push_back({start, start + L});
    for (std::size_t t = 0; t < L; ++t) {
      for (std::size_t f = 0; f < F; ++f) out.data(w, t, f) = static_cast<float>((*cols[f])[start + t]);
    }
    for (std::size_t t = 0; t < H; ++t) {
      for (std::size_t f = 0; f < F; ++f) (*out.targets)(w, t, f) = static_cast<float>((*cols[f])[start + L + t]);
    }
  }
  return out;
}

WindowBatch select(const WindowBatch& batch, std::span<const std::size_t> windows) {
  WindowBatch out;
  out.key = batch.key;
  out.features = batch.features;
  const std::size_t L = batch.data.d1, F = batch.data.d2;
  out.data = Tensor3f(windows.size(), L, F);
  if (batch.targets) out.targets = Tensor3f(windows.size(), batch.targets->d1, F);
  const std::size_t block = L * F;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const std::size_t w = windows[i];
    if (w >= batch.size()) throw Error(Errc::ShapeMismatch, fmt::format("window {} out of range", w));
    std::copy_n(batch.data.data.begin() + static_cast<std::ptrdiff_t>(w * block), block,
                out.data.data.begin() + static_cast<std::ptrdiff_t>(i * block));
    if (batch.targets) {
      const std::size_t tb = batch.targets->d1 * F;
      std::copy_n(batch.targets->data.begin() + static_cast<std::ptrdiff_t>(w * tb), tb,
                  out.targets->data.begin() + static_cast<std::ptrdiff_t>(i * tb));
    }
    out.index_map.push_back(batch.index_map[w]);
  }
  return out;
}

WindowBatch slice(const WindowBatch& batch, std::size_t begin, std::size_t end) {
  if (begin > end || end > batch.size()) throw Error(Errc::ShapeMismatch, "window slice out of range");
  std::vector<std::size_t> idx;
  for (std::size_t w = begin; w < end; ++w) idx.push_back(w);
  return select(batch, idx);
}

std::pair<WindowBatch, WindowBatch> chrono_split(const WindowBatch& batch, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(Errc::BadConfig, "train fraction must lie in (0, 1)");
  }
  const std::size_t n = batch.size();
  if (n < 2) throw Error(Errc::TooFewWindows, fmt::format("{} window(s); need at least 2", n));
  auto k = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
  k = std::clamp<std::size_t>(k, 1, n - 1);
  return {slice(batch, 0, k), slice(batch, k, n)};
}

}  // namespace tw::prep
