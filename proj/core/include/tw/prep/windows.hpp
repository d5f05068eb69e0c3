#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tw/track/track.hpp"
#include "tw/util/tensor.hpp"

namespace tw::prep {

struct WindowSpec {
  int length = 64;
  int stride = 1;
  /// 0 reconstructs the window; > 0 adds the next `horizon` rows as targets.
  int horizon = 0;

  /// Throws Error(BadConfig).
  void validate() const;
};

/// Half-open frame row range [begin, end).
struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const RowRange&) const = default;
};

struct WindowBatch {
  TrackKey key;
  std::vector<std::string> features;
  Tensor3f data;                      ///< [n_windows, L, n_features]
  std::optional<Tensor3f> targets;    ///< [n_windows, horizon, n_features]
  std::vector<RowRange> index_map;    ///< one per window

  std::size_t size() const noexcept { return index_map.size(); }
  bool empty() const noexcept { return index_map.empty(); }
  std::size_t length() const noexcept { return data.d1; }
  std::size_t n_features() const noexcept { return data.d2; }
};

/// Number of windows floor((n - L - horizon) / stride) + 1, or 0 when the
/// frame is too short.
std::size_t window_count(std::size_t n, const WindowSpec& spec);

/// Slides `spec` over the named columns. Throws Error(UnknownColumn),
/// Error(MissingValue) or Error(BadConfig).
WindowBatch make_windows(const TrackFrame& frame, std::span<const std::string> columns, const WindowSpec& spec);

/// Windows [begin, end) of `batch`.
WindowBatch slice(const WindowBatch& batch, std::size_t begin, std::size_t end);

/// Windows at the listed positions, in order.
WindowBatch select(const WindowBatch& batch, std::span<const std::size_t> windows);

/// First floor(fraction * n) windows train, the rest test; the train count is
/// clamped to [1, n - 1]. Throws Error(TooFewWindows) for n < 2 and
/// Error(BadConfig) for a fraction outside (0, 1).
std::pair<WindowBatch, WindowBatch> chrono_split(const WindowBatch& batch, double train_fraction);

}  // namespace tw::prep
