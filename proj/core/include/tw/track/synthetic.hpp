#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tw/track/track.hpp"

namespace tw {

struct SyntheticSpec {
  TrackKey key{34, 21};
  std::size_t rows = 200;
  double period = 50.0;       ///< rows per sine cycle
  double noise_sigma = 0.05;  ///< Gaussian noise on each modeled feature
  std::size_t spikes = 0;
  double spike_sigmas = 6.0;  ///< spike height in units of noise_sigma
  std::size_t spike_margin = 40;  ///< minimum distance from edges and between spikes
  bool weather = true;        ///< add WX_HUMID, TEMP, WIND, RAIN context columns
  Micros start = 1735689600000000;  ///< 2025-01-01T00:00:00Z
  Micros step = 2'000'000;          ///< two seconds between rows
  std::uint64_t seed = 0;
};

struct SyntheticTrack {
  TrackFrame frame;
  /// Rows carrying a planted spike, ascending.
  std::vector<std::size_t> spike_rows;
};

/// Two modeled features, SSNR = sin(2 pi r / period) and PCNO =
/// cos(2 pi r / period), each with independent noise. Spikes add
/// spike_sigmas * noise_sigma to SSNR at distinct random rows.
SyntheticTrack make_synthetic_track(const SyntheticSpec& spec);

inline const std::vector<std::string>& synthetic_features() {
  static const std::vector<std::string> f{"SSNR", "PCNO"};
  return f;
}

}  // namespace tw
