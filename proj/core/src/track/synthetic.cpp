#include "tw/track/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "tw/error.hpp"

namespace tw {

SyntheticTrack make_synthetic_track(const SyntheticSpec& spec) {
  if (spec.spikes > 0 && spec.rows < 2 * spec.spike_margin + 1) {
    throw Error(Errc::BadConfig, "synthetic track too short for spikes");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.noise_sigma);

  SyntheticTrack out;
  auto& f = out.frame;
  f.key = spec.key;
  f.provenance = Provenance::Synthetic;
  Column ssnr{"SSNR", {}}, pcno{"PCNO", {}};
  Column humid{"WX_HUMID", {}}, temp{"TEMP", {}}, wind{"WIND", {}}, rain{"RAIN", {}};
  for (std::size_t r = 0; r < spec.rows; ++r) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(r) / spec.period;
    f.timestamps.push_back(spec.start + static_cast<Micros>(r) * spec.step);
    f.sequence.push_back(r);
    ssnr.values.push_back(std::sin(phase) + noise(rng));
    pcno.values.push_back(std::cos(phase) + noise(rng));
    if (spec.weather) {
      const double slow = static_cast<double>(r) / static_cast<double>(std::max<std::size_t>(spec.rows, 1));
      humid.values.push_back(26.0 + 2.0 * slow);
      temp.values.push_back(12.0 + 3.0 * std::sin(std::numbers::pi * slow));
      wind.values.push_back(5.0 + 10.0 * slow);
      rain.values.push_back(0.0);
    }
  }

  std::uniform_int_distribution<std::size_t> pick(spec.spike_margin, spec.rows - spec.spike_margin - 1);
  std::size_t attempts = 0;
  while (out.spike_rows.size() < spec.spikes) {
    if (++attempts > 100000) throw Error(Errc::BadConfig, "cannot place spikes with the requested margin");
    const std::size_t r = pick(rng);
    const bool clear = std::all_of(out.spike_rows.begin(), out.spike_rows.end(), [&](std::size_t s) {
      return (r > s ? r - s : s - r) >= spec.spike_margin;
    });
    if (clear) out.spike_rows.push_back(r);
  }
  std::sort(out.spike_rows.begin(), out.spike_rows.end());
  for (std::size_t r : out.spike_rows) ssnr.values[r] += spec.spike_sigmas * spec.noise_sigma;

  f.columns.push_back(std::move(ssnr));
  f.columns.push_back(std::move(pcno));
  if (spec.weather) {
    f.columns.push_back(std::move(humid));
    f.columns.push_back(std::move(temp));
    f.columns.push_back(std::move(wind));
    f.columns.push_back(std::move(rain));
  }
  return out;
}

}  // namespace tw
