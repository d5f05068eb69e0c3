#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tw/util/time.hpp"

namespace tw {

/// Station / spacecraft pair that identifies one track.
struct TrackKey {
  int dss = 0;
  int scid = 0;

  friend auto operator<=>(const TrackKey&, const TrackKey&) = default;
};

std::string to_string(TrackKey key);
/// Accepts "34:21" or "34/21".
std::optional<TrackKey> parse_track_key(std::string_view text);

enum class Provenance { AntennaDataset, JplTransmitter, CecTransmitter, Synthetic };

std::string_view to_string(Provenance p) noexcept;
std::optional<Provenance> parse_provenance(std::string_view text) noexcept;

/// Missing-value marker. Distinct from every finite value, including 0.0.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) noexcept { return v != v; }

struct Column {
  std::string name;
  std::vector<double> values;
};

/// Timestamp-sorted multivariate series for one TrackKey.
///
/// Invariants: every column has rows() values, column names are unique and
/// timestamps are non-decreasing. `sequence` records each row's arrival
/// number, which breaks ties between equal timestamps.
struct TrackFrame {
  TrackKey key;
  Provenance provenance = Provenance::Synthetic;
  std::vector<Micros> timestamps;
  std::vector<std::uint64_t> sequence;
  std::vector<Column> columns;

  std::size_t rows() const noexcept { return timestamps.size(); }
  bool empty() const noexcept { return timestamps.empty(); }

  const Column* find(std::string_view name) const noexcept;
  Column* find(std::string_view name) noexcept;
  /// Throws Error(UnknownColumn).
  const Column& column(std::string_view name) const;
  std::vector<std::string> column_names() const;

  /// Copy of the listed rows (in the given order), all columns kept.
  TrackFrame take_rows(std::span<const std::size_t> rows) const;

  /// Throws Error(BadFormat) when an invariant is violated.
  void validate() const;

  bool operator==(const TrackFrame& other) const;
};

/// One observation as it arrives from a source. Features omitted from the
/// list are missing for this record.
struct Record {
  Micros timestamp = 0;
  TrackKey key;
  std::vector<std::pair<std::string, double>> features;
  /// Arrival sequence number; ties on timestamp are ordered by it.
  std::uint64_t seq = 0;
};

using FrameMap = std::map<TrackKey, TrackFrame>;

/// Groups records by key and sorts each group by (timestamp, seq). Columns
/// appear in first-seen order along that sorted sequence, so the result does
/// not depend on input ordering.
FrameMap build_track_frames(std::span<const Record> records, Provenance provenance = Provenance::Synthetic);

/// Frame for `key`, or an empty frame carrying that key.
TrackFrame select_track(const FrameMap& frames, TrackKey key);

enum class ImputePolicy { ForwardFillThenDropLeading, DropRowsWithMissing, ZeroFill };

TrackFrame impute_missing(const TrackFrame& frame, ImputePolicy policy);

/// Columns that carry bookkeeping rather than telemetry (row indices, time
/// encodings, the key columns and unnamed spreadsheet columns).
bool is_bookkeeping_column(std::string_view name);

/// Column names of `frame` that are not bookkeeping columns.
std::vector<std::string> modeling_columns(const TrackFrame& frame);

}  // namespace tw
