#include "tw/track/track.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

#include "tw/error.hpp"
#include "tw/util/csv.hpp"

namespace tw {

std::string to_string(TrackKey key) { return fmt::format("{}/{}", key.dss, key.scid); }

std::optional<TrackKey> parse_track_key(std::string_view text) {
  const auto sep = text.find_first_of(":/");
  if (sep == std::string_view::npos) return std::nullopt;
  const auto dss = csv::parse_int(text.substr(0, sep));
  const auto scid = csv::parse_int(text.substr(sep + 1));
  if (!dss || !scid || *dss < 0 || *scid < 0) return std::nullopt;
  return TrackKey{static_cast<int>(*dss), static_cast<int>(*scid)};
}

std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::AntennaDataset: return "antenna-dataset";
    case Provenance::JplTransmitter: return "jpl-transmitter";
    case Provenance::CecTransmitter: return "cec-transmitter";
    case Provenance::Synthetic: return "synthetic";
  }
  return "synthetic";
}

std::optional<Provenance> parse_provenance(std::string_view text) noexcept {
  for (auto p : {Provenance::AntennaDataset, Provenance::JplTransmitter, Provenance::CecTransmitter,
                 Provenance::Synthetic}) {
    if (to_string(p) == text) return p;
  }
  return std::nullopt;
}

const Column* TrackFrame::find(std::string_view name) const noexcept {
  for (const auto& c : columns) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

Column* TrackFrame::find(std::string_view name) noexcept {
  for (auto& c : columns) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const Column& TrackFrame::column(std::string_view name) const {
  if (const Column* c = find(name)) return *c;
  throw Error(Errc::UnknownColumn, fmt::format("no column '{}' in track {}", name, to_string(key)));
}

std::vector<std::string> TrackFrame::column_names() const {
  std::vector<std::string> names;
  names.reserve(columns.size());
  for (const auto& c : columns) names.push_back(c.name);
  return names;
}

TrackFrame TrackFrame::take_rows(std::span<const std::size_t> rows) const {
  TrackFrame out;
  out.key = key;
  out.provenance = provenance;
  out.timestamps.reserve(rows.size());
  out.sequence.reserve(rows.size());
  for (std::size_t r : rows) {
    out.timestamps.push_back(timestamps.at(r));
    out.sequence.push_back(sequence.empty() ? r : sequence.at(r));
  }
  out.columns.reserve(columns.size());
  for (const auto& c : columns) {
    Column nc{c.name, {}};
    nc.values.reserve(rows.size());
    for (std::size_t r : rows) nc.values.push_back(c.values.at(r));
    out.columns.push_back(std::move(nc));
  }
  return out;
}

void TrackFrame::validate() const {
  if (!sequence.empty() && sequence.size() != timestamps.size()) {
    throw Error(Errc::BadFormat, "sequence length differs from timestamps");
  }
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    if (timestamps[i] < timestamps[i - 1]) throw Error(Errc::BadFormat, "timestamps decrease");
  }
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].values.size() != timestamps.size()) {
      throw Error(Errc::BadFormat, fmt::format("column '{}' length mismatch", columns[i].name));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (columns[j].name == columns[i].name) {
        throw Error(Errc::BadFormat, fmt::format("duplicate column '{}'", columns[i].name));
      }
    }
  }
}

bool TrackFrame::operator==(const TrackFrame& other) const {
  if (key != other.key || provenance != other.provenance || timestamps != other.timestamps ||
      sequence != other.sequence || columns.size() != other.columns.size()) {
    return false;
  }
  for (std::size_t i = 0; i < columns.size(); ++i) {
    const auto& a = columns[i];
    const auto& b = other.columns[i];
    if (a.name != b.name || a.values.size() != b.values.size()) return false;
    for (std::size_t r = 0; r < a.values.size(); ++r) {
      const bool ma = is_missing(a.values[r]);
      if (ma != is_missing(b.values[r])) return false;
      if (!ma && a.values[r] != b.values[r]) return false;
    }
  }
  return true;
}

FrameMap build_track_frames(std::span<const Record> records, Provenance provenance) {
  std::map<TrackKey, std::vector<const Record*>> groups;
  for (const auto& r : records) groups[r.key].push_back(&r);

  FrameMap frames;
  for (auto& [key, group] : groups) {
    std::stable_sort(group.begin(), group.end(), [](const Record* a, const Record* b) {
      if (a->timestamp != b->timestamp) return a->timestamp < b->timestamp;
      return a->seq < b->seq;
    });

    TrackFrame frame;
    frame.key = key;
    frame.provenance = provenance;
    frame.timestamps.reserve(group.size());
    frame.sequence.reserve(group.size());

    std::unordered_map<std::string, std::size_t> index;
    for (const Record* r : group) {
      for (const auto& [name, value] : r->features) {
        if (index.emplace(name, frame.columns.size()).second) {
          frame.columns.push_back(Column{name, std::vector<double>(group.size(), kMissing)});
        }
      }
    }
    for (std::size_t row = 0; row < group.size(); ++row) {
      const Record* r = group[row];
      frame.timestamps.push_back(r->timestamp);
      frame.sequence.push_back(r->seq);
      for (const auto& [name, value] : r->features) frame.columns[index.at(name)].values[row] = value;
    }
    frames.emplace(key, std::move(frame));
  }
  return frames;
}

TrackFrame select_track(const FrameMap& frames, TrackKey key) {
  if (auto it = frames.find(key); it != frames.end()) return it->second;
  TrackFrame empty;
  empty.key = key;
  return empty;
}

TrackFrame impute_missing(const TrackFrame& frame, ImputePolicy policy) {
  const std::size_t n = frame.rows();
  switch (policy) {
    case ImputePolicy::ZeroFill: {
      TrackFrame out = frame;
      for (auto& c : out.columns) {
        for (double& v : c.values) {
          if (is_missing(v)) v = 0.0;
        }
      }
      return out;
    }
    case ImputePolicy::DropRowsWithMissing: {
      std::vector<std::size_t> keep;
      for (std::size_t r = 0; r < n; ++r) {
        const bool complete = std::none_of(frame.columns.begin(), frame.columns.end(),
                                           [r](const Column& c) { return is_missing(c.values[r]); });
        if (complete) keep.push_back(r);
      }
      return frame.take_rows(keep);
    }
    case ImputePolicy::ForwardFillThenDropLeading: {
      TrackFrame filled = frame;
      std::size_t first_complete = 0;
      for (auto& c : filled.columns) {
        std::size_t first_seen = n;
        double last = kMissing;
        for (std::size_t r = 0; r < n; ++r) {
          if (is_missing(c.values[r])) {
            c.values[r] = last;
          } else {
            last = c.values[r];
            if (first_seen == n) first_seen = r;
          }
        }
        first_complete = std::max(first_complete, first_seen);
      }
      std::vector<std::size_t> keep;
      for (std::size_t r = first_complete; r < n; ++r) keep.push_back(r);
      return filled.take_rows(keep);
    }
  }
  return frame;
}

bool is_bookkeeping_column(std::string_view name) {
  static constexpr std::string_view kNames[] = {"index", "t", "time", "DOY", "Date", "DSS", "SCID",
                                                "dss", "scid", "datetime", "timestamp"};
  if (name.empty() || name.starts_with("Unnamed")) return true;
  return std::find(std::begin(kNames), std::end(kNames), name) != std::end(kNames);
}

std::vector<std::string> modeling_columns(const TrackFrame& frame) {
  std::vector<std::string> out;
  for (const auto& c : frame.columns) {
    if (!is_bookkeeping_column(c.name)) out.push_back(c.name);
  }
  return out;
}

}  // namespace tw
