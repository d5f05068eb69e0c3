#include "tw/track/canonical_csv.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "tw/error.hpp"
#include "tw/util/csv.hpp"

namespace tw {

std::string write_canonical_csv(std::span<const TrackFrame> frames) {
  std::vector<std::string> names;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& f : frames) {
    for (const auto& c : f.columns) {
      if (index.emplace(c.name, names.size()).second) names.push_back(c.name);
    }
  }

  std::string out = "timestamp_us,dss,scid";
  for (const auto& n : names) {
    out += ',';
    out += csv::quote(n);
  }
  out += '\n';

  for (const auto& f : frames) {
    std::vector<const Column*> cols(names.size(), nullptr);
    for (const auto& c : f.columns) cols[index.at(c.name)] = &c;
    for (std::size_t r = 0; r < f.rows(); ++r) {
      out += fmt::format("{},{},{}", f.timestamps[r], f.key.dss, f.key.scid);
      for (const Column* c : cols) {
        out += ',';
        if (c != nullptr && !is_missing(c->values[r])) out += csv::format_double(c->values[r]);
      }
      out += '\n';
    }
  }
  return out;
}

std::string write_canonical_csv(const TrackFrame& frame) {
  return write_canonical_csv(std::span<const TrackFrame>(&frame, 1));
}

std::string write_canonical_csv(const FrameMap& frames) {
  std::vector<TrackFrame> ordered;
  ordered.reserve(frames.size());
  for (const auto& [key, f] : frames) ordered.push_back(f);
  return write_canonical_csv(std::span<const TrackFrame>(ordered));
}

FrameMap read_canonical_csv(std::string_view text, Provenance provenance) {
  const auto lines = csv::split_records(text);
  std::size_t li = 0;
  while (li < lines.size() && csv::trim(lines[li]).empty()) ++li;
  if (li == lines.size()) return {};

  const auto header = csv::split_line(lines[li]);
  if (header.size() < 3 || header[0] != "timestamp_us" || header[1] != "dss" || header[2] != "scid") {
    throw Error(Errc::BadFormat, "canonical header must start with timestamp_us,dss,scid");
  }
  const std::vector<std::string> names(header.begin() + 3, header.end());

  std::vector<Record> records;
  std::uint64_t seq = 0;
  for (++li; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto fields = csv::split_line(lines[li]);
    if (fields.size() != header.size()) {
      throw Error(Errc::BadFormat, fmt::format("line {}: expected {} fields", li + 1, header.size()),
                  static_cast<std::int64_t>(li + 1));
    }
    const auto ts = csv::parse_int(fields[0]);
    const auto dss = csv::parse_int(fields[1]);
    const auto scid = csv::parse_int(fields[2]);
    if (!ts || !dss || !scid) {
      throw Error(Errc::BadFormat, fmt::format("line {}: bad key fields", li + 1), static_cast<std::int64_t>(li + 1));
    }
    Record rec;
    rec.timestamp = *ts;
    rec.key = TrackKey{static_cast<int>(*dss), static_cast<int>(*scid)};
    rec.seq = seq++;
    rec.features.reserve(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
      const auto& field = fields[i + 3];
      if (field.empty()) {
        rec.features.emplace_back(names[i], kMissing);
        continue;
      }
      const auto v = csv::parse_double(field);
      if (!v) {
        throw Error(Errc::BadFormat, fmt::format("line {}: bad number '{}'", li + 1, field),
                    static_cast<std::int64_t>(li + 1));
      }
      rec.features.emplace_back(names[i], *v);
    }
    records.push_back(std::move(rec));
  }

  FrameMap frames = build_track_frames(records, provenance);
  // Keys with no rows of a column still get it, so every frame read from one
  // file shares the header's column set and order.
  for (auto& [key, f] : frames) {
    std::vector<Column> cols;
    cols.reserve(names.size());
    for (const auto& n : names) {
      if (Column* c = f.find(n)) {
        cols.push_back(std::move(*c));
      } else {
        cols.push_back(Column{n, std::vector<double>(f.rows(), kMissing)});
      }
    }
    f.columns = std::move(cols);
  }
  return frames;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, fmt::format("cannot write {}", path.string()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(Errc::IoError, fmt::format("short write to {}", path.string()));
}

}  // namespace tw
