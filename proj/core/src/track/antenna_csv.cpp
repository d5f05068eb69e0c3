#include "tw/track/antenna_csv.hpp"

#include <cmath>

#include <fmt/format.h>

#include "tw/error.hpp"
#include "tw/util/csv.hpp"

namespace tw {
namespace {

bool is_nan_text(std::string_view s) { return s.empty() || s == "NaN" || s == "nan" || s == "NA" || s == "None"; }

}  // namespace

AntennaCsvResult read_antenna_csv(std::string_view text, const AntennaCsvOptions& options) {
  const auto lines = csv::split_records(text);
  std::size_t li = 0;
  while (li < lines.size() && csv::trim(lines[li]).empty()) ++li;
  if (li == lines.size()) throw Error(Errc::HeaderMissing, "antenna csv has no header");

  auto header = csv::split_line(lines[li]);
  for (std::size_t i = 0; i < header.size(); ++i) {
    header[i] = csv::trim(header[i]);
    if (header[i].empty()) header[i] = fmt::format("Unnamed: {}", i);
  }
  auto locate = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw Error(Errc::MissingFeature, fmt::format("antenna csv lacks column '{}'", name));
  };
  const std::size_t t_col = locate(options.time_column);
  const std::size_t dss_col = locate(options.dss_column);
  const std::size_t scid_col = locate(options.scid_column);

  AntennaCsvResult result;
  std::uint64_t seq = 0;
  for (++li; li < lines.size(); ++li) {
    if (csv::trim(lines[li]).empty()) continue;
    const auto fields = csv::split_line(lines[li]);
    const std::uint64_t this_seq = seq++;
    if (fields.size() != header.size()) {
      ++result.rows_rejected;
      continue;
    }
    const auto t = csv::parse_double(fields[t_col]);
    const auto dss = csv::parse_double(fields[dss_col]);
    const auto scid = csv::parse_double(fields[scid_col]);
    auto finite = [](const std::optional<double>& v) { return v && std::isfinite(*v); };
    if (!finite(t) || !finite(dss) || !finite(scid)) {
      ++result.rows_rejected;
      continue;
    }
    Record rec;
    rec.timestamp = serial_day_to_micros(*t);
    rec.key = TrackKey{static_cast<int>(*dss), static_cast<int>(*scid)};
    rec.seq = this_seq;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i == t_col || i == dss_col || i == scid_col) continue;
      const std::string cell = csv::trim(fields[i]);
      double v = kMissing;
      if (!is_nan_text(cell)) {
        if (auto parsed = csv::parse_double(cell)) {
          v = *parsed;
        } else {
          ++result.cells_unparsed;
        }
      }
      rec.features.emplace_back(header[i], v);
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

}  // namespace tw
