#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tw/error.hpp"
#include "tw/ingest/transmitter.hpp"
#include "tw/util/csv.hpp"

namespace tw::ingest {

std::vector<std::string> jpl_reference_columns(BandKey /*band*/) {
  // Every band pair observed so far shares this list; band-specific lists
  // can be added here as fixtures for them appear.
  return {"datetime",       "dss",          "forward_power", "reverse_power",  "drive_power",
          "exciter_power",  "gain_slope",   "running_time",  "load_t_in_raw",  "load_t_out_raw",
          "coll_t_out_raw", "vac_ion_v",    "vac_ion_on_off", "fill_air_tach"};
}

namespace {

void diff_schema(SchemaReport& report, const std::vector<std::string>& reference) {
  for (const auto& c : report.columns_seen) {
    if (std::find(reference.begin(), reference.end(), c) == reference.end()) report.columns_extra.push_back(c);
  }
  for (const auto& c : reference) {
    if (std::find(report.columns_seen.begin(), report.columns_seen.end(), c) == report.columns_seen.end()) {
      report.columns_missing.push_back(c);
    }
  }
}

bool is_missing_text(std::string_view s) { return s.empty() || s == "NaN" || s == "nan"; }

}  // namespace

ParsedTransmitter parse_jpl_body(std::string_view text, BandKey band) {
  const auto lines = csv::split_records(text);
  std::size_t li = 0;
  while (li < lines.size() && csv::trim(lines[li]).empty()) ++li;
  if (li == lines.size()) throw Error(Errc::HeaderMissing, "JPL body is blank");

  ParsedTransmitter out;
  auto& report = out.report;
  for (auto& h : csv::split_line(lines[li])) report.columns_seen.push_back(csv::trim(h));
  const auto& cols = report.columns_seen;
  auto locate = [&](std::initializer_list<std::string_view> names) -> std::ptrdiff_t {
    for (auto n : names) {
      if (auto it = std::find(cols.begin(), cols.end(), n); it != cols.end()) return it - cols.begin();
    }
    return -1;
  };
  const auto t_col = locate({"datetime", "timestamp"});
  const auto dss_col = locate({"dss"});
  if (t_col < 0 || dss_col < 0) {
    throw Error(Errc::HeaderMissing, fmt::format("JPL {} header lacks datetime/dss: '{}'", to_string(band), lines[li]));
  }
  diff_schema(report, jpl_reference_columns(band));

  for (++li; li < lines.size(); ++li) {
    const std::string line = csv::trim(lines[li]);
    if (line.empty()) continue;
    const std::size_t line_no = li + 1;
    auto reject = [&](std::string reason) {
      ++report.rows_rejected;
      report.rejected.push_back(RejectedLine{line_no, reason});
      spdlog::debug("JPL {} line {} rejected: {}", to_string(band), line_no, reason);
    };
    const auto fields = csv::split_line(line);
    if (fields.size() != cols.size()) {
      reject(fmt::format("expected {} fields, got {}", cols.size(), fields.size()));
      continue;
    }
    const auto ts = parse_iso8601(fields[static_cast<std::size_t>(t_col)]);
    const auto dss = csv::parse_double(fields[static_cast<std::size_t>(dss_col)]);
    if (!ts || !dss || !std::isfinite(*dss)) {
      reject("bad datetime or dss");
      continue;
    }
    TransmitterRecord rec;
    rec.timestamp = *ts;
    rec.dss = static_cast<int>(*dss);
    bool ok = true;
    for (std::size_t i = 0; i < cols.size() && ok; ++i) {
      if (static_cast<std::ptrdiff_t>(i) == t_col || static_cast<std::ptrdiff_t>(i) == dss_col) continue;
      const std::string cell = csv::trim(fields[i]);
      if (is_missing_text(cell)) {
        rec.values.emplace_back(cols[i], kMissing);
      } else if (auto v = csv::parse_double(cell)) {
        rec.values.emplace_back(cols[i], *v);
      } else {
        reject(fmt::format("non-numeric {} '{}'", cols[i], cell));
        ok = false;
      }
    }
    if (!ok) continue;
    ++report.rows_parsed;
    out.records.push_back(std::move(rec));
  }
  report.empty_body = report.rows_parsed == 0 && report.rows_rejected == 0;
  return out;
}

std::vector<Record> to_records(const std::vector<TransmitterRecord>& records, std::uint64_t first_seq) {
  std::vector<Record> out;
  out.reserve(records.size());
  std::uint64_t seq = first_seq;
  for (const auto& r : records) {
    out.push_back(Record{r.timestamp, TrackKey{r.dss, 0}, r.values, seq++});
  }
  return out;
}

}  // namespace tw::ingest
