#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include <fmt/format.h>
#include <zlib.h>

#include "tw/error.hpp"
#include "tw/ingest/transmitter.hpp"
#include "tw/util/csv.hpp"

namespace tw::ingest {
namespace {

constexpr std::size_t kBlock = 512;

std::string gunzip(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 18 || bytes[0] != 0x1f || bytes[1] != 0x8b) {
    throw Error(Errc::NotAnArchive, "missing gzip magic");
  }
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw Error(Errc::NotAnArchive, "inflateInit2 failed");
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());

  std::string out;
  char buf[1 << 15];
  int rc = Z_OK;
  do {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof(buf);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw Error(Errc::NotAnArchive, fmt::format("corrupt gzip stream (zlib {})", rc));
    }
    out.append(buf, sizeof(buf) - zs.avail_out);
  } while (rc != Z_STREAM_END && zs.avail_in > 0);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error(Errc::NotAnArchive, "truncated gzip stream");
  return out;
}

std::uint64_t octal(std::string_view field) {
  std::uint64_t v = 0;
  for (char c : field) {
    if (c == '\0' || c == ' ') {
      if (v != 0) break;
      continue;
    }
    if (c < '0' || c > '7') throw Error(Errc::NotAnArchive, "bad octal field in tar header");
    v = v * 8 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

std::string cstr(std::string_view field) { return std::string(field.substr(0, field.find('\0'))); }

bool checksum_ok(std::string_view header) {
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < kBlock; ++i) {
    sum += (i >= 148 && i < 156) ? static_cast<unsigned char>(' ') : static_cast<unsigned char>(header[i]);
  }
  return sum == octal(header.substr(148, 8));
}

bool is_csv_name(const std::string& name) {
  const auto base = name.substr(name.find_last_of('/') + 1);
  if (base.starts_with("._") || base.size() < 4) return false;
  std::string ext = base.substr(base.size() - 4);
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".csv";
}

}  // namespace

ArchiveMember extract_cec_archive(const std::vector<std::uint8_t>& bytes) {
  const std::string tar = gunzip(bytes);
  std::vector<ArchiveMember> csvs;
  std::string long_name;
  std::size_t off = 0;
  while (off + kBlock <= tar.size()) {
    const std::string_view header(tar.data() + off, kBlock);
    if (std::all_of(header.begin(), header.end(), [](char c) { return c == '\0'; })) break;
    if (!checksum_ok(header)) throw Error(Errc::NotAnArchive, "tar header checksum mismatch");

    std::string name = cstr(header.substr(0, 100));
    if (header.substr(257, 5) == "ustar") {
      const std::string prefix = cstr(header.substr(345, 155));
      if (!prefix.empty()) name = prefix + "/" + name;
    }
    const std::uint64_t size = octal(header.substr(124, 12));
    const char type = header[156];
    off += kBlock;
    if (off + size > tar.size()) throw Error(Errc::NotAnArchive, "tar member extends past end of stream");
    std::string payload = tar.substr(off, size);
    off += (size + kBlock - 1) / kBlock * kBlock;

    if (type == 'L') {
      long_name = cstr(payload);
      continue;
    }
    if (!long_name.empty()) {
      name = long_name;
      long_name.clear();
    }
    if ((type == '0' || type == '\0') && is_csv_name(name)) {
      csvs.push_back(ArchiveMember{name, std::move(payload)});
    }
  }
  if (csvs.size() != 1) {
    throw Error(Errc::ArchiveShape, fmt::format("expected exactly one CSV member, found {}", csvs.size()));
  }
  return std::move(csvs.front());
}

std::string canonical_cec_column(std::string_view header) {
  std::string name = csv::trim(header);
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
  std::replace(name.begin(), name.end(), ' ', '_');
  static const std::map<std::string, std::string, std::less<>> kAliases = {
      {"fwd_pwr_kw", "forward_power_kw"},  {"fwd_power_kw", "forward_power_kw"},
      {"forward_pwr_kw", "forward_power_kw"}, {"forward_power", "forward_power_kw"},
      {"rev_pwr_kw", "reflected_power_kw"}, {"refl_pwr_kw", "reflected_power_kw"},
      {"body_curr", "body_current"},       {"body_i", "body_current"},
      {"body_current_ma", "body_current"}, {"beam_v_kv", "beam_voltage_kv"},
      {"datetime", "timestamp"},           {"time", "timestamp"},
      {"ts", "timestamp"},                 {"station", "dss"},
      {"equipment_class", "equipment"},    {"equip", "equipment"},
  };
  if (auto it = kAliases.find(name); it != kAliases.end()) return it->second;
  return name;
}

const std::vector<std::string>& cec_reference_columns() {
  static const std::vector<std::string> kColumns = {"timestamp",          "dss",          "equipment",
                                                    "forward_power_kw",   "reflected_power_kw",
                                                    "body_current",       "beam_voltage_kv"};
  return kColumns;
}

ParsedTransmitter parse_cec_csv(std::string_view text, const CecSelection& selection) {
  const auto lines = csv::split_records(text);
  std::size_t li = 0;
  while (li < lines.size() && csv::trim(lines[li]).empty()) ++li;
  if (li == lines.size()) throw Error(Errc::HeaderMissing, "CEC csv is blank");

  ParsedTransmitter out;
  auto& report = out.report;
  for (const auto& h : csv::split_line(lines[li])) report.columns_seen.push_back(canonical_cec_column(h));
  const auto& cols = report.columns_seen;
  const auto& ref = cec_reference_columns();
  for (const auto& c : cols) {
    if (std::find(ref.begin(), ref.end(), c) == ref.end()) report.columns_extra.push_back(c);
  }
  for (const auto& c : ref) {
    if (std::find(cols.begin(), cols.end(), c) == cols.end()) report.columns_missing.push_back(c);
  }

  auto locate = [&](const std::string& name) -> std::ptrdiff_t {
    auto it = std::find(cols.begin(), cols.end(), name);
    return it == cols.end() ? -1 : it - cols.begin();
  };
  const auto t_col = locate("timestamp");
  if (t_col < 0) throw Error(Errc::MissingFeature, "CEC csv has no timestamp column");
  const auto dss_col = locate("dss");
  if (dss_col < 0 && !selection.dss) throw Error(Errc::MissingFeature, "CEC csv has no dss column");
  const auto equip_col = locate("equipment");
  std::vector<std::size_t> feature_cols;
  for (const auto& f : selection.features) {
    const auto c = locate(f);
    if (c < 0) throw Error(Errc::MissingFeature, fmt::format("selected feature '{}' has no column", f));
    feature_cols.push_back(static_cast<std::size_t>(c));
  }

  for (++li; li < lines.size(); ++li) {
    const std::string line = csv::trim(lines[li]);
    if (line.empty()) continue;
    const std::size_t line_no = li + 1;
    auto reject = [&](std::string reason) {
      ++report.rows_rejected;
      report.rejected.push_back(RejectedLine{line_no, std::move(reason)});
    };
    const auto fields = csv::split_line(line);
    if (fields.size() != cols.size()) {
      reject(fmt::format("expected {} fields, got {}", cols.size(), fields.size()));
      continue;
    }
    if (selection.equipment && equip_col >= 0 &&
        csv::trim(fields[static_cast<std::size_t>(equip_col)]) != *selection.equipment) {
      // Other equipment classes are filtered, not rejected.
      ++report.rows_parsed;
      continue;
    }
    const auto ts = parse_iso8601(fields[static_cast<std::size_t>(t_col)]);
    std::optional<double> dss;
    if (dss_col >= 0) {
      dss = csv::parse_double(fields[static_cast<std::size_t>(dss_col)]);
    } else {
      dss = static_cast<double>(*selection.dss);
    }
    if (!ts || !dss || !std::isfinite(*dss)) {
      reject("bad timestamp or dss");
      continue;
    }
    TransmitterRecord rec;
    rec.timestamp = *ts;
    rec.dss = static_cast<int>(*dss);
    bool ok = true;
    for (std::size_t k = 0; k < feature_cols.size() && ok; ++k) {
      const std::string cell = csv::trim(fields[feature_cols[k]]);
      if (cell.empty() || cell == "NaN" || cell == "nan") {
        rec.values.emplace_back(selection.features[k], kMissing);
      } else if (auto v = csv::parse_double(cell)) {
        rec.values.emplace_back(selection.features[k], *v);
      } else {
        reject(fmt::format("non-numeric {} '{}'", selection.features[k], cell));
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

}  // namespace tw::ingest
