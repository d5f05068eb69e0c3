#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tw/ingest/mailbox.hpp"
#include "tw/track/track.hpp"

namespace tw::ingest {

struct TransmitterRecord {
  Micros timestamp = 0;
  int dss = 0;
  /// Header order of the source file.
  std::vector<std::pair<std::string, double>> values;
};

struct RejectedLine {
  std::size_t line = 0;  ///< 1-based line number in the parsed text
  std::string reason;
};

struct SchemaReport {
  std::vector<std::string> columns_seen;
  std::vector<std::string> columns_extra;    ///< seen but not in the reference schema
  std::vector<std::string> columns_missing;  ///< in the reference schema but not seen
  std::size_t rows_parsed = 0;
  std::size_t rows_rejected = 0;
  std::vector<RejectedLine> rejected;
  /// Header present but no data lines.
  bool empty_body = false;
};

struct ParsedTransmitter {
  std::vector<TransmitterRecord> records;
  SchemaReport report;
};

/// Reference parameter list of a JPL band pair's comma-separated body.
std::vector<std::string> jpl_reference_columns(BandKey band);

/// Parses a merged JPL body. The first non-blank line is the header and must
/// name a `datetime` and a `dss` column; every following non-blank line is
/// one record. Lines with the wrong field count or a non-numeric field are
/// rejected and counted; empty and NaN fields are missing values. Throws
/// Error(HeaderMissing).
ParsedTransmitter parse_jpl_body(std::string_view text, BandKey band);

struct ArchiveMember {
  std::string name;
  std::string text;
};

/// Inflates a gzip-compressed tar stream and returns its single `.csv`
/// member. Throws Error(NotAnArchive) or Error(ArchiveShape) when there are
/// zero or several CSV members.
ArchiveMember extract_cec_archive(const std::vector<std::uint8_t>& bytes);

struct CecSelection {
  /// Canonical feature names kept in the records.
  std::vector<std::string> features{"forward_power_kw", "body_current"};
  /// Keep only rows of this equipment class when an equipment column exists.
  std::optional<std::string> equipment;
  /// Station used when the file has no dss column.
  std::optional<int> dss;
};

/// Canonical name for a CEC column header (lower-cased, vendor aliases such
/// as `fwd_pwr_kw` folded onto `forward_power_kw`).
std::string canonical_cec_column(std::string_view header);

/// Columns every CEC export carries (34 m stations); 70 m exports add more.
const std::vector<std::string>& cec_reference_columns();

/// Parses one CEC CSV export. Timestamps come from an ISO-8601 column.
/// Throws Error(HeaderMissing) or Error(MissingFeature) when a selected
/// feature (or the station) has no column.
ParsedTransmitter parse_cec_csv(std::string_view text, const CecSelection& selection = {});

/// Records keyed (dss, 0) for the canonical frame model.
std::vector<Record> to_records(const std::vector<TransmitterRecord>& records, std::uint64_t first_seq = 0);

}  // namespace tw::ingest
