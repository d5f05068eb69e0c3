#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tw/track/track.hpp"

namespace tw {

struct AntennaCsvOptions {
  /// Fractional serial-day time column (see kSerialDayOfUnixEpoch).
  std::string time_column = "t";
  std::string dss_column = "DSS";
  std::string scid_column = "SCID";
};

struct AntennaCsvResult {
  std::vector<Record> records;
  std::size_t rows_rejected = 0;
  /// Non-numeric cells that were read as missing.
  std::size_t cells_unparsed = 0;
};

/// Reads a merged antenna monitor export (one row per observation, key
/// columns DSS/SCID, spreadsheet serial-day time). "NaN" and empty cells
/// are missing; an unnamed leading column is named "Unnamed: <i>". Every
/// other column is carried into the records verbatim. Rows without a time
/// or key are rejected.
AntennaCsvResult read_antenna_csv(std::string_view text, const AntennaCsvOptions& options = {});

}  // namespace tw
