#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tw/ingest/mailbox.hpp"
#include "tw/ingest/transmitter.hpp"

namespace tw::ingest {

struct IngestOutput {
  std::filesystem::path path;
  std::size_t rows = 0;
};

struct IngestSummary {
  std::size_t messages = 0;
  std::size_t unknown_messages = 0;
  std::vector<std::string> skipped;  ///< malformed files and failed groups
  std::vector<IngestOutput> outputs;  ///< sorted by file name
  /// Per source group: "jpl X-sx20 DSS-63 2025-02-24" or "cec <file>".
  std::map<std::string, SchemaReport> reports;
};

/// Output file name for a JPL band pair, e.g. `jpl_X_sx20.csv`.
std::string jpl_output_name(BandKey band);
/// Output file name for a CEC station, e.g. `cec_dss63.csv`.
std::string cec_output_name(int dss);

/// Scans the mailbox, merges multi-part JPL messages (grouped by band pair,
/// station, part count and received date), parses JPL bodies and CEC
/// archives, and writes one canonical CSV per band pair and per CEC station
/// into `out_dir`. Band pairs are never merged into one file. Group failures
/// (missing parts, bad archives) are logged and listed in `skipped`.
IngestSummary run_ingest(const std::filesystem::path& mailbox, const std::filesystem::path& out_dir,
                         const MailboxFilter& filter = {}, const CecSelection& selection = {});

}  // namespace tw::ingest
