#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tw/util/time.hpp"

namespace tw::ingest {

struct Attachment {
  std::string name;
  std::vector<std::uint8_t> bytes;
};

/// One message file from the mailbox directory.
///
/// File layout (`*.msg`): header lines `Key: value` up to the first blank
/// line, then the body. Recognized headers are `Subject:`, `Date:` (ISO-8601),
/// `To:` (comma separated) and `Attachment:` (repeatable, names a sibling
/// file in the same directory).
struct RawMessage {
  std::string file;
  std::string subject;
  Micros received = 0;
  std::vector<std::string> to;
  std::string body;
  std::vector<Attachment> attachments;
};

struct MailboxFilter {
  std::optional<Micros> from;  ///< inclusive
  std::optional<Micros> until;  ///< inclusive
  std::optional<std::string> recipient;  ///< exact address match on any To entry
  std::optional<std::string> subject_contains;
};

struct MailboxScan {
  std::vector<RawMessage> messages;  ///< sorted by received, then file name
  std::vector<std::string> skipped;  ///< "<file>: <reason>" for malformed files
};

/// Throws Error(MalformedMessage) when headers are unusable.
RawMessage parse_message(const std::string& text, const std::filesystem::path& file);

/// Reads every `*.msg` file in `dir` that passes all set filter fields.
/// Malformed files are skipped and logged. Throws Error(IoError) when the
/// directory cannot be read.
MailboxScan scan_mailbox(const std::filesystem::path& dir, const MailboxFilter& filter = {});

enum class Band { S, X, I };
enum class BandNumber { Sx20, T20k };

struct BandKey {
  Band band = Band::S;
  BandNumber number = BandNumber::Sx20;

  friend auto operator<=>(const BandKey&, const BandKey&) = default;
};

std::string to_string(Band b);
std::string to_string(BandNumber n);
/// "X-sx20"
std::string to_string(BandKey k);

struct JplSource {
  BandKey band;
  int dss = 0;
  int part = 1;
  int total_parts = 1;

  friend bool operator==(const JplSource&, const JplSource&) = default;
};

struct CecSource {
  std::optional<int> dss;

  friend bool operator==(const CecSource&, const CecSource&) = default;
};

struct UnknownSource {
  friend bool operator==(const UnknownSource&, const UnknownSource&) = default;
};

using SourceKind = std::variant<JplSource, CecSource, UnknownSource>;

/// JPL when the subject reads `DSS-<n> <band>-<bandnum> ... part <i> of <k>`
/// (band S/X/I, band number sx20/t20k, 1 <= i <= k); otherwise CEC when a
/// `.tar.gz` attachment is present; otherwise Unknown.
SourceKind classify_message(const RawMessage& msg);

/// Concatenates the bodies of one multi-part JPL message in part order.
/// Throws Error(PartMissing, i), Error(DuplicatePart, i), or
/// Error(MalformedMessage) when the parts do not share band, station and
/// part count.
std::string merge_parts(const std::vector<RawMessage>& parts);

}  // namespace tw::ingest
