#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tw {

/// Failure categories shared by every module. Each maps to one named error
/// condition of the public operations.
enum class Errc {
  // track / preprocess
  EmptyColumn,
  UnknownColumn,
  MissingValue,
  EmptyInput,
  DegenerateInput,
  TooFewWindows,
  // nn
  ShapeMismatch,
  OddWidth,
  EmptyBatch,
  NonFiniteLoss,
  // detect
  EmptySeries,
  TimestampOutOfRange,
  // report
  MissingField,
  // ingest
  IoError,
  MalformedMessage,
  PartMissing,
  DuplicatePart,
  HeaderMissing,
  NotAnArchive,
  ArchiveShape,
  MissingFeature,
  // agent / service
  BadConfig,
  BadDataset,
  UnknownRun,
  UnknownEvent,
  AlreadyResolved,
  CorruptLog,
  // serialization
  BadFormat,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::int64_t detail = -1);

  Errc code() const noexcept { return code_; }
  /// Operation-specific index: missing/duplicate part number, corrupt log
  /// sequence number, rejected line number. -1 when not applicable.
  std::int64_t detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::int64_t detail_;
};

}  // namespace tw
