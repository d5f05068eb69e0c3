#include "tw/error.hpp"

namespace tw {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::EmptyColumn: return "EmptyColumn";
    case Errc::UnknownColumn: return "UnknownColumn";
    case Errc::MissingValue: return "MissingValue";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::TooFewWindows: return "TooFewWindows";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::OddWidth: return "OddWidth";
    case Errc::EmptyBatch: return "EmptyBatch";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::EmptySeries: return "EmptySeries";
    case Errc::TimestampOutOfRange: return "TimestampOutOfRange";
    case Errc::MissingField: return "MissingField";
    case Errc::IoError: return "IoError";
    case Errc::MalformedMessage: return "MalformedMessage";
    case Errc::PartMissing: return "PartMissing";
    case Errc::DuplicatePart: return "DuplicatePart";
    case Errc::HeaderMissing: return "HeaderMissing";
    case Errc::NotAnArchive: return "NotAnArchive";
    case Errc::ArchiveShape: return "ArchiveShape";
    case Errc::MissingFeature: return "MissingFeature";
    case Errc::BadConfig: return "BadConfig";
    case Errc::BadDataset: return "BadDataset";
    case Errc::UnknownRun: return "UnknownRun";
    case Errc::UnknownEvent: return "UnknownEvent";
    case Errc::AlreadyResolved: return "AlreadyResolved";
    case Errc::CorruptLog: return "CorruptLog";
    case Errc::BadFormat: return "BadFormat";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message, std::int64_t detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      detail_(detail) {}

}  // namespace tw
