#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "tw/track/track.hpp"

namespace tw {

/// Canonical frame serialization.
///
///     timestamp_us,dss,scid,<feature...>
///
/// One row per frame row, frames in the given order. Missing values are
/// empty fields; other values use the shortest text that round-trips the
/// double exactly. When several frames are written the header carries the
/// union of their columns in first-seen order.
std::string write_canonical_csv(std::span<const TrackFrame> frames);
std::string write_canonical_csv(const TrackFrame& frame);
std::string write_canonical_csv(const FrameMap& frames);

/// Inverse of write_canonical_csv. Row sequence numbers are the data-line
/// indices. Throws Error(BadFormat) on a bad header or field.
FrameMap read_canonical_csv(std::string_view text, Provenance provenance = Provenance::Synthetic);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace tw
