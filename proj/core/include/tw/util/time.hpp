#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace tw {

/// Instants are integer microseconds since the Unix epoch (UTC).
using Micros = std::int64_t;

/// Serial day number of 1970-01-01 in the spreadsheet day-count used by the
/// antenna datasets' `t` column (day 45658 is 2025-01-01).
inline constexpr double kSerialDayOfUnixEpoch = 25569.0;

/// Fractional serial day -> epoch microseconds, rounded to nearest.
Micros serial_day_to_micros(double serial_day);

/// Accepts `YYYY-MM-DD[T| ]HH:MM:SS[.fraction][Z|+00:00]`. Fractions beyond
/// microseconds are truncated. Returns nullopt on anything else.
std::optional<Micros> parse_iso8601(std::string_view text);

/// `YYYY-MM-DDTHH:MM:SS.ffffffZ`
std::string format_iso8601(Micros t);

/// Calendar date `YYYY-MM-DD` of the instant (UTC).
std::string format_date(Micros t);

}  // namespace tw
