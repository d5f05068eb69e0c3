#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tw::csv {

/// Splits one CSV record (RFC 4180 quoting: `"a,b"`, doubled `""`).
/// The line must not contain the record terminator.
std::vector<std::string> split_line(std::string_view line);

/// Splits text into records, honoring quoted newlines. Strips `\r\n`.
/// Blank records are kept as empty strings so callers can count lines.
std::vector<std::string> split_records(std::string_view text);

/// Quotes a field only when it contains a comma, quote or newline.
std::string quote(std::string_view field);

std::string trim(std::string_view s);

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double v);

/// Strict full-field parse; leading/trailing spaces are ignored.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

}  // namespace tw::csv
