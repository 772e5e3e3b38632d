#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace herdlab::csv {

/// Splits one CSV line on commas. No quoting: panel files never embed commas.
std::vector<std::string_view> split(std::string_view line);

/// Reads a whole text file into lines, tolerating trailing newline and CRLF.
std::vector<std::string> read_lines(const std::filesystem::path& file);

/// Parses a double, full-string match required.
bool parse_double(std::string_view field, double& out);

/// Formats a double with 17 significant digits (exact binary round-trip).
std::string format_full(double v);

/// Formats with 10 significant digits (params JSON precision).
std::string format_g10(double v);

/// True if the field looks like an ISO-8601 calendar date (YYYY-MM-DD).
bool is_iso_date(std::string_view field);

} // namespace herdlab::csv
