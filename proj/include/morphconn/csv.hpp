#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace morphconn::csv {

/// Splits one CSV line on commas. Double-quoted fields may contain commas and
/// doubled quotes; surrounding quotes are removed.
std::vector<std::string> split_line(std::string_view line);

/// Splits on runs of spaces/tabs, dropping empty tokens.
std::vector<std::string> split_whitespace(std::string_view line);

/// Reads a whole file. Throws ValidationError("FileNotFound") if it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Writes `content` atomically enough for our purposes (truncate + write).
void write_file(const std::filesystem::path& path, std::string_view content);

/// Splits text into lines, accepting LF or CRLF, dropping a trailing empty line.
std::vector<std::string> lines(std::string_view text);

std::string_view trim(std::string_view s);

/// Strict double parse: the whole (trimmed) field must be consumed.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

/// Fixed 17-significant-digit representation.
std::string format_double17(double v);

/// Quotes a field if it contains a comma, quote or newline.
std::string escape(std::string_view field);

}  // namespace morphconn::csv
