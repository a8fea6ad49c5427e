#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace xtsc::text {

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);

/// Strict parse; throws FormatError naming `context` on failure. Accepts nan/inf
/// spellings so that callers can report non-finite cells precisely.
double parse_double(std::string_view token, const std::string& context);

std::vector<std::string> split(std::string_view line, char sep);
std::string trim(std::string_view s);
std::string lower(std::string_view s);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace xtsc::text
