#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mitoforge::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column, or npos.
  std::size_t column(std::string_view name) const noexcept;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

// RFC 4180 subset: comma separated, optional double quotes with "" escapes,
// LF or CRLF line endings. Blank lines are skipped. Every row must have as
// many fields as the header.
Table parse(std::string_view text, const std::string& source_name = "<csv>");
Table read(const std::filesystem::path& path);

std::string escape(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);
double parse_double(std::string_view text, const std::string& what);
long long parse_int(std::string_view text, const std::string& what);

}  // namespace mitoforge::csv
