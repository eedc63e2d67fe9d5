#include "mitoforge/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "mitoforge/error.hpp"

namespace mitoforge::csv {

std::size_t Table::column(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return npos;
}

namespace {

std::vector<std::vector<std::string>> split_records(std::string_view text,
                                                    const std::string& source) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool field_started = false;

  auto end_field = [&] {
    fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = fields.size() == 1 && fields[0].empty();
    if (!blank) records.push_back(std::move(fields));
    fields.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field_started) {
          fail(ErrorKind::InvalidInput, source + ": stray quote inside field");
        }
        quoted = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (quoted) fail(ErrorKind::InvalidInput, source + ": unterminated quote");
  if (!field.empty() || !fields.empty()) end_record();
  return records;
}

}  // namespace

Table parse(std::string_view text, const std::string& source_name) {
  auto records = split_records(text, source_name);
  if (records.empty()) {
    fail(ErrorKind::InvalidInput, source_name + ": missing CSV header");
  }
  Table table;
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      fail(ErrorKind::InvalidInput,
           source_name + ": row " + std::to_string(r) + " has " +
               std::to_string(records[r].size()) + " fields, header has " +
               std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, const std::string& what) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
    fail(ErrorKind::InvalidInput,
         "invalid number '" + std::string(text) + "' for " + what);
  }
  return v;
}

long long parse_int(std::string_view text, const std::string& what) {
  long long v = 0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    fail(ErrorKind::InvalidInput,
         "invalid integer '" + std::string(text) + "' for " + what);
  }
  return v;
}

}  // namespace mitoforge::csv
