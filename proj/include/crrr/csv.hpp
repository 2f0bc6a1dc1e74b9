#pragma once

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

// Minimal CSV layer shared by the command-line tools, the fixture generator,
// and survey ingestion. Output is UTF-8 with LF line endings and shortest
// round-trip number formatting, so identical inputs produce identical bytes.

namespace crrr {

// Shortest decimal text that parses back to exactly v.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_int(long long v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string to_cell(double v) { return format_double(v); }
inline std::string to_cell(float v) { return format_double(v); }
inline std::string to_cell(int v) { return format_int(v); }
inline std::string to_cell(long v) { return format_int(v); }
inline std::string to_cell(long long v) { return format_int(v); }
inline std::string to_cell(unsigned v) { return format_int(static_cast<long long>(v)); }
inline std::string to_cell(unsigned long v) { return format_int(static_cast<long long>(v)); }
inline std::string to_cell(unsigned long long v) { return format_int(static_cast<long long>(v)); }
inline std::string to_cell(std::string s) { return s; }
inline std::string to_cell(std::string_view s) { return std::string(s); }
inline std::string to_cell(const char* s) { return std::string(s); }

}  // namespace detail

// Builds one row from mixed numeric and string values.
template <class... Ts>
std::vector<std::string> csv_cells(Ts&&... vals) {
  std::vector<std::string> row;
  row.reserve(sizeof...(Ts));
  (row.push_back(detail::to_cell(std::forward<Ts>(vals))), ...);
  return row;
}

inline bool csv_needs_quoting(std::string_view s) {
  return s.find_first_of(",\"\n\r") != std::string_view::npos;
}

inline std::string csv_escape(std::string_view s) {
  if (!csv_needs_quoting(s)) return std::string(s);
  std::string out;
  out.reserve(s.size() + 2);
  out.push_back('"');
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

// Header plus string cells. Typed interpretation happens at the call site.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t cols() const { return header.size(); }
  std::size_t n_rows() const { return rows.size(); }

  bool has_col(std::string_view name) const {
    for (const std::string& h : header)
      if (h == name) return true;
    return false;
  }

  std::size_t col(std::string_view name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return j;
    throw std::invalid_argument("csv: no column named '" + std::string(name) + "'");
  }
};

inline void write_csv(std::ostream& os, const CsvTable& table) {
  const auto write_row = [&os](const std::vector<std::string>& row) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) os.put(',');
      os << csv_escape(row[j]);
    }
    os.put('\n');
  };
  write_row(table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size())
      throw std::invalid_argument("csv: row width does not match header");
    write_row(row);
  }
}

inline void write_csv_file(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("csv: cannot open for writing: " + path.string());
  write_csv(os, table);
  os.flush();
  if (!os) throw std::runtime_error("csv: write failed: " + path.string());
}

// RFC-4180 style reader: quoted fields may contain separators, quotes are
// doubled, and both LF and CRLF line endings are accepted. A leading UTF-8
// byte-order mark is dropped.
inline CsvTable read_csv(std::istream& is) {
  std::string text(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>{});
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) text.erase(0, 3);

  std::vector<std::vector<std::string>> records;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;  // distinguishes an empty trailing line from a row
  std::size_t line = 1;

  const auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
  };
  const auto end_row = [&] {
    end_field();
    records.push_back(std::move(row));
    row.clear();
    field_started = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty())
          throw std::runtime_error("csv: stray quote in unquoted field at line " +
                                   std::to_string(line));
        quoted = true;
        field_started = true;
        break;
      case ',':
        end_field();
        field_started = true;
        break;
      case '\r':
        break;  // CRLF tolerated on input
      case '\n':
        if (field_started || !field.empty() || !row.empty()) end_row();
        ++line;
        break;
      default:
        field.push_back(c);
        field_started = true;
        break;
    }
  }
  if (quoted) throw std::runtime_error("csv: unterminated quoted field");
  if (field_started || !field.empty() || !row.empty()) end_row();

  if (records.empty()) throw std::runtime_error("csv: empty input");
  CsvTable table;
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size())
      throw std::runtime_error("csv: row " + std::to_string(r) + " has " +
                               std::to_string(records[r].size()) + " fields, header has " +
                               std::to_string(table.header.size()));
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

inline CsvTable read_csv_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("csv: cannot open: " + path.string());
  return read_csv(is);
}

// Empty cells and the usual NA spellings mark a missing value.
inline bool csv_missing(std::string_view cell) {
  return cell.empty() || cell == "NA" || cell == "na" || cell == "NaN" || cell == "nan" ||
         cell == "NULL" || cell == ".";
}

// Strict numeric parse; the whole cell must be consumed.
inline double parse_double(std::string_view cell) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last)
    throw std::runtime_error("csv: cell '" + std::string(cell) + "' is not a number");
  return v;
}

}  // namespace crrr
