#include "pfest/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace pfest {

std::size_t CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::out_of_range("no CSV column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header.begin());
}

std::string quote_field(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

namespace {

void append_record(std::string& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += quote_field(fields[i]);
  }
  out += '\n';
}

// Splits one record starting at pos; advances pos past the terminator.
std::vector<std::string> read_record(std::string_view text, std::size_t& pos) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  while (pos < text.size()) {
    const char c = text[pos++];
    if (quoted) {
      if (c == '"') {
        if (pos < text.size() && text[pos] == '"') {
          field += '"';
          ++pos;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      if (!field.empty() || was_quoted) throw std::invalid_argument("CSV: stray quote inside a field");
      quoted = was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && pos < text.size() && text[pos] == '\n') ++pos;
      fields.push_back(std::move(field));
      return fields;
    } else {
      if (was_quoted) throw std::invalid_argument("CSV: text after a closing quote");
      field += c;
    }
  }
  if (quoted) throw std::invalid_argument("CSV: unterminated quoted field");
  fields.push_back(std::move(field));
  return fields;
}

}  // namespace

std::string format_csv(const CsvTable& table) {
  std::string out;
  for (const auto& [key, value] : table.metadata) {
    if (key.find_first_of("=\r\n") != std::string::npos || value.find_first_of("\r\n") != std::string::npos)
      throw std::invalid_argument("CSV metadata must be single-line key=value pairs");
    out += "# " + key + "=" + value + "\n";
  }
  append_record(out, table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size())
      throw std::invalid_argument("CSV row has " + std::to_string(row.size()) + " fields, header has " +
                                  std::to_string(table.header.size()));
    append_record(out, row);
  }
  return out;
}

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  std::size_t pos = 0;
  while (pos < text.size() && text[pos] == '#') {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? eol : eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    line.remove_prefix(1);
    if (!line.empty() && line.front() == ' ') line.remove_prefix(1);
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("CSV metadata line without '='");
    table.metadata.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  if (pos >= text.size()) throw std::invalid_argument("CSV: missing header");
  table.header = read_record(text, pos);
  while (pos < text.size()) {
    auto row = read_record(text, pos);
    if (row.size() != table.header.size())
      throw std::invalid_argument("CSV: record with " + std::to_string(row.size()) +
                                  " fields under a header of " + std::to_string(table.header.size()));
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_csv_file(const CsvTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << format_csv(table);
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str());
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

double parse_double(std::string_view text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  return x;
}

}  // namespace pfest
