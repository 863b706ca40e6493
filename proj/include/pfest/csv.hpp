#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pfest {

/// A CSV document: optional "# key=value" metadata lines, a header and
/// records. Fields are quoted only when they contain a comma, quote, CR or LF.
struct CsvTable {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws std::out_of_range when missing.
  std::size_t column(std::string_view name) const;
  bool operator==(const CsvTable&) const = default;
};

std::string quote_field(std::string_view field);
std::string format_csv(const CsvTable& table);
CsvTable parse_csv(std::string_view text);

void write_csv_file(const CsvTable& table, const std::string& path);
CsvTable read_csv_file(const std::string& path);

/// Shortest text that reads back to the same double; "nan", "inf", "-inf" for
/// non-finite values.
std::string format_double(double x);
double parse_double(std::string_view text);

}  // namespace pfest
