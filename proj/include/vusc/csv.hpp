#pragma once

// Minimal CSV plumbing shared by the loaders and the CLI writers. Comma
// separated, '.' decimal point, '#' comment lines, optional header line.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace vusc::csv {

struct Row {
  std::size_t line = 0;  // 1-based line number in the source file
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;  // empty when the file has no text header
  std::vector<Row> rows;
};

/// Splits one line on commas and trims surrounding whitespace of each field.
std::vector<std::string> split(std::string_view line);

/// Reads all non-comment rows. The first row is treated as a header when any
/// of its fields is not a number.
Table read(const std::string& path);

struct NumericRow {
  std::size_t line = 0;
  std::vector<double> values;
};

struct NumericTable {
  std::vector<std::string> header;
  std::vector<NumericRow> rows;
};

/// Like read() but converts every field; rows need at least `min_columns`
/// fields. ParseError names file and line on failure.
NumericTable read_numeric(const std::string& path, std::size_t min_columns);

/// Parses a double from the whole field; ParseError on trailing garbage.
double parse_double(std::string_view field, const std::string& where);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

/// Writes "# " prefixed comment lines (one per entry, newlines split).
void write_comments(std::ostream& os, const std::vector<std::string>& comments);

}  // namespace vusc::csv
