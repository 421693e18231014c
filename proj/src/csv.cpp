#include "vusc/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "vusc/errors.hpp"

namespace vusc::csv {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

bool is_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return false;
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  return ec == std::errc() && ptr == end;
}

}  // namespace

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    const auto piece = line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos);
    out.emplace_back(trim(piece));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

Table read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open file");
  Table table;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto fields = split(t);
    if (first) {
      first = false;
      bool header = false;
      for (const auto& f : fields) header = header || !is_number(f);
      if (header) {
        table.header = std::move(fields);
        continue;
      }
    }
    table.rows.push_back(Row{lineno, std::move(fields)});
  }
  return table;
}

double parse_double(std::string_view field, const std::string& where) {
  const auto s = trim(field);
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ParseError(where, fmt::format("'{}' is not a finite number", s));
  }
  return v;
}

NumericTable read_numeric(const std::string& path, std::size_t min_columns) {
  auto raw = read(path);
  NumericTable out;
  out.header = std::move(raw.header);
  out.rows.reserve(raw.rows.size());
  for (const auto& row : raw.rows) {
    const auto where = fmt::format("{}:{}", path, row.line);
    if (row.fields.size() < min_columns) {
      throw ParseError(where, fmt::format("expected at least {} columns, found {}", min_columns,
                                          row.fields.size()));
    }
    NumericRow nr{row.line, {}};
    nr.values.reserve(row.fields.size());
    for (const auto& f : row.fields) nr.values.push_back(parse_double(f, where));
    out.rows.push_back(std::move(nr));
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return fmt::format("{}", v);
  return std::string(buf, ptr);
}

void write_comments(std::ostream& os, const std::vector<std::string>& comments) {
  for (const auto& c : comments) {
    std::istringstream lines(c);
    std::string l;
    while (std::getline(lines, l)) os << "# " << l << '\n';
  }
}

}  // namespace vusc::csv
