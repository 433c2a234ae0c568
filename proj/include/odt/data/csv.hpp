/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The odtree Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ODT_DATA_CSV_HPP
#define ODT_DATA_CSV_HPP

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "odt/error.hpp"

namespace odt::data {

enum class ColumnRole { feature, label, protected_attribute, legitimate, treatment, outcome, weight, ignore };

inline std::string_view to_string(ColumnRole role)
{
  switch (role) {
    case ColumnRole::feature: return "feature";
    case ColumnRole::label: return "label";
    case ColumnRole::protected_attribute: return "protected";
    case ColumnRole::legitimate: return "legitimate";
    case ColumnRole::treatment: return "treatment";
    case ColumnRole::outcome: return "outcome";
    case ColumnRole::weight: return "weight";
    case ColumnRole::ignore: return "ignore";
  }
  return "feature";
}

inline ColumnRole parse_role(std::string_view name)
{
  for (auto r : {ColumnRole::feature, ColumnRole::label, ColumnRole::protected_attribute, ColumnRole::legitimate,
                 ColumnRole::treatment, ColumnRole::outcome, ColumnRole::weight, ColumnRole::ignore}) {
    if (to_string(r) == name) return r;
  }
  throw SchemaError("unknown column role '" + std::string(name) + "'");
}

struct RoleDeclaration {
  std::string column;
  ColumnRole role = ColumnRole::feature;
};

/// Rectangular table of text cells with one role per column. Columns without
/// a declaration are features.
struct RawTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<ColumnRole> roles;

  [[nodiscard]] std::size_t num_rows() const { return rows.size(); }

  [[nodiscard]] std::optional<std::size_t> find(std::string_view name) const
  {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (columns[c] == name) return c;
    }
    return std::nullopt;
  }

  [[nodiscard]] std::vector<std::size_t> with_role(ColumnRole role) const
  {
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < roles.size(); ++c) {
      if (roles[c] == role) out.push_back(c);
    }
    return out;
  }

  [[nodiscard]] std::vector<std::string> column(std::size_t c) const
  {
    std::vector<std::string> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
  }
};

namespace csv_detail {

inline std::string trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_line(const std::string& line, std::size_t line_no)
{
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      cells.push_back(was_quoted ? cell : trim(cell));
      cell.clear();
      was_quoted = false;
    } else {
      cell.push_back(c);
    }
  }
  if (quoted) throw ParseError("line " + std::to_string(line_no) + ": unterminated quote");
  cells.push_back(was_quoted ? cell : trim(cell));
  return cells;
}

}  // namespace csv_detail

inline std::optional<double> parse_number(std::string_view text)
{
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

/// Reads comma-separated text with a header row. Data rows are numbered from 1.
inline RawTable load_csv(std::istream& in, const std::vector<RoleDeclaration>& declarations = {})
{
  RawTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv_detail::trim(line).empty()) continue;
    auto cells = csv_detail::split_line(line, line_no);
    if (!have_header) {
      table.columns = std::move(cells);
      for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (table.columns[c].empty()) throw ParseError("header: column " + std::to_string(c + 1) + " has no name");
        for (std::size_t d = 0; d < c; ++d) {
          if (table.columns[d] == table.columns[c]) throw ParseError("header: duplicate column '" + table.columns[c] + "'");
        }
      }
      have_header = true;
      continue;
    }
    const std::size_t row_no = table.rows.size() + 1;
    if (cells.size() != table.columns.size()) {
      throw ParseError("row " + std::to_string(row_no) + " (line " + std::to_string(line_no) + ") has " +
                       std::to_string(cells.size()) + " cells, expected " + std::to_string(table.columns.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (cells[c].empty()) {
        throw ParseError("row " + std::to_string(row_no) + ": missing value in column '" + table.columns[c] + "'");
      }
    }
    table.rows.push_back(std::move(cells));
  }
  if (!have_header) throw ParseError("empty input: no header row");

  table.roles.assign(table.columns.size(), ColumnRole::feature);
  for (const auto& decl : declarations) {
    const auto c = table.find(decl.column);
    if (!c) throw SchemaError("declared column '" + decl.column + "' is not in the header");
    table.roles[*c] = decl.role;
  }
  return table;
}

inline RawTable load_csv_text(const std::string& text, const std::vector<RoleDeclaration>& declarations = {})
{
  std::istringstream in(text);
  return load_csv(in, declarations);
}

inline RawTable load_csv_file(const std::filesystem::path& path, const std::vector<RoleDeclaration>& declarations = {})
{
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return load_csv(in, declarations);
}

/// Reads a purely numeric CSV (header row optional when `has_header` is false).
inline std::vector<std::vector<double>> load_numeric_csv(std::istream& in, bool has_header = true)
{
  std::vector<std::vector<double>> out;
  std::string line;
  std::size_t line_no = 0;
  bool skip = has_header;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv_detail::trim(line).empty()) continue;
    if (skip) {
      skip = false;
      continue;
    }
    const auto cells = csv_detail::split_line(line, line_no);
    std::vector<double> row;
    for (const auto& cell : cells) {
      const auto v = parse_number(cell);
      if (!v) throw ParseError("line " + std::to_string(line_no) + ": '" + cell + "' is not a number");
      row.push_back(*v);
    }
    if (out.empty()) width = row.size();
    if (row.size() != width) {
      throw ParseError("line " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                       " cells, expected " + std::to_string(width));
    }
    out.push_back(std::move(row));
  }
  return out;
}

inline std::vector<std::vector<double>> load_numeric_csv_file(const std::filesystem::path& path, bool has_header = true)
{
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return load_numeric_csv(in, has_header);
}

}  // namespace odt::data

#endif  // ODT_DATA_CSV_HPP
