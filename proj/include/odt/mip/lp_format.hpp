/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The odtree Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ODT_MIP_LP_FORMAT_HPP
#define ODT_MIP_LP_FORMAT_HPP

#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "odt/error.hpp"
#include "odt/mip/model.hpp"

// CPLEX-style LP text format.
//
// The writer lists every variable in the objective (zero coefficients
// included) so that a reader assigning ids by first appearance reproduces the
// original variable order.

namespace odt::mip {

namespace lp_detail {

inline std::string format_number(double v)
{
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, end);
}

inline bool legal_name(std::string_view name)
{
  if (name.empty() || name.size() > 255) return false;
  const auto head = static_cast<unsigned char>(name.front());
  if (!(std::isalpha(head) || head == '_')) return false;
  for (const char c : name) {
    const auto u = static_cast<unsigned char>(c);
    if (!(std::isalnum(u) || c == '_' || c == '.' || c == '[' || c == ']')) return false;
  }
  // Reserved words of the format cannot be names.
  std::string lower;
  for (const char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  static const std::unordered_set<std::string> reserved = {
      "max", "maximize", "maximum", "min", "minimize", "minimum", "st", "subject", "such",
      "bounds", "bound", "binary", "binaries", "bin", "general", "generals", "gen", "end", "free", "inf", "infinity"};
  return reserved.count(lower) == 0;
}

template <typename NameOf>
std::vector<std::string> unique_names(std::size_t count, NameOf name_of, char prefix)
{
  std::vector<std::string> out(count);
  std::unordered_set<std::string> used;
  for (std::size_t i = 0; i < count; ++i) {
    std::string candidate = name_of(i);
    if (!legal_name(candidate) || used.count(candidate)) candidate = prefix + std::to_string(i);
    while (used.count(candidate)) candidate += "_";
    used.insert(candidate);
    out[i] = std::move(candidate);
  }
  return out;
}

// Writes " + 3 x - 2 y" style terms, wrapping long expressions.
inline void write_terms(std::ostream& out, const std::vector<std::pair<double, std::string>>& terms)
{
  std::size_t on_line = 0;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const auto& [coef, name] = terms[k];
    if (on_line == 8) {
      out << "\n   ";
      on_line = 0;
    }
    if (k == 0) {
      out << ' ' << format_number(coef) << ' ' << name;
    } else {
      out << (std::signbit(coef) ? " - " : " + ") << format_number(std::abs(coef)) << ' ' << name;
    }
    ++on_line;
  }
}

}  // namespace lp_detail

inline void write_lp(const Model& model, std::ostream& out)
{
  const auto& vars = model.variables();
  const auto& rows = model.constraints();
  const auto var_names = lp_detail::unique_names(vars.size(), [&](std::size_t i) { return vars[i].name; }, 'x');
  const auto row_names = lp_detail::unique_names(rows.size(), [&](std::size_t i) { return rows[i].tag; }, 'c');

  out << "\\ written by odtree\n";
  out << (model.sense() == ObjSense::maximize ? "Maximize\n" : "Minimize\n");
  out << " obj:";
  std::vector<std::pair<double, std::string>> terms;
  for (std::size_t j = 0; j < vars.size(); ++j) terms.emplace_back(model.objective()[j], var_names[j]);
  lp_detail::write_terms(out, terms);
  out << "\n";

  out << "Subject To\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    out << ' ' << row_names[r] << ':';
    terms.clear();
    for (const auto& t : row.terms) terms.emplace_back(t.coef, var_names[static_cast<std::size_t>(t.var)]);
    if (terms.empty() && !vars.empty()) terms.emplace_back(0.0, var_names[0]);
    lp_detail::write_terms(out, terms);
    switch (row.sense) {
      case RowSense::less_equal: out << " <= "; break;
      case RowSense::greater_equal: out << " >= "; break;
      case RowSense::equal: out << " = "; break;
    }
    out << lp_detail::format_number(row.rhs) << "\n";
  }

  out << "Bounds\n";
  for (std::size_t j = 0; j < vars.size(); ++j) {
    const auto& v = vars[j];
    const auto& name = var_names[j];
    const bool binary = v.kind == VarKind::binary;
    if (binary && v.lower == 0.0 && v.upper == 1.0) continue;
    if (!binary && v.lower == 0.0 && std::isinf(v.upper) && v.upper > 0) continue;
    if (std::isinf(v.lower) && v.lower < 0 && std::isinf(v.upper) && v.upper > 0) {
      out << ' ' << name << " free\n";
    } else if (v.lower == v.upper) {
      out << ' ' << name << " = " << lp_detail::format_number(v.lower) << "\n";
    } else if (std::isinf(v.upper)) {
      out << ' ' << name << " >= " << lp_detail::format_number(v.lower) << "\n";
    } else {
      out << ' ' << lp_detail::format_number(v.lower) << " <= " << name << " <= "
          << lp_detail::format_number(v.upper) << "\n";
    }
  }

  bool any_binary = false;
  for (const auto& v : vars) any_binary = any_binary || v.kind == VarKind::binary;
  if (any_binary) {
    out << "Binaries\n";
    std::size_t on_line = 0;
    for (std::size_t j = 0; j < vars.size(); ++j) {
      if (vars[j].kind != VarKind::binary) continue;
      out << ' ' << var_names[j];
      if (++on_line == 10) {
        out << "\n";
        on_line = 0;
      }
    }
    if (on_line != 0) out << "\n";
  }
  out << "End\n";
}

inline std::string to_lp_string(const Model& model)
{
  std::ostringstream out;
  write_lp(model, out);
  return out.str();
}

inline void write_lp_file(const Model& model, const std::filesystem::path& destination)
{
  std::ofstream out(destination);
  if (!out) throw IoError("cannot open '" + destination.string() + "' for writing");
  write_lp(model, out);
  out.flush();
  if (!out) throw IoError("failed writing '" + destination.string() + "'");
}

namespace lp_detail {

struct Token {
  enum Kind { number, name, plus, minus, colon, less, greater, equal, end } kind = end;
  std::string text;
  double value = 0.0;
};

class Reader {
 public:
  explicit Reader(std::istream& in)
  {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto cut = line.find('\\'); cut != std::string::npos) line.erase(cut);
      lines_.emplace_back(line_no, line);
    }
  }

  Model read()
  {
    enum class Section { none, objective, constraints, bounds, binaries, done } section = Section::none;
    std::vector<Token> objective_tokens;
    std::vector<Token> constraint_tokens;
    std::vector<std::pair<std::size_t, std::vector<Token>>> bound_lines;
    std::vector<Token> binary_tokens;

    for (const auto& [line_no, text] : lines_) {
      const std::string trimmed = trim(text);
      if (trimmed.empty()) continue;
      const std::string key = lower(trimmed);
      if (key == "maximize" || key == "maximum" || key == "max") {
        model_.set_sense(ObjSense::maximize);
        section = Section::objective;
        continue;
      }
      if (key == "minimize" || key == "minimum" || key == "min") {
        model_.set_sense(ObjSense::minimize);
        section = Section::objective;
        continue;
      }
      if (key == "subject to" || key == "such that" || key == "st" || key == "s.t.") {
        section = Section::constraints;
        continue;
      }
      if (key == "bounds" || key == "bound") {
        section = Section::bounds;
        continue;
      }
      if (key == "binaries" || key == "binary" || key == "bin") {
        section = Section::binaries;
        continue;
      }
      if (key == "generals" || key == "general" || key == "gen") {
        throw ParseError("line " + std::to_string(line_no) + ": general integer variables are not supported");
      }
      if (key == "end") {
        section = Section::done;
        continue;
      }
      auto tokens = tokenize(trimmed, line_no);
      switch (section) {
        case Section::objective: append(objective_tokens, tokens); break;
        case Section::constraints: append(constraint_tokens, tokens); break;
        case Section::bounds: bound_lines.emplace_back(line_no, std::move(tokens)); break;
        case Section::binaries: append(binary_tokens, tokens); break;
        case Section::none:
        case Section::done:
          throw ParseError("line " + std::to_string(line_no) + ": text outside of any section");
      }
    }

    parse_objective(objective_tokens);
    parse_constraints(constraint_tokens);
    for (const auto& t : binary_tokens) {
      if (t.kind != Token::name) throw ParseError("unexpected token '" + t.text + "' in Binaries section");
      const VarId id = variable(t.text);
      binaries_.insert(id);
    }
    // Bounds after the binary marks so explicit bounds win over the [0,1] default.
    for (const VarId id : binaries_) bounds_[static_cast<std::size_t>(id)] = {0.0, 1.0};
    for (const auto& [line_no, tokens] : bound_lines) parse_bound(tokens, line_no);

    Model out;
    out.set_sense(model_.sense());
    for (std::size_t j = 0; j < names_.size(); ++j) {
      Variable v;
      v.name = names_[j];
      v.lower = bounds_[j].first;
      v.upper = bounds_[j].second;
      v.kind = binaries_.count(static_cast<VarId>(j)) ? VarKind::binary : VarKind::continuous;
      out.push_variable(std::move(v));
      out.set_objective_coef(static_cast<VarId>(j), objective_[j]);
    }
    for (auto& row : rows_) out.add_constraint(std::move(row.terms), row.sense, row.rhs, std::move(row.tag));
    return out;
  }

 private:
  static std::string trim(const std::string& s)
  {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static std::string lower(std::string s)
  {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  }

  static void append(std::vector<Token>& into, std::vector<Token>& tokens)
  {
    into.insert(into.end(), tokens.begin(), tokens.end());
  }

  static std::vector<Token> tokenize(const std::string& text, std::size_t line_no)
  {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
      const char c = text[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
        continue;
      }
      Token t;
      if (c == '+') { t.kind = Token::plus; ++i; }
      else if (c == '-') { t.kind = Token::minus; ++i; }
      else if (c == ':') { t.kind = Token::colon; ++i; }
      else if (c == '<') { t.kind = Token::less; i += (i + 1 < text.size() && text[i + 1] == '=') ? 2 : 1; }
      else if (c == '>') { t.kind = Token::greater; i += (i + 1 < text.size() && text[i + 1] == '=') ? 2 : 1; }
      else if (c == '=') {
        ++i;
        if (i < text.size() && (text[i] == '<' || text[i] == '>')) {
          t.kind = text[i] == '<' ? Token::less : Token::greater;
          ++i;
        } else {
          t.kind = Token::equal;
        }
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        std::size_t j = i;
        while (j < text.size() && (std::isdigit(static_cast<unsigned char>(text[j])) || text[j] == '.' ||
                                   text[j] == 'e' || text[j] == 'E' ||
                                   ((text[j] == '+' || text[j] == '-') && j > i && (text[j - 1] == 'e' || text[j - 1] == 'E')))) {
          ++j;
        }
        t.kind = Token::number;
        t.text = text.substr(i, j - i);
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.value);
        if (ec != std::errc() || ptr != t.text.data() + t.text.size()) {
          throw ParseError("line " + std::to_string(line_no) + ": bad number '" + t.text + "'");
        }
        i = j;
      } else {
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) &&
               std::string_view("+-:<>=").find(text[j]) == std::string_view::npos) {
          ++j;
        }
        t.kind = Token::name;
        t.text = text.substr(i, j - i);
        const auto key = lower(t.text);
        if (key == "inf" || key == "infinity") {
          t.kind = Token::number;
          t.value = kInf;
        }
        i = j;
      }
      out.push_back(std::move(t));
    }
    return out;
  }

  VarId variable(const std::string& name)
  {
    if (auto it = index_.find(name); it != index_.end()) return it->second;
    const auto id = static_cast<VarId>(names_.size());
    index_.emplace(name, id);
    names_.push_back(name);
    objective_.push_back(0.0);
    bounds_.emplace_back(0.0, kInf);
    return id;
  }

  // Parses [+|-] [number] name ... starting at `pos`, stopping at a sense token
  // or at a "name :" label.
  std::vector<Term> parse_expression(const std::vector<Token>& tokens, std::size_t& pos)
  {
    std::vector<Term> terms;
    std::unordered_map<VarId, std::size_t> where;
    while (pos < tokens.size()) {
      const auto kind = tokens[pos].kind;
      if (kind == Token::less || kind == Token::greater || kind == Token::equal) break;
      if (kind == Token::name && pos + 1 < tokens.size() && tokens[pos + 1].kind == Token::colon) break;
      double sign = 1.0;
      while (pos < tokens.size() && (tokens[pos].kind == Token::plus || tokens[pos].kind == Token::minus)) {
        if (tokens[pos].kind == Token::minus) sign = -sign;
        ++pos;
      }
      double coef = 1.0;
      if (pos < tokens.size() && tokens[pos].kind == Token::number) {
        coef = tokens[pos].value;
        ++pos;
      }
      if (pos >= tokens.size() || tokens[pos].kind != Token::name) throw ParseError("expected a variable name in expression");
      const VarId id = variable(tokens[pos].text);
      ++pos;
      if (auto it = where.find(id); it != where.end()) {
        terms[it->second].coef += sign * coef;
      } else {
        where.emplace(id, terms.size());
        terms.push_back({id, sign * coef});
      }
    }
    return terms;
  }

  void parse_objective(const std::vector<Token>& tokens)
  {
    std::size_t pos = 0;
    if (tokens.size() >= 2 && tokens[0].kind == Token::name && tokens[1].kind == Token::colon) pos = 2;
    for (const auto& t : parse_expression(tokens, pos)) objective_[static_cast<std::size_t>(t.var)] += t.coef;
    if (pos != tokens.size()) throw ParseError("trailing tokens in objective");
  }

  void parse_constraints(const std::vector<Token>& tokens)
  {
    std::size_t pos = 0;
    while (pos < tokens.size()) {
      Row row;
      if (tokens[pos].kind == Token::name && pos + 1 < tokens.size() && tokens[pos + 1].kind == Token::colon) {
        row.tag = tokens[pos].text;
        pos += 2;
      }
      row.terms = parse_expression(tokens, pos);
      if (pos >= tokens.size()) throw ParseError("constraint '" + row.tag + "' lacks a sense");
      switch (tokens[pos].kind) {
        case Token::less: row.sense = RowSense::less_equal; break;
        case Token::greater: row.sense = RowSense::greater_equal; break;
        case Token::equal: row.sense = RowSense::equal; break;
        default: throw ParseError("constraint '" + row.tag + "' lacks a sense");
      }
      ++pos;
      row.rhs = signed_number(tokens, pos);
      rows_.push_back(std::move(row));
    }
  }

  static double signed_number(const std::vector<Token>& tokens, std::size_t& pos)
  {
    double sign = 1.0;
    while (pos < tokens.size() && (tokens[pos].kind == Token::plus || tokens[pos].kind == Token::minus)) {
      if (tokens[pos].kind == Token::minus) sign = -sign;
      ++pos;
    }
    if (pos >= tokens.size() || tokens[pos].kind != Token::number) throw ParseError("expected a number");
    return sign * tokens[pos++].value;
  }

  void parse_bound(const std::vector<Token>& tokens, std::size_t line_no)
  {
    const std::string where = "line " + std::to_string(line_no) + ": ";
    std::size_t pos = 0;
    auto is_sign = [&](std::size_t p) {
      return p < tokens.size() && (tokens[p].kind == Token::plus || tokens[p].kind == Token::minus);
    };
    if (tokens.size() == 2 && tokens[0].kind == Token::name && lower(tokens[1].text) == "free") {
      bounds_[static_cast<std::size_t>(variable(tokens[0].text))] = {-kInf, kInf};
      return;
    }
    if (tokens.empty()) return;
    if (tokens[0].kind == Token::number || is_sign(0)) {
      // l <= x [<= u]
      const double lo = signed_number(tokens, pos);
      if (pos >= tokens.size() || tokens[pos].kind != Token::less) throw ParseError(where + "malformed bound");
      ++pos;
      if (pos >= tokens.size() || tokens[pos].kind != Token::name) throw ParseError(where + "malformed bound");
      const auto id = static_cast<std::size_t>(variable(tokens[pos].text));
      ++pos;
      bounds_[id].first = lo;
      if (pos < tokens.size()) {
        if (tokens[pos].kind != Token::less) throw ParseError(where + "malformed bound");
        ++pos;
        bounds_[id].second = signed_number(tokens, pos);
      }
      if (pos != tokens.size()) throw ParseError(where + "trailing tokens in bound");
      return;
    }
    if (tokens[0].kind != Token::name || tokens.size() < 3) throw ParseError(where + "malformed bound");
    const auto id = static_cast<std::size_t>(variable(tokens[0].text));
    pos = 2;
    const double value = signed_number(tokens, pos);
    switch (tokens[1].kind) {
      case Token::less: bounds_[id].second = value; break;
      case Token::greater: bounds_[id].first = value; break;
      case Token::equal: bounds_[id] = {value, value}; break;
      default: throw ParseError(where + "malformed bound");
    }
    if (pos != tokens.size()) throw ParseError(where + "trailing tokens in bound");
  }

  struct Row {
    std::vector<Term> terms;
    RowSense sense = RowSense::less_equal;
    double rhs = 0.0;
    std::string tag;
  };

  std::vector<std::pair<std::size_t, std::string>> lines_;
  Model model_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, VarId> index_;
  std::vector<double> objective_;
  std::vector<std::pair<double, double>> bounds_;
  std::unordered_set<VarId> binaries_;
  std::vector<Row> rows_;
};

}  // namespace lp_detail

inline Model read_lp(std::istream& in)
{
  return lp_detail::Reader(in).read();
}

inline Model read_lp_string(const std::string& text)
{
  std::istringstream in(text);
  return read_lp(in);
}

inline Model read_lp_file(const std::filesystem::path& source)
{
  std::ifstream in(source);
  if (!in) throw IoError("cannot open '" + source.string() + "'");
  return read_lp(in);
}

}  // namespace odt::mip

#endif  // ODT_MIP_LP_FORMAT_HPP
