/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The odtree Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ODT_DATA_DATASET_HPP
#define ODT_DATA_DATASET_HPP

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "odt/data/csv.hpp"
#include "odt/data/matrix.hpp"
#include "odt/error.hpp"

namespace odt::data {

/// Encoding of one source feature column.
struct ColumnEncoding {
  enum class Kind { binary, thresholds, categories };
  Kind kind = Kind::binary;
  std::vector<double> thresholds;       // strictly increasing
  std::vector<std::string> categories;  // duplicate-free

  static ColumnEncoding binary() { return {}; }
  static ColumnEncoding numeric(std::vector<double> t) { return {Kind::thresholds, std::move(t), {}}; }
  static ColumnEncoding categorical(std::vector<std::string> c) { return {Kind::categories, {}, std::move(c)}; }

  bool operator==(const ColumnEncoding&) const = default;
};

/// Per-column encodings keyed by source column name. Columns absent from the
/// map must already be binary.
struct BinarizationSpec {
  std::map<std::string, ColumnEncoding> columns;

  bool operator==(const BinarizationSpec&) const = default;
};

/// Binary feature matrix plus the label, group and treatment columns a
/// formulation reads. Empty vectors mean "absent".
struct BinarizedDataset {
  FeatureMatrix X;
  std::vector<std::string> feature_names;

  std::vector<int> y;  // class labels
  std::vector<std::string> label_names;

  std::vector<int> treatment;
  std::vector<std::string> treatment_names;
  std::vector<double> outcome;

  std::vector<int> protected_group;
  std::vector<std::string> group_names;
  std::vector<int> legitimate;
  std::vector<std::string> legitimate_names;

  std::vector<double> weights;  // empty means all ones

  [[nodiscard]] std::size_t size() const { return X.rows(); }
  [[nodiscard]] std::size_t num_features() const { return X.cols(); }

  [[nodiscard]] int num_classes() const
  {
    int k = static_cast<int>(label_names.size());
    for (const int v : y) k = std::max(k, v + 1);
    return k;
  }

  [[nodiscard]] int num_treatments() const
  {
    int k = static_cast<int>(treatment_names.size());
    for (const int v : treatment) k = std::max(k, v + 1);
    return k;
  }

  [[nodiscard]] double weight(std::size_t i) const { return weights.empty() ? 1.0 : weights[i]; }
};

enum class Task { classification, fair, fair_conditional, robust, policy };

namespace dataset_detail {

inline std::string format_number(double v)
{
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) return std::to_string(v);
  return std::string(buf.data(), ptr);
}

inline bool all_numeric(const std::vector<std::string>& values)
{
  return std::all_of(values.begin(), values.end(), [](const std::string& s) { return parse_number(s).has_value(); });
}

inline bool is_binary_column(const std::vector<std::string>& values)
{
  return std::all_of(values.begin(), values.end(), [](const std::string& s) {
    const auto v = parse_number(s);
    return v && (*v == 0.0 || *v == 1.0);
  });
}

/// Sorted distinct values; numeric order when every value parses as a number.
inline std::vector<std::string> distinct_sorted(const std::vector<std::string>& values)
{
  if (all_numeric(values)) {
    std::map<double, std::string> seen;
    for (const auto& s : values) seen.emplace(*parse_number(s), s);
    std::vector<std::string> out;
    for (auto& [v, s] : seen) out.push_back(s);
    return out;
  }
  std::set<std::string> seen(values.begin(), values.end());
  return {seen.begin(), seen.end()};
}

struct Codes {
  std::vector<int> codes;
  std::vector<std::string> names;
};

inline Codes encode(const std::vector<std::string>& values)
{
  Codes out;
  out.names = distinct_sorted(values);
  const bool numeric = all_numeric(values);
  for (const auto& s : values) {
    std::size_t k = 0;
    while (k < out.names.size()) {
      const bool same = numeric ? *parse_number(out.names[k]) == *parse_number(s) : out.names[k] == s;
      if (same) break;
      ++k;
    }
    out.codes.push_back(static_cast<int>(k));
  }
  return out;
}

inline std::optional<std::size_t> single_column(const RawTable& table, ColumnRole role)
{
  const auto cols = table.with_role(role);
  if (cols.size() > 1) {
    throw SchemaError("more than one column declared as " + std::string(to_string(role)));
  }
  if (cols.empty()) return std::nullopt;
  return cols.front();
}

inline std::vector<double> numeric_column(const RawTable& table, std::size_t c)
{
  std::vector<double> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto v = parse_number(table.rows[i][c]);
    if (!v) {
      throw EncodingError("value '" + table.rows[i][c] + "' in column '" + table.columns[c] + "' at row " +
                          std::to_string(i + 1) + " is not a number");
    }
    out.push_back(*v);
  }
  return out;
}

}  // namespace dataset_detail

/// Midpoints between consecutive distinct sorted values, thinned by quantile
/// to at most `max_thresholds`.
inline std::vector<double> default_thresholds(std::vector<double> values, std::size_t max_thresholds = 8)
{
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<double> mids;
  for (std::size_t j = 1; j < values.size(); ++j) mids.push_back(0.5 * (values[j - 1] + values[j]));
  if (max_thresholds == 0) return {};
  if (mids.size() <= max_thresholds) return mids;
  std::vector<double> out;
  const std::size_t m = mids.size();
  for (std::size_t q = 1; q <= max_thresholds; ++q) {
    // Evenly spaced ranks through the midpoint list.
    const auto idx = static_cast<std::size_t>(std::llround(static_cast<double>(q) * static_cast<double>(m + 1) /
                                                           static_cast<double>(max_thresholds + 1))) - 1;
    const double t = mids[std::min(idx, m - 1)];
    if (out.empty() || t > out.back()) out.push_back(t);
  }
  return out;
}

/// Encoding for every feature column that is not already binary.
inline BinarizationSpec default_binarization(const RawTable& table, std::size_t max_thresholds = 8)
{
  BinarizationSpec spec;
  for (const auto c : table.with_role(ColumnRole::feature)) {
    const auto values = table.column(c);
    if (dataset_detail::is_binary_column(values)) continue;
    if (dataset_detail::all_numeric(values)) {
      std::vector<double> nums;
      for (const auto& s : values) nums.push_back(*parse_number(s));
      spec.columns[table.columns[c]] = ColumnEncoding::numeric(default_thresholds(std::move(nums), max_thresholds));
    } else {
      spec.columns[table.columns[c]] = ColumnEncoding::categorical(dataset_detail::distinct_sorted(values));
    }
  }
  return spec;
}

/// Lists inconsistencies inside a binarization spec.
inline std::vector<Diagnostic> validate_spec(const BinarizationSpec& spec)
{
  std::vector<Diagnostic> out;
  for (const auto& [name, enc] : spec.columns) {
    for (std::size_t j = 1; j < enc.thresholds.size(); ++j) {
      if (!(enc.thresholds[j - 1] < enc.thresholds[j])) out.push_back({name, "thresholds not strictly increasing"});
    }
    std::set<std::string> seen;
    for (const auto& c : enc.categories) {
      if (!seen.insert(c).second) out.push_back({name, "duplicate category '" + c + "'"});
    }
  }
  return out;
}

/// Expands feature columns into 0/1 features and codes the label, group and
/// treatment columns from their sorted distinct values.
inline BinarizedDataset binarize(const RawTable& table, const BinarizationSpec& spec)
{
  if (const auto bad = validate_spec(spec); !bad.empty()) throw ValidationError(bad);
  const std::size_t n = table.rows.size();
  BinarizedDataset ds;

  struct Block {
    std::size_t column;
    const ColumnEncoding* encoding;  // null for binary pass-through
  };
  std::vector<Block> blocks;
  for (const auto c : table.with_role(ColumnRole::feature)) {
    const auto it = spec.columns.find(table.columns[c]);
    if (it != spec.columns.end() && it->second.kind != ColumnEncoding::Kind::binary) {
      blocks.push_back({c, &it->second});
      const auto& enc = it->second;
      if (enc.kind == ColumnEncoding::Kind::thresholds) {
        for (const double t : enc.thresholds) {
          ds.feature_names.push_back(table.columns[c] + "≤" + dataset_detail::format_number(t));
        }
      } else {
        for (const auto& cat : enc.categories) ds.feature_names.push_back(table.columns[c] + "=" + cat);
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const auto v = parse_number(table.rows[i][c]);
        if (!v || (*v != 0.0 && *v != 1.0)) {
          throw EncodingError("value '" + table.rows[i][c] + "' in column '" + table.columns[c] + "' at row " +
                              std::to_string(i + 1) + " is not binary and the column has no encoding");
        }
      }
      blocks.push_back({c, nullptr});
      ds.feature_names.push_back(table.columns[c]);
    }
  }

  ds.X = FeatureMatrix(n, ds.feature_names.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t f = 0;
    for (const auto& block : blocks) {
      const auto& cell = table.rows[i][block.column];
      const auto where = "at row " + std::to_string(i + 1) + " of column '" + table.columns[block.column] + "'";
      if (block.encoding == nullptr) {
        ds.X(i, f++) = *parse_number(cell);
      } else if (block.encoding->kind == ColumnEncoding::Kind::thresholds) {
        const auto v = parse_number(cell);
        if (!v) throw EncodingError("value '" + cell + "' " + where + " is not a number");
        for (const double t : block.encoding->thresholds) ds.X(i, f++) = *v <= t ? 1.0 : 0.0;
      } else {
        const auto& cats = block.encoding->categories;
        const auto hit = std::find(cats.begin(), cats.end(), cell);
        if (hit == cats.end()) throw EncodingError("value '" + cell + "' " + where + " is not a declared category");
        for (std::size_t j = 0; j < cats.size(); ++j) ds.X(i, f++) = (cats.begin() + static_cast<long>(j)) == hit ? 1.0 : 0.0;
      }
    }
  }

  using dataset_detail::encode;
  using dataset_detail::single_column;
  if (const auto c = single_column(table, ColumnRole::label)) {
    auto codes = encode(table.column(*c));
    ds.y = std::move(codes.codes);
    ds.label_names = std::move(codes.names);
  }
  if (const auto c = single_column(table, ColumnRole::treatment)) {
    auto codes = encode(table.column(*c));
    ds.treatment = std::move(codes.codes);
    ds.treatment_names = std::move(codes.names);
  }
  if (const auto c = single_column(table, ColumnRole::outcome)) ds.outcome = dataset_detail::numeric_column(table, *c);
  if (const auto c = single_column(table, ColumnRole::protected_attribute)) {
    auto codes = encode(table.column(*c));
    ds.protected_group = std::move(codes.codes);
    ds.group_names = std::move(codes.names);
  }
  if (const auto c = single_column(table, ColumnRole::legitimate)) {
    auto codes = encode(table.column(*c));
    ds.legitimate = std::move(codes.codes);
    ds.legitimate_names = std::move(codes.names);
  }
  if (const auto c = single_column(table, ColumnRole::weight)) ds.weights = dataset_detail::numeric_column(table, *c);
  return ds;
}

namespace dataset_detail {

inline void check_codes(std::vector<Diagnostic>& out, const std::string& what, const std::vector<int>& codes,
                        std::size_t n, int count, bool require_all)
{
  if (codes.size() != n) {
    out.push_back({what, "has " + std::to_string(codes.size()) + " entries, expected " + std::to_string(n)});
    return;
  }
  std::vector<int> seen(static_cast<std::size_t>(std::max(count, 0)), 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (codes[i] < 0 || codes[i] >= count) {
      out.push_back({what + "[" + std::to_string(i) + "]", "code " + std::to_string(codes[i]) + " out of range"});
      return;
    }
    seen[static_cast<std::size_t>(codes[i])] = 1;
  }
  if (require_all) {
    for (int k = 0; k < count; ++k) {
      if (seen[static_cast<std::size_t>(k)] == 0) out.push_back({what, "code " + std::to_string(k) + " has no members"});
    }
  }
}

}  // namespace dataset_detail

/// Diagnostics for the fields `task` needs; empty means the dataset is usable.
inline std::vector<Diagnostic> validate(const BinarizedDataset& ds, Task task)
{
  std::vector<Diagnostic> out;
  const std::size_t n = ds.size();
  if (n == 0) out.push_back({"dataset", "no samples"});
  if (ds.feature_names.size() != ds.num_features()) {
    out.push_back({"feature names", "count does not match the feature matrix"});
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < ds.num_features(); ++f) {
      const double v = ds.X(i, f);
      if (v != 0.0 && v != 1.0) {
        out.push_back({"X[" + std::to_string(i) + "][" + std::to_string(f) + "]",
                       "non-binary feature value " + dataset_detail::format_number(v)});
      }
    }
  }
  if (!ds.weights.empty()) {
    if (ds.weights.size() != n) out.push_back({"weights", "size does not match the sample count"});
    for (std::size_t i = 0; i < ds.weights.size(); ++i) {
      if (!std::isfinite(ds.weights[i]) || ds.weights[i] < 0.0) {
        out.push_back({"weights[" + std::to_string(i) + "]", "weight must be finite and nonnegative"});
      }
    }
  }

  if (task == Task::policy) {
    if (ds.treatment.empty()) {
      out.push_back({"treatment", "missing treatment column"});
    } else {
      const int k = ds.num_treatments();
      if (k < 2) out.push_back({"treatment", "at least two treatments are required"});
      dataset_detail::check_codes(out, "treatment", ds.treatment, n, k, true);
    }
    if (ds.outcome.empty()) {
      out.push_back({"outcome", "missing outcome column"});
    } else if (ds.outcome.size() != n) {
      out.push_back({"outcome", "size does not match the sample count"});
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(ds.outcome[i])) out.push_back({"outcome[" + std::to_string(i) + "]", "non-finite outcome"});
      }
    }
    return out;
  }

  if (ds.y.empty()) {
    out.push_back({"label", "missing label column"});
  } else {
    const int k = ds.num_classes();
    if (k < 2) out.push_back({"label", "at least two classes are required"});
    dataset_detail::check_codes(out, "label", ds.y, n, k, true);
  }
  if (task == Task::fair || task == Task::fair_conditional) {
    if (ds.protected_group.empty()) {
      out.push_back({"protected", "missing protected attribute"});
    } else {
      const int g = std::max(static_cast<int>(ds.group_names.size()),
                             ds.protected_group.empty() ? 0 : *std::max_element(ds.protected_group.begin(), ds.protected_group.end()) + 1);
      dataset_detail::check_codes(out, "protected", ds.protected_group, n, g, true);
    }
  }
  if (task == Task::fair_conditional) {
    if (ds.legitimate.empty()) {
      out.push_back({"legitimate", "missing legitimate factor"});
    } else {
      const int g = std::max(static_cast<int>(ds.legitimate_names.size()),
                             *std::max_element(ds.legitimate.begin(), ds.legitimate.end()) + 1);
      dataset_detail::check_codes(out, "legitimate", ds.legitimate, n, g, false);
    }
  }
  return out;
}

/// Throws ValidationError when validate() reports anything.
inline void require_valid(const BinarizedDataset& ds, Task task)
{
  auto diagnostics = validate(ds, task);
  if (!diagnostics.empty()) throw ValidationError(std::move(diagnostics));
}

}  // namespace odt::data

#endif  // ODT_DATA_DATASET_HPP
