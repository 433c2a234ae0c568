/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The odtree Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ODT_DATA_MATRIX_HPP
#define ODT_DATA_MATRIX_HPP

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <vector>

namespace odt::data {

/// Dense row-major n x F feature matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  FeatureMatrix(std::initializer_list<std::initializer_list<double>> rows)
  {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    for (const auto& r : rows) {
      if (r.size() != cols_) throw std::invalid_argument("ragged matrix literal");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t f) { return data_[i * cols_ + f]; }
  double operator()(std::size_t i, std::size_t f) const { return data_[i * cols_ + f]; }

  [[nodiscard]] std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  /// 0/1 view of the entry (entries are expected to be exactly 0 or 1).
  [[nodiscard]] bool bit(std::size_t i, std::size_t f) const { return (*this)(i, f) > 0.5; }

  void append_row(std::span<const double> values)
  {
    if (rows_ == 0 && cols_ == 0) cols_ = values.size();
    if (values.size() != cols_) throw std::invalid_argument("row width mismatch");
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
  }

  bool operator==(const FeatureMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace odt::data

#endif  // ODT_DATA_MATRIX_HPP
