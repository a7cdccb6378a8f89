// Copyright (c) 2026 The Cantor Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cantor {

using MatrixRM =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<MatrixRM>;
using ConstMatMap = Eigen::Map<const MatrixRM>;

/// Dense row-major matrix of doubles. Sequences are stored time-major:
/// one row per frame (or phoneme), one column per channel.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols),
        data_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("negative shape");
  }
  Tensor(int rows, int cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(data.begin(), data.end()) {
    if (data_.size() != static_cast<std::size_t>(rows) * cols)
      throw std::invalid_argument("tensor data does not match shape");
  }
  /// Row-list literal, e.g. Tensor::of({{1, 2}, {3, 4}}).
  static Tensor of(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor row_vector(std::span<const double> v) {
    return Tensor(1, static_cast<int>(v.size()),
                  std::vector<double>(v.begin(), v.end()));
  }
  static Tensor col_vector(std::span<const double> v) {
    return Tensor(static_cast<int>(v.size()), 1,
                  std::vector<double>(v.begin(), v.end()));
  }
  static Tensor scalar(double v) { return Tensor(1, 1, v); }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool same_shape(const Tensor& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }
  std::string shape_str() const {
    return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
  }

  double& operator()(int r, int c) {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  double operator()(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double item() const {
    if (data_.size() != 1) throw std::logic_error("item() on non-scalar");
    return data_[0];
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> row(int r) {
    return {data_.data() + static_cast<std::size_t>(r) * cols_,
            static_cast<std::size_t>(cols_)};
  }
  std::span<const double> row(int r) const {
    return {data_.data() + static_cast<std::size_t>(r) * cols_,
            static_cast<std::size_t>(cols_)};
  }

  MatMap mat() { return MatMap(data_.data(), rows_, cols_); }
  ConstMatMap mat() const { return ConstMatMap(data_.data(), rows_, cols_); }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  Tensor& operator+=(const Tensor& o);
  bool operator==(const Tensor& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

  double sum() const;
  double max_abs() const;
  bool all_finite() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  // Aligned so that Eigen's vectorised reductions peel identically for every
  // allocation; results are then bitwise reproducible run to run.
  std::vector<double, Eigen::aligned_allocator<double>> data_;
};

inline Tensor Tensor::of(
    std::initializer_list<std::initializer_list<double>> rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r == 0 ? 0 : static_cast<int>(rows.begin()->size());
  Tensor t(r, c);
  int i = 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != c)
      throw std::invalid_argument("ragged tensor literal");
    int j = 0;
    for (double v : row) t(i, j++) = v;
    ++i;
  }
  return t;
}

inline Tensor& Tensor::operator+=(const Tensor& o) {
  if (!same_shape(o))
    throw std::invalid_argument("shape mismatch in += " + shape_str() +
                                " vs " + o.shape_str());
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

inline double Tensor::sum() const {
  double s = 0.0;
  for (double v : data_) s += v;
  return s;
}

inline double Tensor::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

inline bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace cantor
