// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The taskrisk Authors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "taskrisk/core.hpp"

namespace taskrisk {

// Dense row-major matrix of doubles. Vectors are stored as 1 x n.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double value = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, value) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) throw Error(ErrorCode::ShapeMismatch, "matrix data size");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
  }

  std::string shape_string() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace detail {
inline void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::ShapeMismatch, what);
}
}  // namespace detail

// A * B
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  detail::require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double x = a(i, k);
      if (x == 0.0) continue;
      auto br = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out[j] += x * br[j];
    }
  }
  return c;
}

// A^T * B
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  detail::require(a.rows() == b.rows(), "matmul_tn: row counts differ");
  Matrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto ar = a.row(k);
    auto br = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double x = ar[i];
      if (x == 0.0) continue;
      auto out = c.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out[j] += x * br[j];
    }
  }
  return c;
}

// A * B^T
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  detail::require(a.cols() == b.cols(), "matmul_nt: column counts differ");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ar = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto br = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += ar[k] * br[k];
      c(i, j) = s;
    }
  }
  return c;
}

inline void add_inplace(Matrix& a, const Matrix& b, double scale = 1.0) {
  detail::require(a.same_shape(b), "add: shapes differ");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += scale * b[i];
}

// Adds a 1 x n row vector to every row.
inline void add_row_inplace(Matrix& a, const Matrix& bias) {
  detail::require(bias.rows() == 1 && bias.cols() == a.cols(), "add_row: bias shape");
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto row = a.row(r);
    for (std::size_t c = 0; c < a.cols(); ++c) row[c] += bias[c];
  }
}

inline Matrix column_sums(const Matrix& a) {
  Matrix s(1, a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) s[c] += a(r, c);
  return s;
}

inline Matrix columns(const Matrix& a, std::size_t begin, std::size_t count) {
  Matrix out(a.rows(), count);
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = a(r, begin + c);
  return out;
}

inline void set_columns(Matrix& a, std::size_t begin, const Matrix& block) {
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < block.cols(); ++c) a(r, begin + c) = block(r, c);
}

inline double squared_norm(const Matrix& a) {
  double s = 0.0;
  for (double x : a.values()) s += x * x;
  return s;
}

}  // namespace taskrisk
