// Copyright 2026 The latte Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "latte/core.hpp"

namespace latte {

/// Dense row-major matrix of doubles.
///
/// A default-constructed tensor is 0x0 and only serves as a placeholder; every
/// tensor produced by an operation has positive extents.
class Tensor2 {
 public:
  Tensor2() = default;
  Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeError(detail::concat("tensor data length ", data_.size(),
                                      " != ", rows_, "x", cols_));
    }
  }

  static Tensor2 from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw ShapeError("ragged initializer for Tensor2");
      data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor2(r, c, std::move(data));
  }

  static Tensor2 row_vector(std::span<const double> values) {
    return Tensor2(1, values.size(), std::vector<double>(values.begin(), values.end()));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  bool same_shape(const Tensor2& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Tensor2&, const Tensor2&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace detail {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<RowMajor> as_eigen(Tensor2& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}
inline Eigen::Map<const RowMajor> as_eigen(const Tensor2& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

inline void require_same_shape(const Tensor2& a, const Tensor2& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(concat(what, ": shape ", a.rows(), "x", a.cols(), " vs ", b.rows(), "x",
                            b.cols()));
  }
}

}  // namespace detail

// a * b
inline Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
  Tensor2 out(a.rows(), b.cols());
  detail::as_eigen(out).noalias() = detail::as_eigen(a) * detail::as_eigen(b);
  return out;
}

// a * b^T
inline Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt: inner dimensions differ");
  Tensor2 out(a.rows(), b.rows());
  detail::as_eigen(out).noalias() = detail::as_eigen(a) * detail::as_eigen(b).transpose();
  return out;
}

// a^T * b
inline Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_tn: inner dimensions differ");
  Tensor2 out(a.cols(), b.cols());
  detail::as_eigen(out).noalias() = detail::as_eigen(a).transpose() * detail::as_eigen(b);
  return out;
}

/// y = x W^T + b, with W of shape out x in and b of length out broadcast over rows.
inline Tensor2 dense_forward(const Tensor2& weight, std::span<const double> bias,
                             const Tensor2& x) {
  if (x.cols() != weight.cols() || bias.size() != weight.rows()) {
    throw ShapeError(detail::concat("dense_forward: x ", x.rows(), "x", x.cols(), ", W ",
                                    weight.rows(), "x", weight.cols(), ", b ", bias.size()));
  }
  Tensor2 y = matmul_nt(x, weight);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
  }
  return y;
}

inline Tensor2 relu(Tensor2 x) {
  for (double& v : x.values()) v = v > 0.0 ? v : 0.0;
  return x;
}

/// Softmax of `logits / tau` over each contiguous group of `group` columns.
inline Tensor2 softmax_blocks(const Tensor2& logits, std::size_t group, double tau) {
  if (!(tau > 0.0)) throw ConfigError("softmax temperature must be positive");
  if (group == 0 || logits.cols() % group != 0) {
    throw ShapeError("softmax_blocks: column count not a multiple of the group size");
  }
  Tensor2 out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto in = logits.row(r);
    auto dst = out.row(r);
    for (std::size_t b = 0; b < in.size(); b += group) {
      double top = in[b];
      for (std::size_t j = 1; j < group; ++j) top = std::max(top, in[b + j]);
      double total = 0.0;
      for (std::size_t j = 0; j < group; ++j) {
        dst[b + j] = std::exp((in[b + j] - top) / tau);
        total += dst[b + j];
      }
      for (std::size_t j = 0; j < group; ++j) dst[b + j] /= total;
    }
  }
  return out;
}

/// Row-wise softmax of x / tau, computed with max subtraction.
inline Tensor2 softmax_rows(const Tensor2& x, double tau) {
  return softmax_blocks(x, x.cols(), tau);
}

inline bool all_finite(const Tensor2& t) {
  return std::all_of(t.values().begin(), t.values().end(),
                     [](double v) { return std::isfinite(v); });
}

}  // namespace latte
