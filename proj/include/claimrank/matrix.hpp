#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "claimrank/error.hpp"

namespace claimrank {

// Dense row-major matrix. The numeric type is a template parameter: the
// training path runs in float (matching the float32 checkpoint format),
// verification paths instantiate double.
template <typename T>
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, T fill = T(0))
      : rows(r), cols(c), data(r * c, fill) {}

  T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<T> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const T> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  bool same_shape(const Matrix& other) const {
    return rows == other.rows && cols == other.cols;
  }

  template <typename U>
  Matrix<U> cast() const {
    Matrix<U> out(rows, cols);
    for (std::size_t i = 0; i < data.size(); ++i)
      out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

template <typename T>
Matrix<T> take_rows(const Matrix<T>& m, std::span<const std::size_t> idx) {
  Matrix<T> out(idx.size(), m.cols);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= m.rows) throw ShapeError("row index out of range");
    for (std::size_t c = 0; c < m.cols; ++c) out(i, c) = m(idx[i], c);
  }
  return out;
}

}  // namespace claimrank
