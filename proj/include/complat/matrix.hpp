#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace complat {

// Dense row-major matrix of doubles. Embeddings, projections, and gradients
// all use this; disk serialization narrows to 32-bit floats (embedding_io).
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double value = 0.0) : rows(r), cols(c), data(r * c, value) {}

  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }
  std::span<double> row_span(std::size_t i) { return {row(i), cols}; }
  std::span<const double> row_span(std::size_t i) const { return {row(i), cols}; }

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  void set_zero() { std::fill(data.begin(), data.end(), 0.0); }

  bool same_shape(const Matrix& other) const {
    return rows == other.rows && cols == other.cols;
  }
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

// v / ||v||; the zero vector stays zero
void l2_normalize(std::span<double> v);
std::vector<double> normalized(std::span<const double> v);

// 0 when either vector is zero
double cosine(std::span<const double> a, std::span<const double> b);

// Backward of y = x/||x||: accumulates dL/dx into gx given pre-norm x and
// dL/dy. No gradient flows through the zero vector.
void l2_normalize_backward(std::span<const double> x, std::span<const double> gy,
                           std::span<double> gx);

// Y (s x out) = X (s x in) * W^T (W is out x in), plus optional bias per output
void affine_forward(const Matrix& x, const Matrix& w, const std::vector<double>& b, Matrix& y);

// Given gY, accumulate gW, gb and (optionally) compute gX
void affine_backward(const Matrix& x, const Matrix& w, const Matrix& gy, Matrix& gw,
                     std::vector<double>& gb, Matrix* gx);

bool all_finite(const Matrix& m);

}  // namespace complat
