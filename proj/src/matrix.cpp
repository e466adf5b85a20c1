#include "complat/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "complat/errors.hpp"
#include "complat/rng.hpp"

namespace complat {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void l2_normalize(std::span<double> v) {
  const double n = l2_norm(v);
  if (n == 0.0) return;
  for (double& x : v) x /= n;
}

std::vector<double> normalized(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  l2_normalize(out);
  return out;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

void l2_normalize_backward(std::span<const double> x, std::span<const double> gy,
                           std::span<double> gx) {
  const double n = l2_norm(x);
  if (n == 0.0) return;
  const double inv = 1.0 / n;
  // y = x/n; dL/dx = (g - (g.y) y)/n
  double gdoty = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) gdoty += gy[i] * x[i] * inv;
  for (std::size_t i = 0; i < x.size(); ++i) gx[i] += (gy[i] - gdoty * x[i] * inv) * inv;
}

void affine_forward(const Matrix& x, const Matrix& w, const std::vector<double>& b, Matrix& y) {
  if (x.cols != w.cols) throw DataError("affine_forward: input dimension mismatch");
  y = Matrix(x.rows, w.rows);
  for (std::size_t s = 0; s < x.rows; ++s) {
    const double* xs = x.row(s);
    double* ys = y.row(s);
    for (std::size_t o = 0; o < w.rows; ++o) {
      const double* wo = w.row(o);
      double acc = b.empty() ? 0.0 : b[o];
      for (std::size_t k = 0; k < x.cols; ++k) acc += xs[k] * wo[k];
      ys[o] = acc;
    }
  }
}

void affine_backward(const Matrix& x, const Matrix& w, const Matrix& gy, Matrix& gw,
                     std::vector<double>& gb, Matrix* gx) {
  for (std::size_t s = 0; s < x.rows; ++s) {
    const double* xs = x.row(s);
    const double* gys = gy.row(s);
    for (std::size_t o = 0; o < w.rows; ++o) {
      const double g = gys[o];
      if (g == 0.0) continue;
      double* gwo = gw.row(o);
      for (std::size_t k = 0; k < x.cols; ++k) gwo[k] += g * xs[k];
      if (!gb.empty()) gb[o] += g;
    }
    if (gx != nullptr) {
      double* gxs = gx->row(s);
      for (std::size_t o = 0; o < w.rows; ++o) {
        const double g = gys[o];
        if (g == 0.0) continue;
        const double* wo = w.row(o);
        for (std::size_t k = 0; k < x.cols; ++k) gxs[k] += g * wo[k];
      }
    }
  }
}

bool all_finite(const Matrix& m) {
  for (double x : m.data)
    if (!std::isfinite(x)) return false;
  return true;
}

std::vector<std::uint32_t> Rng::sample_without_replacement(std::uint64_t n, std::size_t k) {
  // Floyd's algorithm; result sorted ascending.
  std::vector<std::uint32_t> out;
  out.reserve(k);
  for (std::uint64_t j = n - k; j < n; ++j) {
    std::uint64_t t = below(j + 1);
    bool present = false;
    for (std::uint32_t v : out)
      if (v == t) {
        present = true;
        break;
      }
    out.push_back(static_cast<std::uint32_t>(present ? j : t));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace complat
