#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "sustain/errors.hpp"

// Dense helpers for the tiny systems this library works with (n <= 3 in
// practice). Gaussian elimination with partial pivoting is plenty.

namespace sustain {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;

inline Mat identity(int n) {
  Mat m(n, Vec(n, 0.0));
  for (int i = 0; i < n; ++i) m[i][i] = 1.0;
  return m;
}

inline Mat transpose(const Mat& a) {
  if (a.empty()) return {};
  int rows = static_cast<int>(a.size());
  int cols = static_cast<int>(a[0].size());
  Mat t(cols, Vec(rows));
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) t[j][i] = a[i][j];
  return t;
}

inline Vec mat_vec(const Mat& a, const Vec& x) {
  Vec y(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += a[i][j] * x[j];
    y[i] = s;
  }
  return y;
}

// Solves a x = b. Throws ModelError("singular_matrix") when no pivot clears
// the relative threshold.
inline Vec solve_linear(Mat a, Vec b) {
  int n = static_cast<int>(a.size());
  double scale = 0.0;
  for (const auto& row : a)
    for (double v : row) scale = std::max(scale, std::fabs(v));
  if (scale == 0.0) throw ModelError("zero matrix", "singular_matrix");
  const double tol = 1e-14 * scale;

  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    if (std::fabs(a[pivot][col]) <= tol)
      throw ModelError("matrix is singular to working precision",
                       "singular_matrix");
    std::swap(a[pivot], a[col]);
    std::swap(b[pivot], b[col]);
    for (int r = col + 1; r < n; ++r) {
      double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  Vec x(n, 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
    x[r] = s / a[r][r];
  }
  return x;
}

inline Mat invert(const Mat& a) {
  int n = static_cast<int>(a.size());
  Mat inv(n, Vec(n, 0.0));
  for (int col = 0; col < n; ++col) {
    Vec e(n, 0.0);
    e[col] = 1.0;
    Vec x = solve_linear(a, e);
    for (int r = 0; r < n; ++r) inv[r][col] = x[r];
  }
  return inv;
}

inline double max_abs(const Vec& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

}  // namespace sustain
