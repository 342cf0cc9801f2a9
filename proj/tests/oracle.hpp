#pragma once

// Small dense helpers for test oracles, written with explicit loops so they
// share no code path with the library's Eigen expressions.

#include <cmath>
#include <stdexcept>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline Matrix zeros(std::size_t r, std::size_t c) { return Matrix(r, std::vector<double>(c, 0.0)); }

/// Gauss-Jordan inverse with partial pivoting.
inline Matrix inverse(Matrix a) {
  const std::size_t n = a.size();
  Matrix inv = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (a[piv][col] == 0.0) throw std::runtime_error("singular");
    std::swap(a[piv], a[col]);
    std::swap(inv[piv], inv[col]);
    const double d = a[col][col];
    for (std::size_t j = 0; j < n; ++j) {
      a[col][j] /= d;
      inv[col][j] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= f * a[col][j];
        inv[r][j] -= f * inv[col][j];
      }
    }
  }
  return inv;
}

inline std::vector<double> matvec(const Matrix& a, const std::vector<double>& x) {
  std::vector<double> out(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) out[i] += a[i][j] * x[j];
  return out;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// X'X and X'y from rows.
inline Matrix gram(const Matrix& x) {
  const std::size_t p = x.empty() ? 0 : x[0].size();
  Matrix g = zeros(p, p);
  for (const auto& row : x)
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) g[i][j] += row[i] * row[j];
  return g;
}

inline std::vector<double> cross(const Matrix& x, const std::vector<double>& y) {
  const std::size_t p = x.empty() ? 0 : x[0].size();
  std::vector<double> out(p, 0.0);
  for (std::size_t r = 0; r < x.size(); ++r)
    for (std::size_t i = 0; i < p; ++i) out[i] += x[r][i] * y[r];
  return out;
}

/// Digamma from the series psi(x) = -gamma + sum_k [1/(k+1) - 1/(k+x)], accelerated
/// by shifting to large argument and using the Bernoulli expansion with many terms.
inline long double digamma_ld(long double x) {
  long double acc = 0.0L;
  while (x < 20.0L) {
    acc -= 1.0L / x;
    x += 1.0L;
  }
  const long double b[] = {1.0L / 6, -1.0L / 30, 1.0L / 42, -1.0L / 30, 5.0L / 66, -691.0L / 2730, 7.0L / 6,
                           -3617.0L / 510};
  long double s = std::log(x) - 0.5L / x;
  long double xp = x * x;
  for (int k = 1; k <= 8; ++k) {
    s -= b[k - 1] / (2.0L * k * xp);
    xp *= x * x;
  }
  return acc + s;
}

}  // namespace oracle
