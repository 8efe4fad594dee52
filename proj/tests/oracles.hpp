// Test-only reference implementations, deliberately independent of the
// library code paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "fedban/matrix.hpp"
#include "fedban/network.hpp"

namespace oracle {

// Full spectrum of a symmetric matrix by classical Jacobi iteration, written
// against the flat row-major copy rather than the library kernels.
inline std::vector<double> jacobi_spectrum(const fedban::SymMatrix& m) {
  const int n = m.dim();
  std::vector<double> a(m.flat());
  auto at = [&](int i, int j) -> double& { return a[std::size_t(i) * n + j]; };
  for (int sweep = 0; sweep < 200; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += at(p, q) * at(p, q);
    if (off < 1e-26) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (at(p, q) == 0.0) continue;
        const double phi = 0.5 * std::atan2(2.0 * at(p, q),
                                            at(q, q) - at(p, p));
        const double c = std::cos(phi), s = std::sin(phi);
        for (int k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (int i = 0; i < n; ++i) eig[i] = at(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

// Gaussian elimination with partial pivoting; independent of the library's
// Cholesky solve.
inline fedban::Vec gauss_solve(const fedban::SymMatrix& m,
                               const fedban::Vec& b) {
  const int n = m.dim();
  std::vector<double> a(std::size_t(n) * (n + 1));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a[std::size_t(i) * (n + 1) + j] = m(i, j);
    a[std::size_t(i) * (n + 1) + n] = b[i];
  }
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[std::size_t(r) * (n + 1) + col]) >
          std::abs(a[std::size_t(piv) * (n + 1) + col]))
        piv = r;
    for (int j = 0; j <= n; ++j)
      std::swap(a[std::size_t(col) * (n + 1) + j],
                a[std::size_t(piv) * (n + 1) + j]);
    const double p = a[std::size_t(col) * (n + 1) + col];
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[std::size_t(r) * (n + 1) + col] / p;
      for (int j = col; j <= n; ++j)
        a[std::size_t(r) * (n + 1) + j] -=
            f * a[std::size_t(col) * (n + 1) + j];
    }
  }
  fedban::Vec x(n);
  for (int i = 0; i < n; ++i)
    x[i] = a[std::size_t(i) * (n + 1) + n] / a[std::size_t(i) * (n + 1) + i];
  return x;
}

// All-pairs shortest paths; independent of the BFS used by the library.
inline std::vector<std::vector<int>> floyd_warshall(
    const fedban::Adjacency& adj) {
  const int n = int(adj.size());
  const int inf = 1 << 20;
  std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
  for (int i = 0; i < n; ++i) d[i][i] = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (adj[i][j]) d[i][j] = 1;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

inline double normal_cdf(double x, double sigma) {
  return 0.5 * std::erfc(-x / (sigma * std::sqrt(2.0)));
}

// Two-sided Kolmogorov-Smirnov statistic against N(0, sigma^2).
inline double ks_statistic(std::vector<double> samples, double sigma) {
  std::sort(samples.begin(), samples.end());
  const double n = double(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double cdf = normal_cdf(samples[i], sigma);
    d = std::max(d, std::abs(cdf - double(i) / n));
    d = std::max(d, std::abs(cdf - double(i + 1) / n));
  }
  return d;
}

// Dyadic decomposition of [1, k] straight from the binary representation.
inline std::vector<std::pair<int, long long>> dyadic_decomposition(
    long long k) {
  std::vector<std::pair<int, long long>> out;
  long long consumed = 0;
  for (int level = 62; level >= 0; --level) {
    if (!(k & (1LL << level))) continue;
    out.emplace_back(level, consumed >> level);
    consumed += 1LL << level;
  }
  return out;
}

}  // namespace oracle
