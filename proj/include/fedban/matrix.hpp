#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fedban/errors.hpp"

namespace fedban {

using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline void axpy(double c, std::span<const double> x, Vec& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

// Dense symmetric matrix. Both triangles are stored and kept bitwise equal;
// every mutator writes (i,j) and (j,i) from the same double.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int n) : n_(n), a_(std::size_t(n) * n, 0.0) {}

  static SymMatrix identity(int n, double scale = 1.0) {
    SymMatrix m(n);
    for (int i = 0; i < n; ++i) m.a_[std::size_t(i) * n + i] = scale;
    return m;
  }

  int dim() const { return n_; }

  double operator()(int i, int j) const { return a_[std::size_t(i) * n_ + j]; }

  void set(int i, int j, double v) {
    a_[std::size_t(i) * n_ + j] = v;
    a_[std::size_t(j) * n_ + i] = v;
  }

  void add_at(int i, int j, double v) {
    a_[std::size_t(i) * n_ + j] += v;
    if (i != j) a_[std::size_t(j) * n_ + i] = a_[std::size_t(i) * n_ + j];
  }

  void zero() { std::fill(a_.begin(), a_.end(), 0.0); }

  void add(const SymMatrix& o) {
    require_same_dim(o.n_);
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
  }

  void sub(const SymMatrix& o) {
    require_same_dim(o.n_);
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
  }

  void add_scaled_identity(double c) {
    for (int i = 0; i < n_; ++i) a_[std::size_t(i) * n_ + i] += c;
  }

  // this += w * x x^T, symmetric by construction.
  void add_outer(std::span<const double> x, double w = 1.0) {
    if (int(x.size()) != n_)
      throw DimensionMismatch("add_outer: vector length != matrix dim");
    for (int i = 0; i < n_; ++i) {
      const double wxi = w * x[i];
      for (int j = i; j < n_; ++j) {
        const double v = a_[std::size_t(i) * n_ + j] + wxi * x[j];
        a_[std::size_t(i) * n_ + j] = v;
        a_[std::size_t(j) * n_ + i] = v;
      }
    }
  }

  void scale(double c) {
    for (auto& v : a_) v *= c;
  }

  double trace() const {
    double t = 0.0;
    for (int i = 0; i < n_; ++i) t += a_[std::size_t(i) * n_ + i];
    return t;
  }

  // y = this * x
  void matvec(std::span<const double> x, Vec& y) const {
    y.assign(n_, 0.0);
    for (int i = 0; i < n_; ++i) {
      double s = 0.0;
      const double* row = &a_[std::size_t(i) * n_];
      for (int j = 0; j < n_; ++j) s += row[j] * x[j];
      y[i] = s;
    }
  }

  const std::vector<double>& flat() const { return a_; }

  bool operator==(const SymMatrix& o) const {
    return n_ == o.n_ && a_ == o.a_;
  }

  void require_same_dim(int n) const {
    if (n != n_) throw DimensionMismatch("symmetric matrix dims differ");
  }

 private:
  int n_ = 0;
  std::vector<double> a_;
};

// Lower-triangular Cholesky factor of a positive definite matrix. factor()
// returns false on a nonpositive pivot, which is the loud non-PSD signal.
struct Cholesky {
  int n = 0;
  std::vector<double> low;

  bool factor(const SymMatrix& m) {
    n = m.dim();
    low.assign(std::size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) {
        double s = m(i, j);
        for (int k = 0; k < j; ++k)
          s -= low[std::size_t(i) * n + k] * low[std::size_t(j) * n + k];
        if (i == j) {
          if (!(s > 0.0) || !std::isfinite(s)) return false;
          low[std::size_t(i) * n + i] = std::sqrt(s);
        } else {
          low[std::size_t(i) * n + j] = s / low[std::size_t(j) * n + j];
        }
      }
    }
    return true;
  }

  double log_det() const {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::log(low[std::size_t(i) * n + i]);
    return 2.0 * s;
  }

  // Solves L L^T out = b.
  void solve(std::span<const double> b, Vec& out) const {
    out.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
      double s = b[i];
      for (int k = 0; k < i; ++k) s -= low[std::size_t(i) * n + k] * out[k];
      out[i] = s / low[std::size_t(i) * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
      double s = out[i];
      for (int k = i + 1; k < n; ++k) s -= low[std::size_t(k) * n + i] * out[k];
      out[i] = s / low[std::size_t(i) * n + i];
    }
  }

  // x^T M^{-1} x = || L^{-1} x ||^2.
  double inv_quad(std::span<const double> x) const {
    double q = 0.0;
    // Forward substitution without materialising the intermediate vector.
    thread_local std::vector<double> z;
    z.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
      double s = x[i];
      for (int k = 0; k < i; ++k) s -= low[std::size_t(i) * n + k] * z[k];
      z[i] = s / low[std::size_t(i) * n + i];
      q += z[i] * z[i];
    }
    return q;
  }
};

inline double logdet(const SymMatrix& m) {
  Cholesky c;
  if (!c.factor(m))
    throw NotPositiveDefinite("logdet: matrix is not positive definite");
  return c.log_det();
}

inline Vec solve_psd(const SymMatrix& m, const Vec& u) {
  if (int(u.size()) != m.dim())
    throw DimensionMismatch("solve_psd: rhs length != matrix dim");
  Cholesky c;
  if (!c.factor(m))
    throw NotPositiveDefinite("solve_psd: matrix is not positive definite");
  Vec out;
  c.solve(u, out);
  return out;
}

// sqrt(x^T m x) for PSD m.
inline double ellipsoid_norm(const Vec& x, const SymMatrix& m) {
  if (int(x.size()) != m.dim())
    throw DimensionMismatch("ellipsoid_norm: vector length != matrix dim");
  double q = 0.0;
  for (int i = 0; i < m.dim(); ++i) {
    double s = 0.0;
    for (int j = 0; j < m.dim(); ++j) s += m(i, j) * x[j];
    q += x[i] * s;
  }
  if (q < -1e-12)
    throw NegativeQuadraticForm("ellipsoid_norm: negative quadratic form");
  return std::sqrt(q < 0.0 ? 0.0 : q);
}

inline SymMatrix rank_one_update(const SymMatrix& g, const Vec& x) {
  if (int(x.size()) != g.dim())
    throw DimensionMismatch("rank_one_update: vector length != matrix dim");
  SymMatrix out = g;
  out.add_outer(x);
  return out;
}

// (n + n^T) / sqrt(2) for a square row-major matrix.
inline SymMatrix symmetrize(const std::vector<double>& rowmajor, int n) {
  if (int(rowmajor.size()) != n * n)
    throw DimensionMismatch("symmetrize: input is not n x n");
  static const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  SymMatrix out(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      out.set(i, j, (rowmajor[std::size_t(i) * n + j] +
                     rowmajor[std::size_t(j) * n + i]) *
                        inv_sqrt2);
  return out;
}

// Smallest eigenvalue of a symmetric matrix via cyclic Jacobi rotations.
inline double min_eigenvalue(const SymMatrix& m) {
  const int n = m.dim();
  if (n == 0) return 0.0;
  std::vector<double> a(m.flat());
  auto at = [&](int i, int j) -> double& { return a[std::size_t(i) * n + j]; };

  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  const double tol = 1e-14 * scale;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(at(p, q)));
    if (off <= tol) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (std::abs(apq) <= tol) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
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
  double lo = at(0, 0);
  for (int i = 1; i < n; ++i) lo = std::min(lo, at(i, i));
  return lo;
}

// PSD up to floating-point noise from symmetrized accumulation.
inline bool is_psd(const SymMatrix& m, double tol_scale = 1e-10) {
  return min_eigenvalue(m) >= -tol_scale * std::max(m.trace(), 1.0);
}

}  // namespace fedban
