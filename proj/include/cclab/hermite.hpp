#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cclab/error.hpp"

namespace cclab {

struct HermiteSpec {
  double left = 0, right = 1;
  std::vector<double> left_derivs;   // orders 0..l at left
  std::vector<double> right_derivs;  // orders 0..l at right
};

// polynomial sum c_k u^k with u = (x - left) / (right - left)
struct HermitePoly {
  double left = 0, right = 1;
  std::vector<double> coeffs;

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
  // derivatives with respect to x, orders 0..order
  void derivs(double x, int order, double* out) const {
    double h = right - left;
    double u = (x - left) / h;
    int m = degree();
    double hinv = 1;
    for (int j = 0; j <= order; ++j) {
      double s = 0;
      if (j <= m) {
        for (int k = m; k >= j; --k) {
          double f = 1;
          for (int i = 0; i < j; ++i) f *= (k - i);
          s = s * u + f * coeffs[k];
        }
      }
      out[j] = s * hinv;
      hinv /= h;
    }
  }
  double value(double x) const {
    double d;
    derivs(x, 0, &d);
    return d;
  }
};

namespace detail {

// Gaussian elimination with partial pivoting; A is n x n row-major
inline std::vector<double> solve_dense(std::vector<double> A, std::vector<double> b, int n) {
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(A[r * n + col]) > std::abs(A[piv * n + col])) piv = r;
    if (A[piv * n + col] == 0) throw Error(ErrorKind::IllConditioned, "singular confluent Vandermonde system");
    if (piv != col) {
      for (int k = 0; k < n; ++k) std::swap(A[col * n + k], A[piv * n + k]);
      std::swap(b[col], b[piv]);
    }
    for (int r = col + 1; r < n; ++r) {
      double f = A[r * n + col] / A[col * n + col];
      if (f == 0) continue;
      for (int k = col; k < n; ++k) A[r * n + k] -= f * A[col * n + k];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int k = r + 1; k < n; ++k) s -= A[r * n + k] * x[k];
    x[r] = s / A[r * n + r];
  }
  return x;
}

inline double falling(int k, int j) {
  double f = 1;
  for (int i = 0; i < j; ++i) f *= (k - i);
  return f;
}

}  // namespace detail

// Unique degree-(2l+1) polynomial meeting value and derivative conditions up to order l at both ends.
inline HermitePoly hermite_patch(const HermiteSpec& spec, int l) {
  if (!(spec.left < spec.right)) throw Error(ErrorKind::InvalidParams, "hermite patch needs left < right");
  if (static_cast<int>(spec.left_derivs.size()) < l + 1 || static_cast<int>(spec.right_derivs.size()) < l + 1)
    throw Error(ErrorKind::InvalidParams, "hermite patch needs l+1 conditions per end");
  double h = spec.right - spec.left;
  int m = 2 * l + 1;
  std::vector<double> vl(l + 1), vr(l + 1);
  double hp = 1, scale = 0;
  for (int j = 0; j <= l; ++j) {
    vl[j] = spec.left_derivs[j] * hp;
    vr[j] = spec.right_derivs[j] * hp;
    scale = std::max({scale, std::abs(vl[j]), std::abs(vr[j])});
    hp *= h;
  }
  HermitePoly p;
  p.left = spec.left;
  p.right = spec.right;
  p.coeffs.assign(m + 1, 0);
  double fact = 1;
  for (int j = 0; j <= l; ++j) {
    if (j > 0) fact *= j;
    p.coeffs[j] = vl[j] / fact;
  }
  int n = l + 1;
  std::vector<double> A(n * n), b(n);
  for (int j = 0; j <= l; ++j) {
    double rhs = vr[j];
    for (int k = j; k <= l; ++k) rhs -= detail::falling(k, j) * p.coeffs[k];
    b[j] = rhs;
    for (int k = l + 1; k <= m; ++k) A[j * n + (k - l - 1)] = detail::falling(k, j);
  }
  std::vector<double> x = detail::solve_dense(A, b, n);
  for (int k = 0; k < n; ++k) p.coeffs[l + 1 + k] = x[k];
  // residuals in the scaled variable
  double res = 0;
  for (int j = 0; j <= l; ++j) {
    double at1 = 0;
    for (int k = j; k <= m; ++k) at1 += detail::falling(k, j) * p.coeffs[k];
    res = std::max(res, std::abs(at1 - vr[j]));
  }
  if (scale > 0 && res > 1e-9 * scale)
    throw Error(ErrorKind::IllConditioned, "hermite residual " + std::to_string(res / scale));
  return p;
}

// Piecewise two-point Hermite interpolant through sampled values and derivatives.
struct HermiteSpline {
  int l = 1;
  std::vector<double> nodes;
  std::vector<std::vector<double>> node_derivs;  // orders 0..l at each node
  std::vector<HermitePoly> polys;

  void build() {
    polys.clear();
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
      HermiteSpec s{nodes[i], nodes[i + 1], node_derivs[i], node_derivs[i + 1]};
      polys.push_back(hermite_patch(s, l));
    }
  }
  double lo() const { return nodes.front(); }
  double hi() const { return nodes.back(); }
  void derivs(double y, int order, double* out) const {
    std::size_t i = std::upper_bound(nodes.begin(), nodes.end(), y) - nodes.begin();
    i = std::clamp<std::size_t>(i, 1, polys.size()) - 1;
    polys[i].derivs(y, order, out);
  }
};

// Derivatives up to order l at every node of a sampled function by local polynomial fits.
inline std::vector<std::vector<double>> fd_node_derivs(const std::vector<double>& x,
                                                       const std::vector<double>& v, int l) {
  int n = static_cast<int>(x.size());
  int s = std::min(n, 2 * l + 3);
  std::vector<std::vector<double>> out(n, std::vector<double>(l + 1, 0));
  for (int i = 0; i < n; ++i) {
    int start = std::clamp(i - s / 2, 0, n - s);
    double h = (x[std::min(n - 1, start + s - 1)] - x[start]) / std::max(1, s - 1);
    if (h == 0) h = 1;
    std::vector<double> A(s * s), b(s);
    for (int r = 0; r < s; ++r) {
      double t = (x[start + r] - x[i]) / h, tp = 1;
      for (int k = 0; k < s; ++k) {
        A[r * s + k] = tp;
        tp *= t;
      }
      b[r] = v[start + r];
    }
    std::vector<double> c = detail::solve_dense(A, b, s);
    double fact = 1, hp = 1;
    for (int j = 0; j <= l && j < s; ++j) {
      if (j > 0) {
        fact *= j;
        hp *= h;
      }
      out[i][j] = c[j] * fact / hp;
    }
    out[i][0] = v[i];
  }
  return out;
}

}  // namespace cclab
