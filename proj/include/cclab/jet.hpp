#pragma once

#include <array>
#include <cmath>

namespace cclab {

// Truncated Taylor series: c[k] = f^(k)(x0) / k!, k <= n.
struct Jet {
  static constexpr int kMax = 12;
  int n = 0;
  std::array<double, kMax + 1> c{};

  static Jet constant(double v, int order) {
    Jet j;
    j.n = order;
    j.c[0] = v;
    return j;
  }
  static Jet variable(double x0, int order) {
    Jet j = constant(x0, order);
    if (order >= 1) j.c[1] = 1;
    return j;
  }
  double value() const { return c[0]; }
  double derivative(int k) const {
    double f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return c[k] * f;
  }

  Jet& operator+=(const Jet& o) {
    for (int k = 0; k <= n; ++k) c[k] += o.c[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (int k = 0; k <= n; ++k) c[k] -= o.c[k];
    return *this;
  }
  Jet& operator*=(double s) {
    for (int k = 0; k <= n; ++k) c[k] *= s;
    return *this;
  }
};

inline Jet operator+(Jet a, const Jet& b) { return a += b; }
inline Jet operator-(Jet a, const Jet& b) { return a -= b; }
inline Jet operator*(Jet a, double s) { return a *= s; }
inline Jet operator*(double s, Jet a) { return a *= s; }
inline Jet operator+(Jet a, double s) {
  a.c[0] += s;
  return a;
}
inline Jet operator-(double s, Jet a) {
  a *= -1;
  a.c[0] += s;
  return a;
}
inline Jet operator-(Jet a) { return a *= -1; }

inline Jet operator*(const Jet& a, const Jet& b) {
  Jet r = Jet::constant(0, a.n);
  for (int k = 0; k <= a.n; ++k) {
    double s = 0;
    for (int j = 0; j <= k; ++j) s += a.c[j] * b.c[k - j];
    r.c[k] = s;
  }
  return r;
}

inline Jet operator/(const Jet& a, const Jet& b) {
  Jet r = Jet::constant(0, a.n);
  for (int k = 0; k <= a.n; ++k) {
    double s = a.c[k];
    for (int j = 1; j <= k; ++j) s -= b.c[j] * r.c[k - j];
    r.c[k] = s / b.c[0];
  }
  return r;
}

inline Jet exp(const Jet& a) {
  Jet r = Jet::constant(std::exp(a.c[0]), a.n);
  for (int k = 1; k <= a.n; ++k) {
    double s = 0;
    for (int j = 1; j <= k; ++j) s += j * a.c[j] * r.c[k - j];
    r.c[k] = s / k;
  }
  return r;
}

inline Jet log(const Jet& a) {
  Jet r = Jet::constant(std::log(a.c[0]), a.n);
  for (int k = 1; k <= a.n; ++k) {
    double s = 0;
    for (int j = 1; j < k; ++j) s += j * r.c[j] * a.c[k - j];
    r.c[k] = (a.c[k] - s / k) / a.c[0];
  }
  return r;
}

// a^p for a.c[0] > 0
inline Jet pow(const Jet& a, double p) {
  Jet r = Jet::constant(std::pow(a.c[0], p), a.n);
  for (int k = 1; k <= a.n; ++k) {
    double s = 0;
    for (int j = 1; j <= k; ++j) s += (p * j - (k - j)) * a.c[j] * r.c[k - j];
    r.c[k] = s / (k * a.c[0]);
  }
  return r;
}

}  // namespace cclab
