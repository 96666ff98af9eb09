#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cclab {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kHalfPi = std::numbers::pi / 2;
inline constexpr double kTwoPi = 2 * std::numbers::pi;

struct Mat2 {
  double a11 = 1, a12 = 0, a21 = 0, a22 = 1;

  double det() const { return a11 * a22 - a12 * a21; }
  double max_abs() const {
    return std::max({std::abs(a11), std::abs(a12), std::abs(a21), std::abs(a22)});
  }
  // largest singular value
  double norm() const {
    double e = (a11 + a22) / 2, f = (a11 - a22) / 2;
    double g = (a21 + a12) / 2, h = (a21 - a12) / 2;
    return std::hypot(e, h) + std::hypot(f, g);
  }
  Mat2 operator*(const Mat2& o) const {
    return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
            a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
  }
  Mat2 scaled(double s) const { return {a11 * s, a12 * s, a21 * s, a22 * s}; }
  Mat2 inverse_sl2() const { return {a22, -a12, -a21, a11}; }
};

inline Mat2 rotation(double t) {
  double c = std::cos(t), s = std::sin(t);
  return {c, -s, s, c};
}

inline Mat2 diag(double a, double b) { return {a, 0, 0, b}; }

// reduce t into [lo, lo + period)
inline double wrap(double t, double lo, double period) {
  double k = std::floor((t - lo) / period);
  double r = t - k * period;
  if (r < lo) r += period;
  if (r >= lo + period) r -= period;
  return r;
}

// reduce into (-pi/2, pi/2]
inline double reduce_half_pi(double t) {
  double r = wrap(t, -kHalfPi, kPi);
  if (r == -kHalfPi) r = kHalfPi;
  return r;
}

// signed distance of two angles modulo pi
inline double angle_diff_mod_pi(double a, double b) { return reduce_half_pi(a - b); }

}  // namespace cclab
