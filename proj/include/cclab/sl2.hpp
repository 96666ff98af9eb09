#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "cclab/error.hpp"
#include "cclab/mat2.hpp"

namespace cclab {

inline constexpr double kHyperbolicityThreshold = 1e-6;
inline constexpr double kLog2 = 0.69314718055994530942;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// signed number held as sign * exp(log)
struct SLog {
  int sign = 0;
  double log = kNegInf;

  static SLog from(double v) {
    if (v == 0) return {};
    return {v > 0 ? 1 : -1, std::log(std::abs(v))};
  }
  double value() const { return sign == 0 ? 0.0 : sign * std::exp(log); }
  SLog operator-() const { return {-sign, log}; }
};

inline SLog operator+(SLog x, SLog y) {
  if (x.sign == 0) return y;
  if (y.sign == 0) return x;
  if (x.log < y.log) std::swap(x, y);
  double d = y.log - x.log;
  if (x.sign == y.sign) return {x.sign, x.log + std::log1p(std::exp(d))};
  if (d == 0) return {};
  return {x.sign, x.log + std::log1p(-std::exp(d))};
}

inline SLog operator*(SLog x, SLog y) {
  if (x.sign == 0 || y.sign == 0) return {};
  return {x.sign * y.sign, x.log + y.log};
}

// log(sinh(x)) for x > 0
inline double log_sinh(double x) {
  if (x <= 0) return kNegInf;
  return x - kLog2 + std::log1p(-std::exp(-2 * x));
}

inline double log_sum_exp(std::initializer_list<double> xs) {
  double m = kNegInf;
  for (double v : xs) m = std::max(m, v);
  if (m == kNegInf) return m;
  double s = 0;
  for (double v : xs) s += std::exp(v - m);
  return m + std::log(s);
}

struct HyperbolicTriple {
  double psi = 0;
  double alpha = 0;  // log of the norm
  double phi = 0;

  Mat2 reconstruct() const {
    double s = std::exp(alpha);
    return rotation(psi) * diag(s, 1 / s) * rotation(phi);
  }
  // phi in [0, pi), psi in (-pi, pi]
  HyperbolicTriple normalized() const {
    HyperbolicTriple t = *this;
    double k = std::floor(t.phi / kPi);
    t.phi -= k * kPi;
    t.psi -= k * kPi;
    if (t.phi >= kPi) {
      t.phi -= kPi;
      t.psi += kPi;
    }
    if (t.phi < 0) {
      t.phi += kPi;
      t.psi -= kPi;
    }
    t.psi = wrap(t.psi, -kPi, kTwoPi);
    if (t.psi == -kPi) t.psi = kPi;
    return t;
  }
};

inline HyperbolicTriple decompose_unchecked(const Mat2& A) {
  double e = (A.a11 + A.a22) / 2, f = (A.a11 - A.a22) / 2;
  double g = (A.a21 + A.a12) / 2, h = (A.a21 - A.a12) / 2;
  double Q = std::hypot(e, h), R = std::hypot(f, g);
  double s = std::atan2(h, e);  // psi + phi
  double t = std::atan2(g, f);  // psi - phi
  HyperbolicTriple r;
  r.alpha = std::log(Q + R);
  r.psi = (s + t) / 2;
  r.phi = (s - t) / 2;
  return r.normalized();
}

inline HyperbolicTriple decompose(const Mat2& A) {
  HyperbolicTriple t = decompose_unchecked(A);
  if (!(t.alpha > kHyperbolicityThreshold))
    throw Error(ErrorKind::NonHyperbolic, "norm within threshold of 1");
  return t;
}

struct AngleCorrection {
  double theta = 0;
  SLog a, b, a2, b2;  // a, b, a', b'
  SLog f, f2;         // a cot + b tan, a' cot - b' tan
  double phi_corr = 0;
  double psi_corr = 0;
  // corrections reduced mod pi into (-pi/2, pi/2], with full relative precision
  SLog phi_reduced, psi_reduced;
};

namespace detail {

// atan2(1, f) for f held in log form
inline double atan2_one(SLog f) {
  if (f.sign == 0) return kHalfPi;
  if (f.log < 0) return std::atan2(1.0, f.value());
  double t = std::atan(std::exp(-f.log));
  return f.sign > 0 ? t : kPi - t;
}

// the six-case branch table on theta in [0, pi)
inline double branch_table(SLog f, double theta, int bsign) {
  if (theta == 0) return 0;
  if (theta == kHalfPi) return bsign >= 0 ? 0 : -kHalfPi;
  double base = -0.5 * atan2_one(f);
  if (theta < kHalfPi) return base;
  return (bsign >= 0 ? kHalfPi : -kHalfPi) + base;
}

// reduced value given the table value and the quantity half*atan(1/f) it is congruent to
inline SLog reduced_form(double table_value, SLog f, int sign_factor) {
  double red = reduce_half_pi(table_value);
  if (std::abs(red) < 0.25 && f.sign != 0 && f.log > 0) {
    double t = std::exp(-f.log);
    double lg = (t < 1e-8 ? -f.log : std::log(std::atan(t))) - kLog2;
    return {sign_factor * f.sign, lg};
  }
  return SLog::from(red);
}

}  // namespace detail

inline AngleCorrection angle_correction(double alphaA, double alphaB, double theta) {
  if (!(alphaA > 0) || !(alphaB > 0))
    throw Error(ErrorKind::DegenerateDenominator, "log-norms must be positive");
  if (!(theta >= 0 && theta < kPi)) throw Error(ErrorKind::InvalidParams, "theta must lie in [0, pi)");
  AngleCorrection c;
  c.theta = theta;
  double num = log_sinh(2 * (alphaA + alphaB)) - kLog2;
  double dif = alphaA - alphaB;
  int sb = dif > 0 ? 1 : (dif < 0 ? -1 : 0);
  double numb = sb == 0 ? kNegInf : log_sinh(2 * std::abs(dif)) - kLog2;
  double lsB = log_sinh(2 * alphaB), lsA = log_sinh(2 * alphaA);
  c.a = {1, num - lsB};
  c.b = sb == 0 ? SLog{} : SLog{sb, numb - lsB};
  c.a2 = {1, num - lsA};
  c.b2 = sb == 0 ? SLog{} : SLog{sb, numb - lsA};
  if (theta == 0) {
    c.phi_corr = c.psi_corr = 0;
    return c;
  }
  double cs = std::cos(theta), sn = std::sin(theta);
  int sc = cs > 0 ? 1 : (cs < 0 ? -1 : 0);
  double lc = std::log(std::abs(cs)), ls = std::log(sn);
  if (theta == kHalfPi) sc = 0;
  if (sc != 0) {
    SLog cot{sc, lc - ls}, tan{sc, ls - lc};
    c.f = c.a * cot + c.b * tan;
    c.f2 = c.a2 * cot + (-c.b2) * tan;
  }
  c.phi_corr = detail::branch_table(c.f, theta, sb);
  c.psi_corr = -detail::branch_table(c.f2, theta, sb);
  if (sc != 0) {
    c.phi_reduced = detail::reduced_form(c.phi_corr, c.f, -1);
    c.psi_reduced = detail::reduced_form(c.psi_corr, c.f2, 1);
  } else {
    c.phi_reduced = SLog::from(reduce_half_pi(c.phi_corr));
    c.psi_reduced = SLog::from(reduce_half_pi(c.psi_corr));
  }
  return c;
}

// log of the Frobenius norm squared of diag(e^aB, e^-aB) R_theta diag(e^aA, e^-aA)
inline double log_sandwich_N(double alphaA, double alphaB, double theta) {
  double lc = 2 * std::log(std::abs(std::cos(theta)));
  double ls = 2 * std::log(std::abs(std::sin(theta)));
  return log_sum_exp({2 * (alphaA + alphaB) + lc, -2 * (alphaA + alphaB) + lc,
                      2 * (alphaA - alphaB) + ls, 2 * (alphaB - alphaA) + ls});
}

struct ScaledMat {
  Mat2 m;
  double log_scale = 0;
  double log_norm() const { return log_scale + std::log(m.norm()); }
};

namespace detail {

struct Middle {
  std::array<double, 4> l;  // log magnitudes of m11, m12, m21, m22
  std::array<int, 4> s;
  double L = kNegInf;
  int imax = 0;
  Mat2 scaled;
};

inline Middle middle(double alphaA, double alphaB, double theta) {
  Middle M;
  double cs = std::cos(theta), sn = std::sin(theta);
  double lc = cs == 0 ? kNegInf : std::log(std::abs(cs));
  double ls = sn == 0 ? kNegInf : std::log(std::abs(sn));
  int sc = cs > 0 ? 1 : (cs < 0 ? -1 : 0);
  int ss = sn > 0 ? 1 : (sn < 0 ? -1 : 0);
  M.l = {alphaA + alphaB + lc, alphaB - alphaA + ls, alphaA - alphaB + ls, -alphaA - alphaB + lc};
  M.s = {sc, -ss, ss, sc};
  for (int i = 0; i < 4; ++i)
    if (M.s[i] != 0 && M.l[i] > M.L) {
      M.L = M.l[i];
      M.imax = i;
    }
  auto v = [&](int i) { return M.s[i] == 0 ? 0.0 : M.s[i] * std::exp(M.l[i] - M.L); };
  M.scaled = {v(0), v(1), v(2), v(3)};
  return M;
}

}  // namespace detail

struct Composition {
  HyperbolicTriple triple;
  AngleCorrection corr;
  double theta = 0;
  bool sign_flipped = false;
};

// B * A in triple coordinates; throws NonHyperbolic when the product is within threshold of a rotation
inline Composition compose_full(const HyperbolicTriple& B, const HyperbolicTriple& A) {
  double raw = B.phi + A.psi;
  double k = std::floor(raw / kPi);
  double theta = raw - k * kPi;
  if (theta >= kPi) {
    theta -= kPi;
    k += 1;
  }
  if (theta < 0) theta = 0;
  detail::Middle M = detail::middle(A.alpha, B.alpha, theta);
  const Mat2& m = M.scaled;
  double e = (m.a11 + m.a22) / 2, f = (m.a11 - m.a22) / 2;
  double g = (m.a21 + m.a12) / 2, h = (m.a21 - m.a12) / 2;
  double alpha = M.L + std::log(std::hypot(e, h) + std::hypot(f, g));
  double logN = log_sandwich_N(A.alpha, B.alpha, theta);
  if (logN > 10) {
    double t = std::exp(std::log(4.0) - 2 * logN);
    alpha = 0.5 * (logN + std::log1p(-t / (2 * (1 + std::sqrt(1 - t)))));
  }
  if (!(alpha > kHyperbolicityThreshold))
    throw Error(ErrorKind::NonHyperbolic, "product is within threshold of a rotation");

  Composition out;
  out.theta = theta;
  out.corr = angle_correction(A.alpha, B.alpha, theta);
  double u = out.corr.psi_corr, v = -out.corr.phi_corr;
  double s2 = std::exp(-2 * alpha);
  double cu = std::cos(u), su = std::sin(u), cv = std::cos(v), sv = std::sin(v);
  std::array<double, 4> rec = {cu * cv - su * s2 * sv, -cu * sv - su * s2 * cv,
                               su * cv + cu * s2 * sv, -su * sv + cu * s2 * cv};
  double psi = B.psi + u + k * kPi;
  if ((rec[M.imax] > 0) != (M.s[M.imax] > 0)) {
    psi += kPi;
    out.sign_flipped = true;
  }
  out.triple = HyperbolicTriple{psi, alpha, A.phi - out.corr.phi_corr}.normalized();
  return out;
}

inline HyperbolicTriple compose(const HyperbolicTriple& B, const HyperbolicTriple& A) {
  return compose_full(B, A).triple;
}

// dense product B * A rescaled by its largest middle entry (fallback near non-hyperbolicity)
inline ScaledMat dense_product(const HyperbolicTriple& B, const HyperbolicTriple& A) {
  double raw = B.phi + A.psi;
  double k = std::floor(raw / kPi);
  double theta = raw - k * kPi;
  detail::Middle M = detail::middle(A.alpha, B.alpha, theta);
  Mat2 r = rotation(B.psi) * M.scaled * rotation(A.phi);
  if (static_cast<long long>(k) % 2 != 0) r = r.scaled(-1);
  return {r, M.L};
}

enum class ProbeQuantity { Phi, Psi, Norm };

struct ProbeResult {
  double measured = 0;
  double bound_ratio = 0;
  double step = 0;
};

inline ProbeResult derivative_bound_probe(double alphaA, double alphaB, double theta, int order,
                                          ProbeQuantity which) {
  if (order < 0 || order > 2) throw Error(ErrorKind::InvalidParams, "order must be 0, 1 or 2");
  double gap = std::abs(theta - kHalfPi);
  if (gap == 0 || 1 / gap > std::exp(2 * alphaA) / 100)
    throw Error(ErrorKind::InvalidParams, "need |theta - pi/2|^-1 <= e^{2 alpha_A}/100");
  auto red = [](double t) { return wrap(t, 0.0, kPi); };
  double base_alpha = 0;
  if (which == ProbeQuantity::Norm) {
    HyperbolicTriple A{0, alphaA, 0}, B{0, alphaB, red(theta)};
    base_alpha = compose(B, A).alpha;
  }
  auto quantity = [&](double t) -> double {
    t = red(t);
    if (which == ProbeQuantity::Norm) {
      HyperbolicTriple A{0, alphaA, 0}, B{0, alphaB, t};
      return std::exp(compose(B, A).alpha - base_alpha);
    }
    AngleCorrection c = angle_correction(alphaA, alphaB, t);
    return (which == ProbeQuantity::Phi ? c.phi_reduced : c.psi_reduced).value();
  };
  double scale = which == ProbeQuantity::Phi ? std::exp(-2 * alphaA)
                 : which == ProbeQuantity::Psi ? std::exp(-2 * alphaB)
                                               : 1.0;
  ProbeResult out;
  if (order == 0) {
    out.measured = std::abs(quantity(theta));
    out.bound_ratio = out.measured / (scale * std::pow(gap, -1.0));
    return out;
  }
  double h = std::max(1e-6, gap / 100);
  out.step = h;
  if (2 * h >= gap) throw Error(ErrorKind::StepUnderflow, "finite-difference step reaches pi/2");
  double q0 = quantity(theta);
  auto diff = [&](double hh) {
    double qp = quantity(theta + hh), qm = quantity(theta - hh);
    double mag = std::max({std::abs(qp), std::abs(qm), std::abs(q0)});
    double d = order == 1 ? qp - qm : qp - 2 * q0 + qm;
    if (std::abs(d) <= 64 * std::numeric_limits<double>::epsilon() * mag && mag > 0)
      throw Error(ErrorKind::StepUnderflow, "difference below resolution");
    return order == 1 ? d / (2 * hh) : d / (hh * hh);
  };
  double d1 = diff(h), d2 = diff(h / 2);
  double est = (4 * d2 - d1) / 3;
  out.measured = std::abs(est);
  out.bound_ratio = out.measured / (scale * std::pow(gap, -order - 1.0));
  return out;
}

struct ProbeSample {
  double alpha_a = 0, alpha_b = 0, theta = 0, gap = 0;
  double measured = 0, bound_ratio = 0;
};

struct ProbeSweep {
  ProbeQuantity which = ProbeQuantity::Phi;
  int order = 0;
  std::vector<ProbeSample> samples;
  double constant = 0;     // max ratio over the calibration half
  double check_max = 0;    // max ratio over the other half
  std::vector<double> decade_max;  // max ratio per decade of the gap, decades with >= 20 samples
  bool finite = false;
  bool stable() const { return finite && check_max <= 10 * constant; }
};

// alpha_A, alpha_B uniform in [3, 10], gap log-uniform in [max(100 e^{-2 alpha_A}, 1e-5), 1/2], theta = pi/2 +- gap
// (the lower cut keeps the finite-difference step resolvable).
// The first half calibrates the constant, the second half is checked against 10x that constant.
inline ProbeSweep probe_sweep(ProbeQuantity which, int order, int points, std::uint64_t seed) {
  ProbeSweep out;
  out.which = which;
  out.order = order;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0, 1);
  for (int i = 0; i < points; ++i) {
    ProbeSample s;
    s.alpha_a = 3 + 7 * U(rng);
    s.alpha_b = 3 + 7 * U(rng);
    double lo = std::log(std::max(100 * std::exp(-2 * s.alpha_a), 1e-5)), hi = std::log(0.5);
    s.gap = std::exp(lo + (hi - lo) * U(rng));
    s.theta = kHalfPi + (U(rng) < 0.5 ? -s.gap : s.gap);
    ProbeResult r = derivative_bound_probe(s.alpha_a, s.alpha_b, s.theta, order, which);
    s.measured = r.measured;
    s.bound_ratio = r.bound_ratio;
    out.samples.push_back(s);
  }
  out.finite = true;
  int half = points / 2;
  for (int i = 0; i < points; ++i) {
    double v = out.samples[i].bound_ratio;
    if (!std::isfinite(v)) out.finite = false;
    if (i < half) out.constant = std::max(out.constant, v);
    else out.check_max = std::max(out.check_max, v);
  }
  for (int dec = -9; dec < 0; ++dec) {
    double m = 0;
    int n = 0;
    for (const auto& s : out.samples)
      if (std::log10(s.gap) >= dec && std::log10(s.gap) < dec + 1) {
        m = std::max(m, s.bound_ratio);
        ++n;
      }
    if (n >= 20) out.decade_max.push_back(m);
  }
  return out;
}

}  // namespace cclab
