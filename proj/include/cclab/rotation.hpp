#pragma once

#include <cfloat>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cclab/error.hpp"

namespace cclab {

using Real = long double;  // circle points and frequencies

inline Real frac(Real x) {
  Real r = x - std::floor(x);
  if (r >= 1) r -= 1;
  if (r < 0) r += 1;
  return r;
}

// signed representative of x in [-1/2, 1/2)
inline Real centered(Real x) {
  Real r = frac(x + 0.5L) - 0.5L;
  return r;
}

struct RotationNumber {
  Real value = 0;
  std::vector<std::int64_t> partial_quotients;  // a_1..a_m
  std::vector<std::int64_t> p;                  // p_0..p_m
  std::vector<std::int64_t> q;                  // q_0..q_m, q_0 = 1
  bool terminated = false;
  double bounded_type_M = 1;
  std::string label;

  int depth() const { return static_cast<int>(partial_quotients.size()); }
  // q_1..q_m
  std::vector<std::int64_t> denominators() const {
    return std::vector<std::int64_t>(q.begin() + 1, q.end());
  }
  // convergent index k with q_k == qk, or -1
  int index_of(std::int64_t qk) const {
    for (std::size_t k = 0; k < q.size(); ++k)
      if (q[k] == qk) return static_cast<int>(k);
    return -1;
  }
  std::int64_t next_denominator(std::int64_t qk) const {
    for (std::size_t k = 0; k + 1 < q.size(); ++k)
      if (q[k] == qk) return q[k + 1];
    return static_cast<std::int64_t>(std::ceil(bounded_type_M * static_cast<double>(qk)));
  }

  // reference convergent used for n*omega mod 1
  int ref_index() const {
    int k = static_cast<int>(q.size()) - 1;
    while (k > 0 && q[k] > (std::int64_t(1) << 40)) --k;
    return k;
  }

  // n*omega mod 1 from the convergent p/q plus the small remainder n*(omega - p/q)
  Real shift(std::int64_t n) const {
    int k = ref_index();
    std::int64_t pk = p[k], qk = q[k];
    __int128 m = (static_cast<__int128>(n) * pk) % qk;
    if (m < 0) m += qk;
    Real eps = value - static_cast<Real>(pk) / static_cast<Real>(qk);
    return frac(static_cast<Real>(static_cast<std::int64_t>(m)) / static_cast<Real>(qk) +
                static_cast<Real>(n) * eps);
  }
  Real orbit(Real x, std::int64_t n) const { return frac(x + shift(n)); }
};

namespace detail {
inline void fill_convergents(RotationNumber& r) {
  std::int64_t pm1 = 1, qm1 = 0, p0 = 0, q0 = 1;
  r.p = {0};
  r.q = {1};
  for (std::int64_t a : r.partial_quotients) {
    std::int64_t pn = a * p0 + pm1, qn = a * q0 + qm1;
    pm1 = p0;
    qm1 = q0;
    p0 = pn;
    q0 = qn;
    r.p.push_back(pn);
    r.q.push_back(qn);
  }
  r.bounded_type_M = 1;
  for (std::size_t k = 0; k + 1 < r.q.size(); ++k)
    r.bounded_type_M = std::max(r.bounded_type_M, double(r.q[k + 1]) / double(r.q[k]));
}
}  // namespace detail

inline RotationNumber continued_fraction(Real value, int depth, bool require_irrational = false) {
  if (!(value > 0 && value < 1)) throw Error(ErrorKind::InvalidParams, "rotation number must lie in (0,1)");
  if (depth < 1) throw Error(ErrorKind::InvalidParams, "depth must be positive");
  RotationNumber r;
  r.value = value;
  Real x = value;
  const Real tol = 64 * LDBL_EPSILON;
  for (int k = 0; k < depth; ++k) {
    Real inv = 1 / x;
    Real a = std::floor(inv + tol * inv);
    if (a < 1) a = 1;
    r.partial_quotients.push_back(static_cast<std::int64_t>(a));
    x = inv - a;
    if (x < tol * inv * inv) {
      r.terminated = k + 1 < depth;
      break;
    }
    if (a > 1e15L) break;
  }
  detail::fill_convergents(r);
  if (r.terminated && require_irrational)
    throw Error(ErrorKind::NonIrrational, "expansion terminated after " + std::to_string(r.depth()) + " terms");
  return r;
}

inline RotationNumber from_quotients(Real value, std::vector<std::int64_t> a, std::string label) {
  RotationNumber r;
  r.value = value;
  r.partial_quotients = std::move(a);
  r.label = std::move(label);
  detail::fill_convergents(r);
  return r;
}

inline RotationNumber golden(int depth = 40) {
  return from_quotients((std::sqrt(5.0L) - 1) / 2, std::vector<std::int64_t>(depth, 1), "golden");
}

inline RotationNumber sqrt2m1(int depth = 30) {
  return from_quotients(std::sqrt(2.0L) - 1, std::vector<std::int64_t>(depth, 2), "sqrt2m1");
}

// "golden", "sqrt2m1" or a decimal literal in (0,1)
inline RotationNumber parse_omega(const std::string& s, int depth = 40, bool require_irrational = true) {
  if (s == "golden") return golden(depth);
  if (s == "sqrt2m1") return sqrt2m1(depth);
  std::size_t pos = 0;
  Real v = 0;
  try {
    v = std::stold(s, &pos);
  } catch (...) {
    throw Error(ErrorKind::ParseError, "cannot parse omega '" + s + "'");
  }
  if (pos != s.size()) throw Error(ErrorKind::ParseError, "cannot parse omega '" + s + "'");
  RotationNumber r = continued_fraction(v, depth, false);
  r.label = s;
  if (require_irrational && r.terminated && r.depth() < 8)
    throw Error(ErrorKind::NonIrrational, "omega '" + s + "' is rational with a short expansion");
  return r;
}

struct ResonanceIntervals {
  std::int64_t q = 1;
  double C = 1;
  Real half_width = 0;

  Real measure() const { return 4 * half_width; }
  // 0 for the arc at 0, 1 for the arc at 1/2, -1 if outside
  int component(Real x) const {
    Real y = frac(x);
    Real d0 = std::min(y, 1 - y);
    if (d0 <= half_width) return 0;
    if (std::abs(y - 0.5L) <= half_width) return 1;
    return -1;
  }
  bool contains(Real x) const { return component(x) >= 0; }
  // signed offset from the nearest center (valid when contains(x))
  Real offset(Real x) const {
    Real y = frac(x);
    if (std::abs(y - 0.5L) <= 0.25L) return y - 0.5L;
    return centered(y);
  }
  Real center(int comp) const { return comp == 0 ? 0.0L : 0.5L; }
  ResonanceIntervals shrunk(double factor) const {
    ResonanceIntervals r = *this;
    r.C = C * factor;
    r.half_width = half_width / factor;
    return r;
  }
};

inline ResonanceIntervals resonance_intervals(std::int64_t qk, double C = 1) {
  if (qk < 1 || C < 1) throw Error(ErrorKind::InvalidParams, "need q >= 1 and C >= 1");
  ResonanceIntervals r;
  r.q = qk;
  r.C = C;
  r.half_width = 1.0L / (static_cast<Real>(C) * static_cast<Real>(qk) * static_cast<Real>(qk));
  if (r.half_width >= 0.25L) throw Error(ErrorKind::OverlapError, "arcs of half-width >= 1/4 overlap");
  return r;
}

enum class Direction { Forward, Backward };

// Iterates T^n x for n = 1, 2, ... with the integer part of n*p_K mod q_K kept exactly.
class OrbitWalker {
 public:
  OrbitWalker(const RotationNumber& w, Real x, Direction dir) : x0_(x) {
    int k = w.ref_index();
    p_ = w.p[k];
    q_ = w.q[k];
    eps_ = w.value - static_cast<Real>(p_) / static_cast<Real>(q_);
    if (dir == Direction::Backward) {
      p_ = q_ - (p_ % q_);
      if (p_ == q_) p_ = 0;
      eps_ = -eps_;
    }
    inv_q_ = 1.0L / static_cast<Real>(q_);
  }
  // advance one step and return the new point
  Real next() {
    ++n_;
    m_ += p_;
    if (m_ >= q_) m_ -= q_;
    return frac(x0_ + static_cast<Real>(m_) * inv_q_ + static_cast<Real>(n_) * eps_);
  }
  std::int64_t steps() const { return n_; }

 private:
  Real x0_;
  std::int64_t p_ = 0, q_ = 1, m_ = 0, n_ = 0;
  Real eps_ = 0, inv_q_ = 1;
};

struct FirstReturn {
  std::int64_t time = 0;
  Real landing = 0;
};

struct ReturnRecord {
  Real x = 0;
  std::int64_t forward_time = 0;
  std::int64_t backward_time = 0;
  Real forward_landing = 0;
  Real backward_landing = 0;
  std::vector<std::int64_t> intermediate;  // visits to a coarser interval, forward
};

inline std::int64_t default_cap(const RotationNumber& w, const ResonanceIntervals& I) {
  double qn = static_cast<double>(w.next_denominator(I.q));
  double c = 10.0 * qn * qn * std::max(1.0, I.C);
  return static_cast<std::int64_t>(std::min(c, 4e12));
}

inline FirstReturn first_return(const RotationNumber& w, const ResonanceIntervals& I, Real x,
                                Direction dir, std::int64_t cap = 0) {
  if (cap <= 0) cap = default_cap(w, I);
  OrbitWalker walk(w, x, dir);
  const Real hw = I.half_width;
  for (std::int64_t n = 1; n <= cap; ++n) {
    Real y = walk.next();
    if (y <= hw || y >= 1 - hw || std::abs(y - 0.5L) <= hw) return {n, y};
  }
  throw Error(ErrorKind::CapExceeded, "no return within " + std::to_string(cap) + " steps");
}

inline ReturnRecord return_record(const RotationNumber& w, const ResonanceIntervals& I, Real x,
                                  std::int64_t cap = 0) {
  ReturnRecord r;
  r.x = x;
  FirstReturn f = first_return(w, I, x, Direction::Forward, cap);
  FirstReturn b = first_return(w, I, x, Direction::Backward, cap);
  r.forward_time = f.time;
  r.forward_landing = f.landing;
  r.backward_time = b.time;
  r.backward_landing = b.landing;
  return r;
}

// Return record to I together with the visit times to a coarser J before the return.
inline ReturnRecord return_chain(const RotationNumber& w, const ResonanceIntervals& I,
                                 const ResonanceIntervals& J, Real x, std::int64_t cap = 0) {
  ReturnRecord r = return_record(w, I, x, cap);
  OrbitWalker walk(w, x, Direction::Forward);
  for (std::int64_t n = 1; n < r.forward_time; ++n) {
    Real y = walk.next();
    if (J.contains(y)) r.intermediate.push_back(n);
  }
  return r;
}

// single-arc first return (used for the 1/10 arc around 0)
inline std::int64_t first_return_single_arc(const RotationNumber& w, Real half_width, Real x,
                                            std::int64_t cap) {
  OrbitWalker walk(w, x, Direction::Forward);
  for (std::int64_t n = 1; n <= cap; ++n) {
    Real y = walk.next();
    if (y <= half_width || y >= 1 - half_width) return n;
  }
  throw Error(ErrorKind::CapExceeded, "no return within " + std::to_string(cap) + " steps");
}

// sample points across an arc [c - hw, c + hw], endpoints included
inline std::vector<Real> arc_grid(Real center, Real hw, int n) {
  std::vector<Real> out;
  if (n <= 1) {
    out.push_back(frac(center));
    return out;
  }
  for (int j = 0; j < n; ++j)
    out.push_back(frac(center - hw + 2 * hw * static_cast<Real>(j) / static_cast<Real>(n - 1)));
  return out;
}

struct RatioStats {
  std::int64_t min_r = 0;
  std::int64_t max_r_tenth = 0;
  double ratio = 0;
  int k1 = 0;  // smallest k with M^{-k} <= ratio
};

inline RatioStats return_ratio_stats(const RotationNumber& w, const ResonanceIntervals& I, int grid) {
  if (grid < 1) throw Error(ErrorKind::InvalidParams, "grid must be positive");
  RatioStats s;
  std::int64_t cap = default_cap(w, I);
  s.min_r = INT64_MAX;
  for (int comp = 0; comp < 2; ++comp) {
    for (Real x : arc_grid(I.center(comp), I.half_width, grid)) {
      s.min_r = std::min(s.min_r, first_return(w, I, x, Direction::Forward, cap).time);
      if (grid == 1) break;
    }
    if (grid == 1) break;
  }
  Real hw10 = I.half_width / 10;
  std::int64_t cap10 = cap * 100;
  s.max_r_tenth = 0;
  for (Real x : arc_grid(0, hw10, grid))
    s.max_r_tenth = std::max(s.max_r_tenth, first_return_single_arc(w, hw10, x, cap10));
  s.ratio = static_cast<double>(s.min_r) / static_cast<double>(s.max_r_tenth);
  double M = w.bounded_type_M;
  if (M > 1) {
    int k = 0;
    while (std::pow(M, -k) > s.ratio && k < 200) ++k;
    s.k1 = k;
  }
  return s;
}

// Convergent levels used by the construction: starting at qN, keep only levels with q_k >= 2 q_prev.
inline std::vector<std::int64_t> level_ladder(const RotationNumber& w, std::int64_t qN, std::int64_t qmax) {
  std::vector<std::int64_t> out;
  int start = w.index_of(qN);
  if (start < 0) throw Error(ErrorKind::InvalidParams, "q_N=" + std::to_string(qN) + " is not a convergent denominator");
  out.push_back(qN);
  for (std::size_t k = start + 1; k < w.q.size(); ++k) {
    if (w.q[k] > qmax) break;
    if (w.q[k] >= 2 * out.back()) out.push_back(w.q[k]);
  }
  return out;
}

}  // namespace cclab
