#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdlib>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cclab/error.hpp"
#include "cclab/hermite.hpp"
#include "cclab/jet.hpp"
#include "cclab/mat2.hpp"
#include "cclab/rotation.hpp"

namespace cclab {

inline constexpr int kSmoothInfinite = -1;

enum class PieceKind { PowerCore, ExpCore, HermitePatch, Platform, Background, Spline, Bump };

inline const char* piece_tag(PieceKind k) {
  switch (k) {
    case PieceKind::PowerCore: return "power";
    case PieceKind::ExpCore: return "exp";
    case PieceKind::HermitePatch: return "hermite";
    case PieceKind::Platform: return "platform";
    case PieceKind::Background: return "background";
    case PieceKind::Spline: return "spline";
    case PieceKind::Bump: return "bump";
  }
  return "?";
}

namespace detail {

// s * sgn(y) |y|^m, derivatives 0..order
inline void power_core_derivs(double y, int m, int s, int order, double* out) {
  double ay = std::abs(y);
  int sg = y > 0 ? 1 : (y < 0 ? -1 : 0);
  for (int j = 0; j <= order; ++j) {
    if (j > m) {
      out[j] = 0;
      continue;
    }
    double f = 1;
    for (int i = 0; i < j; ++i) f *= (m - i);
    // f^(j) = s * m!/(m-j)! * sgn(y)^(j+1) |y|^(m-j)
    int e = (j + 1) % 2 == 0 ? 1 : sg;
    double p = (j == m) ? 1.0 : std::pow(ay, m - j);
    out[j] = s * f * e * p;
  }
}

// exp(-t^{-a}) as a jet in t > 0
inline Jet exp_core_jet(const Jet& t, double a) {
  if (t.c[0] <= 0) return Jet::constant(0, t.n);
  return exp(-pow(t, -a));
}

inline Jet psi_mollifier(const Jet& t) {
  if (t.c[0] <= 0) return Jet::constant(0, t.n);
  Jet one = Jet::constant(1, t.n);
  return exp(-(one / t));
}

// smooth step from 0 (t <= 0) to 1 (t >= 1)
inline Jet smooth_step(const Jet& t) {
  if (t.c[0] <= 0) return Jet::constant(0, t.n);
  if (t.c[0] >= 1) return Jet::constant(1, t.n);
  Jet a = psi_mollifier(t);
  Jet b = psi_mollifier(1 - t);
  return a / (a + b);
}

}  // namespace detail

struct Piece {
  PieceKind kind = PieceKind::Platform;
  double lo = 0, hi = 1;  // sub-interval of [0,1)
  double center = 0;      // local coordinate y = x - center
  double offset = 0;      // additive constant
  int sign = 1;
  int l = 1;          // power core degeneracy (core is |y|^{l+1})
  double a = 0;       // exponential core exponent
  double value = 0;   // platform value, blend target
  PieceKind core_kind = PieceKind::PowerCore;  // background blend core
  double t0 = 0, t1 = 0;                        // background blend ramp in |y|
  // window w0 < w1 <= w2 < w3 in y: 0, smooth rise, 1, smooth fall, 0 (Bump, or Spline times window)
  std::array<double, 4> window{0, 0, 0, 0};
  HermitePoly poly;                             // in y
  std::shared_ptr<const HermiteSpline> spline;  // in y

  Jet core_jet(const Jet& y) const {
    double yv = y.c[0];
    if (core_kind == PieceKind::PowerCore) {
      Jet r = Jet::constant(0, y.n);
      double d[Jet::kMax + 1];
      detail::power_core_derivs(yv, l + 1, sign, y.n, d);
      // compose with y (linear in x)
      double f = 1;
      for (int k = 0; k <= y.n; ++k) {
        if (k > 0) f *= k;
        r.c[k] = d[k] / f;
      }
      return r;
    }
    int sg = yv > 0 ? 1 : (yv < 0 ? -1 : 0);
    if (sg == 0) return Jet::constant(0, y.n);
    Jet t = y * static_cast<double>(sg);
    return detail::exp_core_jet(t, a) * static_cast<double>(sign * sg);
  }

  bool windowed() const { return window[3] > window[0]; }
  void set_bump(double hw) { window = {-hw, -hw / 10, hw / 10, hw}; }
  Jet window_jet(const Jet& y) const {
    double v = y.c[0];
    if (v <= window[0] || v >= window[3]) return Jet::constant(0, y.n);
    if (v < window[1]) return detail::smooth_step((y + (-window[0])) * (1 / (window[1] - window[0])));
    if (v > window[2]) return 1 - detail::smooth_step((y + (-window[2])) * (1 / (window[3] - window[2])));
    return Jet::constant(1, y.n);
  }

  // derivatives of order 0..order at x (absolute coordinate)
  void derivs(double x, int order, double* out) const {
    double y = x - center;
    for (int j = 0; j <= order; ++j) out[j] = 0;
    switch (kind) {
      case PieceKind::Platform:
        out[0] = value;
        break;
      case PieceKind::PowerCore:
        detail::power_core_derivs(y, l + 1, sign, order, out);
        break;
      case PieceKind::ExpCore: {
        Jet j = core_jet(Jet::variable(y, order));
        for (int k = 0; k <= order; ++k) out[k] = j.derivative(k);
        break;
      }
      case PieceKind::HermitePatch:
        poly.derivs(y, order, out);
        break;
      case PieceKind::Background: {
        if (!poly.coeffs.empty()) {
          poly.derivs(y, order, out);
          break;
        }
        Jet yj = Jet::variable(y, order);
        Jet core = core_jet(yj);
        int sg = y > 0 ? 1 : -1;
        Jet t = (yj * static_cast<double>(sg) + (-t0)) * (1 / (t1 - t0));
        Jet s = detail::smooth_step(t);
        Jet r = core + s * (value - core);
        for (int k = 0; k <= order; ++k) out[k] = r.derivative(k);
        break;
      }
      case PieceKind::Spline: {
        double d[Jet::kMax + 1];
        double yc = std::clamp(y, spline->lo(), spline->hi());
        spline->derivs(yc, order, d);
        if (windowed()) {
          Jet sj = Jet::constant(0, order);
          double f = 1;
          for (int k = 0; k <= order; ++k) {
            if (k > 0) f *= k;
            sj.c[k] = d[k] / f;
          }
          Jet r = sj * window_jet(Jet::variable(y, order));
          for (int k = 0; k <= order; ++k) out[k] = r.derivative(k);
        } else {
          for (int k = 0; k <= order; ++k) out[k] = d[k];
        }
        break;
      }
      case PieceKind::Bump: {
        Jet r = window_jet(Jet::variable(y, order));
        for (int k = 0; k <= order; ++k) out[k] = r.derivative(k);
        break;
      }
    }
    out[0] += offset;
  }

  double eval(double x) const {
    if (kind == PieceKind::Platform) return value + offset;
    if (kind == PieceKind::PowerCore) {
      double y = x - center;
      double v = std::pow(std::abs(y), l + 1);
      return offset + (y > 0 ? sign * v : (y < 0 ? -sign * v : 0.0));
    }
    if (kind == PieceKind::HermitePatch || (kind == PieceKind::Background && !poly.coeffs.empty()))
      return poly.value(x - center) + offset;
    double d;
    derivs(x, 0, &d);
    return d;
  }
};

struct Layer {
  std::string tag;
  double log_scale = 0;  // layer value = exp(log_scale) * pieces
  std::vector<Piece> pieces;

  double scale() const { return std::exp(log_scale); }
  const Piece& piece_at(double x) const {
    auto it = std::upper_bound(pieces.begin(), pieces.end(), x,
                               [](double v, const Piece& p) { return v < p.lo; });
    std::size_t i = it - pieces.begin();
    return pieces[i == 0 ? 0 : i - 1];
  }
  bool is_zero() const {
    if (scale() == 0) return true;
    for (const auto& p : pieces)
      if (!(p.kind == PieceKind::Platform && p.value + p.offset == 0)) return false;
    return true;
  }
};

struct AngleProfile {
  int degree = 0;
  int l = 1;       // kSmoothInfinite for the C^infinity class
  double a = 0;    // exponent of the smooth class
  int check_order = 4;
  std::vector<Layer> layers;

  int smoothness_order() const { return l == kSmoothInfinite ? check_order : l; }

  void add_layer(Layer layer) {
    layers.push_back(std::move(layer));
    compile();
  }

  // value at x in [0,1)
  double eval01(double x) const {
    auto it = std::upper_bound(cell_lo_.begin(), cell_lo_.end(), x);
    std::size_t i = (it - cell_lo_.begin());
    i = i == 0 ? 0 : i - 1;
    const Cell& c = cells_[i];
    double v = c.constant;
    for (const auto& r : c.refs) v += r.scale * layers[r.layer].pieces[r.piece].eval(x);
    return v;
  }
  // value on the real line with the degree lift
  double operator()(Real x) const {
    Real n = std::floor(x);
    double v = eval01(static_cast<double>(x - n));
    if (degree != 0) v += kTwoPi * degree * static_cast<double>(n);
    return v;
  }
  // true if x lies in a cell where the profile is constant
  bool constant_at(double x, double* value) const {
    auto it = std::upper_bound(cell_lo_.begin(), cell_lo_.end(), x);
    std::size_t i = (it - cell_lo_.begin());
    i = i == 0 ? 0 : i - 1;
    if (!cells_[i].refs.empty()) return false;
    *value = cells_[i].constant;
    return true;
  }

  std::vector<double> derivs(Real x, int order) const {
    Real n = std::floor(x);
    double y = static_cast<double>(x - n);
    std::vector<double> out(order + 1, 0);
    double d[Jet::kMax + 1];
    for (const auto& L : layers) {
      double s = L.scale();
      if (s == 0) continue;
      L.piece_at(y).derivs(y, order, d);
      for (int k = 0; k <= order; ++k) out[k] += s * d[k];
    }
    if (degree != 0) out[0] += kTwoPi * degree * static_cast<double>(n);
    return out;
  }

  std::vector<double> knots() const {
    std::vector<double> k;
    for (const auto& L : layers)
      if (L.scale() != 0)
        for (const auto& p : L.pieces) k.push_back(p.lo);
    k.push_back(1.0);
    std::sort(k.begin(), k.end());
    k.erase(std::unique(k.begin(), k.end()), k.end());
    return k;
  }

  void compile() {
    cell_lo_.clear();
    cells_.clear();
    std::vector<double> k = knots();
    for (std::size_t i = 0; i + 1 < k.size(); ++i) {
      double lo = k[i], hi = k[i + 1];
      double mid = lo + (hi - lo) / 2;
      Cell c;
      for (std::size_t li = 0; li < layers.size(); ++li) {
        const Layer& L = layers[li];
        double s = L.scale();
        if (s == 0) continue;
        const Piece& p = L.piece_at(mid);
        if (p.kind == PieceKind::Platform) {
          c.constant += s * (p.value + p.offset);
        } else {
          std::size_t pi = &p - L.pieces.data();
          c.refs.push_back({li, pi, s});
        }
      }
      cell_lo_.push_back(lo);
      cells_.push_back(std::move(c));
    }
  }

 private:
  struct Ref {
    std::size_t layer, piece;
    double scale;
  };
  struct Cell {
    double constant = 0;
    std::vector<Ref> refs;
  };
  std::vector<double> cell_lo_;
  std::vector<Cell> cells_;
};

enum class Branch { Homotopic, Nonhomotopic };

struct CoreSpec {
  PieceKind kind = PieceKind::PowerCore;
  int l = 1;
  double a = 0.05;
};

namespace detail {

inline Piece core_piece(const CoreSpec& core, double lo, double hi, double center, int sign, double offset) {
  Piece p;
  p.kind = core.kind;
  p.core_kind = core.kind;
  p.lo = lo;
  p.hi = hi;
  p.center = center;
  p.sign = sign;
  p.offset = offset;
  p.l = core.l;
  p.a = core.a;
  return p;
}

inline Piece platform(double lo, double hi, double v) {
  Piece p;
  p.kind = PieceKind::Platform;
  p.lo = lo;
  p.hi = hi;
  p.value = v;
  return p;
}

inline std::vector<double> piece_derivs_at(const Piece& p, double x, int order) {
  std::vector<double> d(order + 1);
  p.derivs(x, order, d.data());
  return d;
}

// ramp between a core edge and a platform, on local y in [y0, y1]
inline Piece ramp(const CoreSpec& core, const Piece& core_piece_ref, double lo, double hi, double center,
                  bool core_on_left, double plateau, int order) {
  Piece p;
  p.kind = PieceKind::Background;
  p.lo = lo;
  p.hi = hi;
  p.center = center;
  double y0 = lo - center, y1 = hi - center;
  if (core.kind == PieceKind::PowerCore) {
    double xe = core_on_left ? lo : hi;
    std::vector<double> cd = piece_derivs_at(core_piece_ref, xe, order);
    std::vector<double> pd(order + 1, 0);
    pd[0] = plateau;
    HermiteSpec s;
    s.left = y0;
    s.right = y1;
    s.left_derivs = core_on_left ? cd : pd;
    s.right_derivs = core_on_left ? pd : cd;
    p.poly = hermite_patch(s, order);
  } else {
    // C^infinity blend of the core into the plateau
    p.core_kind = core.kind;
    p.sign = core_piece_ref.sign;
    p.a = core.a;
    p.l = core.l;
    p.offset = 0;
    p.value = plateau - core_piece_ref.offset;
    p.offset = core_piece_ref.offset;
    p.t0 = std::min(std::abs(y0), std::abs(y1));
    p.t1 = std::max(std::abs(y0), std::abs(y1));
  }
  return p;
}

}  // namespace detail

struct BaseProfile {
  AngleProfile xi;      // the angle function
  AngleProfile target;  // flat target for the boundary angle sum on the cores
  double core_half_width = 0;
  double ramp_end = 0;
  Branch branch = Branch::Homotopic;
};

// Cores at 0 and 1/2 of half-width 1/(2 qN^2); ramps inside 1/qN^2 into platforms at +-pi/2 (mod pi).
inline BaseProfile base_profile(std::int64_t qN, int l, double a, Branch branch) {
  if (qN < 5) throw Error(ErrorKind::InvalidParams, "q_N must be at least 5");
  if (l == kSmoothInfinite) {
    if (!(a > 0 && a < 0.1)) throw Error(ErrorKind::InvalidParams, "smooth class needs a in (0, 1/10)");
  } else if (l < 0) {
    throw Error(ErrorKind::InvalidParams, "l must be >= 0 or infinite");
  }
  CoreSpec core;
  core.kind = l == kSmoothInfinite ? PieceKind::ExpCore : PieceKind::PowerCore;
  core.l = l == kSmoothInfinite ? 0 : l;
  core.a = a;
  int order = l == kSmoothInfinite ? 0 : l;

  double q2 = static_cast<double>(qN) * static_cast<double>(qN);
  double h = 1 / (2 * q2), w = 1 / q2;
  int d = branch == Branch::Homotopic ? 0 : 1;
  int s2 = branch == Branch::Homotopic ? -1 : 1;
  double o2 = branch == Branch::Homotopic ? 0 : kPi;
  double P1 = kHalfPi, P2 = branch == Branch::Homotopic ? -kHalfPi : 3 * kHalfPi;
  double top = kTwoPi * d;

  Piece c0 = detail::core_piece(core, 0, h, 0, 1, 0);
  Piece c1 = detail::core_piece(core, 0.5 - h, 0.5 + h, 0.5, s2, o2);
  Piece c2 = detail::core_piece(core, 1 - h, 1, 1, 1, top);

  Layer L;
  L.tag = "base";
  L.pieces.push_back(c0);
  L.pieces.push_back(detail::ramp(core, c0, h, w, 0, true, P1, order));
  L.pieces.push_back(detail::platform(w, 0.5 - w, P1));
  L.pieces.push_back(detail::ramp(core, c1, 0.5 - w, 0.5 - h, 0.5, false, P1, order));
  L.pieces.push_back(c1);
  L.pieces.push_back(detail::ramp(core, c1, 0.5 + h, 0.5 + w, 0.5, true, P2, order));
  L.pieces.push_back(detail::platform(0.5 + w, 1 - w, P2));
  L.pieces.push_back(detail::ramp(core, c2, 1 - w, 1 - h, 1, false, P2, order));
  L.pieces.push_back(c2);

  BaseProfile bp;
  bp.branch = branch;
  bp.core_half_width = h;
  bp.ramp_end = w;
  bp.xi.degree = d;
  bp.xi.l = l;
  bp.xi.a = a;
  bp.xi.add_layer(L);

  Layer T;
  T.tag = "target";
  T.pieces.push_back(detail::core_piece(core, 0, 0.25, 0, -1, 0));
  T.pieces.push_back(detail::core_piece(core, 0.25, 0.75, 0.5, -s2, 0));
  T.pieces.push_back(detail::core_piece(core, 0.75, 1, 1, -1, 0));
  bp.target.degree = 0;
  bp.target.l = l;
  bp.target.a = a;
  bp.target.add_layer(T);
  return bp;
}

// g = 1 on I/10, smooth transition to 0 at the edge of I, 0 outside I
inline AngleProfile smooth_bump(const ResonanceIntervals& I) {
  double hw = static_cast<double>(I.half_width);
  AngleProfile g;
  g.degree = 0;
  g.l = kSmoothInfinite;
  Layer L;
  L.tag = "bump";
  auto bump = [&](double lo, double hi, double c) {
    Piece p;
    p.kind = PieceKind::Bump;
    p.lo = lo;
    p.hi = hi;
    p.center = c;
    p.set_bump(hw);
    return p;
  };
  L.pieces.push_back(bump(0, hw, 0));
  L.pieces.push_back(detail::platform(hw, 0.5 - hw, 0));
  L.pieces.push_back(bump(0.5 - hw, 0.5 + hw, 0.5));
  L.pieces.push_back(detail::platform(0.5 + hw, 1 - hw, 0));
  L.pieces.push_back(bump(1 - hw, 1, 1));
  g.add_layer(L);
  return g;
}

// max over knots of one-sided mismatches of derivatives 0..order; the k-th derivative is
// measured in units of w^k, w the narrower adjacent piece, relative to max(1, max_j |f^(j)| w^j)
inline double gluing_defect(const AngleProfile& p, int order) {
  double worst = 0;
  std::vector<double> dl(order + 1), dr(order + 1);
  for (const auto& L : p.layers) {
    double s = L.scale();
    if (s == 0) continue;
    std::size_t n = L.pieces.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Piece& left = L.pieces[i];
      const Piece& right = L.pieces[(i + 1) % n];
      double x = left.hi;
      left.derivs(x, order, dl.data());
      double xr = (i + 1 == n) ? 0.0 : x;
      right.derivs(xr, order, dr.data());
      if (i + 1 == n) dr[0] += kTwoPi * p.degree / s;
      double w = std::min(left.hi - left.lo, right.hi - right.lo);
      double m = 1, wk = 1;
      for (int k = 0; k <= order; ++k, wk *= w) m = std::max({m, std::abs(dl[k]) * wk, std::abs(dr[k]) * wk});
      wk = 1;
      for (int k = 0; k <= order; ++k, wk *= w) worst = std::max(worst, std::abs(dl[k] - dr[k]) * wk / m);
    }
  }
  return worst;
}

// C^l distance: max over orders 0..l of sup |(p - q)^(j)| on a grid refined per piece
inline double cl_distance(const AngleProfile& p, const AngleProfile& q, int l, int grid) {
  if (p.degree != q.degree) throw Error(ErrorKind::DegreeMismatch, "profiles have different degree");
  std::vector<double> k = p.knots();
  std::vector<double> kq = q.knots();
  k.insert(k.end(), kq.begin(), kq.end());
  std::sort(k.begin(), k.end());
  k.erase(std::unique(k.begin(), k.end()), k.end());
  double worst = 0;
  for (std::size_t i = 0; i + 1 < k.size(); ++i) {
    double lo = k[i], hi = k[i + 1];
    if (!(hi > lo)) continue;
    for (int j = 0; j < grid; ++j) {
      double x = lo + (hi - lo) * (j + 0.5) / grid;
      std::vector<double> a = p.derivs(x, l), b = q.derivs(x, l);
      for (int o = 0; o <= l; ++o) worst = std::max(worst, std::abs(a[o] - b[o]));
    }
  }
  return worst;
}

// log of the C^l norm of a single layer (exact scale bookkeeping for tiny layers)
inline double layer_cl_log_norm(const Layer& L, int l, int grid) {
  double worst = 0;
  std::vector<double> d(l + 1);
  for (const auto& p : L.pieces) {
    if (p.kind == PieceKind::Platform) {
      worst = std::max(worst, std::abs(p.value + p.offset));
      continue;
    }
    for (int j = 0; j < grid; ++j) {
      double x = p.lo + (p.hi - p.lo) * (j + 0.5) / grid;
      p.derivs(x, l, d.data());
      for (int o = 0; o <= l; ++o) worst = std::max(worst, std::abs(d[o]));
    }
  }
  return worst == 0 ? -std::numeric_limits<double>::infinity() : L.log_scale + std::log(worst);
}

// C^l distance restricted to the complement of a list of arcs (given as [lo, hi) pairs in [0,1))
inline double cl_distance_outside(const AngleProfile& p, const AngleProfile& q, int l, int grid,
                                  const std::vector<std::pair<double, double>>& excluded) {
  if (p.degree != q.degree) throw Error(ErrorKind::DegreeMismatch, "profiles have different degree");
  std::vector<double> k = p.knots();
  std::vector<double> kq = q.knots();
  k.insert(k.end(), kq.begin(), kq.end());
  for (auto& e : excluded) {
    k.push_back(e.first);
    k.push_back(e.second);
  }
  std::sort(k.begin(), k.end());
  k.erase(std::unique(k.begin(), k.end()), k.end());
  double worst = 0;
  for (std::size_t i = 0; i + 1 < k.size(); ++i) {
    double lo = k[i], hi = k[i + 1];
    if (!(hi > lo) || lo < 0 || hi > 1) continue;
    double mid = lo + (hi - lo) / 2;
    bool skip = false;
    for (auto& e : excluded)
      if (mid >= e.first && mid <= e.second) skip = true;
    if (skip) continue;
    for (int j = 0; j < grid; ++j) {
      double x = lo + (hi - lo) * (j + 0.5) / grid;
      std::vector<double> a = p.derivs(x, l), b = q.derivs(x, l);
      for (int o = 0; o <= l; ++o) worst = std::max(worst, std::abs(a[o] - b[o]));
    }
  }
  return worst;
}

// ---------------------------------------------------------------- text format

namespace detail {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double read_num(std::istream& in) {
  std::string s;
  in >> s;
  if (!in) throw Error(ErrorKind::ParseError, "unexpected end of profile");
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  // strtod keeps subnormals that stod rejects
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw Error(ErrorKind::ParseError, "bad number '" + s + "'");
  return v;
}

inline void expect(std::istream& in, const std::string& word) {
  std::string s;
  in >> s;
  if (s != word) throw Error(ErrorKind::ParseError, "expected '" + word + "' got '" + s + "'");
}

inline PieceKind kind_from(const std::string& s) {
  for (PieceKind k : {PieceKind::PowerCore, PieceKind::ExpCore, PieceKind::HermitePatch, PieceKind::Platform,
                      PieceKind::Background, PieceKind::Spline, PieceKind::Bump})
    if (s == piece_tag(k)) return k;
  throw Error(ErrorKind::ParseError, "unknown piece kind '" + s + "'");
}

}  // namespace detail

inline void write_profile(std::ostream& out, const AngleProfile& p) {
  using detail::num;
  out << "cclab-profile 1\n";
  out << "degree " << p.degree << "\n";
  out << "smoothness " << (p.l == kSmoothInfinite ? std::string("inf") : std::to_string(p.l)) << " " << num(p.a)
      << " " << p.check_order << "\n";
  out << "layers " << p.layers.size() << "\n";
  for (const auto& L : p.layers) {
    std::string tag = L.tag.empty() ? "-" : L.tag;
    std::replace_if(tag.begin(), tag.end(), [](unsigned char ch) { return std::isspace(ch); }, '_');
    out << "layer " << tag << " " << num(L.log_scale) << " " << L.pieces.size() << "\n";
    for (const auto& q : L.pieces) {
      out << "piece " << piece_tag(q.kind) << " " << num(q.lo) << " " << num(q.hi) << " " << num(q.center) << " "
          << num(q.offset) << " " << q.sign << " " << q.l << " " << num(q.a) << " " << num(q.value) << " "
          << piece_tag(q.core_kind) << " " << num(q.t0) << " " << num(q.t1) << " " << num(q.window[0]) << " "
          << num(q.window[1]) << " " << num(q.window[2]) << " " << num(q.window[3]);
      out << " poly " << q.poly.coeffs.size();
      if (!q.poly.coeffs.empty()) {
        out << " " << num(q.poly.left) << " " << num(q.poly.right);
        for (double c : q.poly.coeffs) out << " " << num(c);
      }
      if (q.spline) {
        out << " spline " << q.spline->l << " " << q.spline->nodes.size();
        for (std::size_t i = 0; i < q.spline->nodes.size(); ++i) {
          out << " " << num(q.spline->nodes[i]);
          for (double d : q.spline->node_derivs[i]) out << " " << num(d);
        }
      } else {
        out << " spline 0 0";
      }
      out << "\n";
    }
  }
  out << "end\n";
}

inline AngleProfile read_profile(std::istream& in) {
  detail::expect(in, "cclab-profile");
  int version;
  in >> version;
  AngleProfile p;
  detail::expect(in, "degree");
  in >> p.degree;
  detail::expect(in, "smoothness");
  std::string sm;
  in >> sm;
  p.l = sm == "inf" ? kSmoothInfinite : std::stoi(sm);
  p.a = detail::read_num(in);
  in >> p.check_order;
  detail::expect(in, "layers");
  std::size_t nl;
  in >> nl;
  for (std::size_t i = 0; i < nl; ++i) {
    Layer L;
    detail::expect(in, "layer");
    in >> L.tag;
    if (L.tag == "-") L.tag.clear();
    L.log_scale = detail::read_num(in);
    std::size_t np;
    in >> np;
    for (std::size_t j = 0; j < np; ++j) {
      Piece q;
      detail::expect(in, "piece");
      std::string k;
      in >> k;
      q.kind = detail::kind_from(k);
      q.lo = detail::read_num(in);
      q.hi = detail::read_num(in);
      q.center = detail::read_num(in);
      q.offset = detail::read_num(in);
      in >> q.sign >> q.l;
      q.a = detail::read_num(in);
      q.value = detail::read_num(in);
      in >> k;
      q.core_kind = detail::kind_from(k);
      q.t0 = detail::read_num(in);
      q.t1 = detail::read_num(in);
      for (auto& w : q.window) w = detail::read_num(in);
      detail::expect(in, "poly");
      std::size_t nc;
      in >> nc;
      if (nc > 0) {
        q.poly.left = detail::read_num(in);
        q.poly.right = detail::read_num(in);
        q.poly.coeffs.resize(nc);
        for (auto& c : q.poly.coeffs) c = detail::read_num(in);
      }
      detail::expect(in, "spline");
      int sl;
      std::size_t nn;
      in >> sl >> nn;
      if (nn > 0) {
        auto s = std::make_shared<HermiteSpline>();
        s->l = sl;
        s->nodes.resize(nn);
        s->node_derivs.assign(nn, std::vector<double>(sl + 1));
        for (std::size_t t = 0; t < nn; ++t) {
          s->nodes[t] = detail::read_num(in);
          for (auto& d : s->node_derivs[t]) d = detail::read_num(in);
        }
        s->build();
        q.spline = s;
      }
      L.pieces.push_back(std::move(q));
    }
    p.layers.push_back(std::move(L));
  }
  detail::expect(in, "end");
  p.compile();
  return p;
}

inline std::string profile_to_string(const AngleProfile& p) {
  std::ostringstream os;
  write_profile(os, p);
  return os.str();
}

inline AngleProfile profile_from_string(const std::string& s) {
  std::istringstream is(s);
  return read_profile(is);
}

}  // namespace cclab
