#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "cclab/error.hpp"
#include "cclab/mat2.hpp"
#include "cclab/parallel.hpp"
#include "cclab/profiles.hpp"
#include "cclab/rotation.hpp"
#include "cclab/sl2.hpp"

namespace cclab {

enum class CocycleKind { AngleFamily, Schrodinger, Constant };

struct Cocycle {
  RotationNumber omega;
  CocycleKind kind = CocycleKind::Constant;
  double lambda = 1;
  std::shared_ptr<const AngleProfile> xi;
  std::function<double(Real)> potential;
  double energy = 0;
  Mat2 constant{1, 0, 0, 1};
  int degree = 0;

  Mat2 evaluate(Real x) const {
    switch (kind) {
      case CocycleKind::AngleFamily: {
        // Lambda * R_{pi/2 - xi}
        double t = (*xi)(x);
        double s = std::sin(t), co = std::cos(t);
        return {lambda * s, -lambda * co, co / lambda, s / lambda};
      }
      case CocycleKind::Schrodinger:
        return {potential(x) - energy, -1, 1, 0};
      case CocycleKind::Constant:
        return constant;
    }
    return constant;
  }
};

inline Cocycle angle_family(const RotationNumber& w, double lambda, const AngleProfile& xi) {
  if (!(lambda > 1)) throw Error(ErrorKind::InvalidParams, "lambda must exceed 1");
  Cocycle c;
  c.omega = w;
  c.kind = CocycleKind::AngleFamily;
  c.lambda = lambda;
  c.xi = std::make_shared<const AngleProfile>(xi);
  c.degree = xi.degree;
  return c;
}

inline Cocycle schrodinger(const RotationNumber& w, std::function<double(Real)> v, double E) {
  Cocycle c;
  c.omega = w;
  c.kind = CocycleKind::Schrodinger;
  c.potential = std::move(v);
  c.energy = E;
  return c;
}

inline Cocycle constant_cocycle(const RotationNumber& w, const Mat2& m) {
  Cocycle c;
  c.omega = w;
  c.kind = CocycleKind::Constant;
  c.constant = m;
  return c;
}

// Dense 2x2 product with power-of-two rescaling; the scale is carried in log form.
struct Accumulator {
  Mat2 m{1, 0, 0, 1};
  double log_scale = 0;

  void left(const Mat2& f) {
    m = f * m;
    renorm();
  }
  void right(const Mat2& f) {
    m = m * f;
    renorm();
  }
  void renorm() {
    double s = m.max_abs();
    if (s > 0x1p60 || (s < 0x1p-60 && s > 0)) {
      int e;
      std::frexp(s, &e);
      m = m.scaled(std::ldexp(1.0, -e));
      log_scale += e * kLog2;
    }
  }
  double log_norm() const { return log_scale + std::log(m.norm()); }
  HyperbolicTriple triple() const {
    HyperbolicTriple t = decompose_unchecked(m);
    t.alpha += log_scale;
    return t;
  }
  bool hyperbolic() const { return triple().alpha > kHyperbolicityThreshold; }
};

enum class TransferMode { Dense, Triple };

struct BlockRecord {
  std::int64_t index = 0;  // step count at the end of the block
  HyperbolicTriple triple;
};

struct TransferResult {
  Real x = 0;
  std::int64_t n = 0;
  Direction direction = Direction::Forward;
  HyperbolicTriple triple;
  bool hyperbolic = true;
  ScaledMat dense;
  std::vector<BlockRecord> blocks;
};

namespace detail {

// accumulate in triple coordinates via compose, falling back to a dense product
struct TripleAccumulator {
  bool have_triple = false;
  bool identity = true;
  HyperbolicTriple t;
  Accumulator dense;

  void push(const Mat2& f, bool on_left) {
    if (on_left)
      dense.left(f);
    else
      dense.right(f);
    double e = (f.a11 + f.a22) / 2, fm = (f.a11 - f.a22) / 2, g = (f.a21 + f.a12) / 2, h = (f.a21 - f.a12) / 2;
    bool fh = std::log(std::hypot(e, h) + std::hypot(fm, g)) > kHyperbolicityThreshold;
    if (identity) {
      identity = false;
      if (fh) {
        t = decompose(f);
        have_triple = true;
      }
      return;
    }
    if (have_triple && fh) {
      HyperbolicTriple ft = decompose(f);
      try {
        t = on_left ? compose(ft, t) : compose(t, ft);
        return;
      } catch (const Error&) {
      }
    }
    HyperbolicTriple d = dense.triple();
    have_triple = d.alpha > kHyperbolicityThreshold;
    if (have_triple) t = d;
  }
  HyperbolicTriple triple() const { return have_triple ? t : dense.triple(); }
};

}  // namespace detail

// A^n(x) (forward) or A^n(T^{-n}x) (backward)
inline TransferResult transfer(const Cocycle& c, Real x, std::int64_t n, Direction dir,
                               TransferMode mode = TransferMode::Dense) {
  if (n < 1) throw Error(ErrorKind::InvalidParams, "transfer needs n >= 1");
  TransferResult r;
  r.x = x;
  r.n = n;
  r.direction = dir;
  OrbitWalker walk(c.omega, x, dir);
  Accumulator acc;
  detail::TripleAccumulator tacc;
  Real y = frac(x);
  for (std::int64_t j = 0; j < n; ++j) {
    if (dir == Direction::Backward) y = walk.next();
    Mat2 f = c.evaluate(y);
    if (mode == TransferMode::Dense) {
      if (dir == Direction::Forward)
        acc.left(f);
      else
        acc.right(f);
    } else {
      tacc.push(f, dir == Direction::Forward);
    }
    if (dir == Direction::Forward) y = walk.next();
  }
  if (mode == TransferMode::Triple) acc = tacc.dense;
  r.dense = {acc.m, acc.log_scale};
  r.triple = mode == TransferMode::Dense ? acc.triple() : tacc.triple();
  r.hyperbolic = r.triple.alpha > kHyperbolicityThreshold;
  return r;
}

// Forward walk from x until the first return to `stop`, closing a sub-block at every visit to `split`.
// Backward walks include the factor at the landing point; forward walks stop before it.
struct BlockWalk {
  std::int64_t length = 0;
  Real landing = 0;
  std::vector<BlockRecord> blocks;
  HyperbolicTriple total;  // dense product of the whole walk
};

inline BlockWalk walk_blocks(const Cocycle& c, Real x, Direction dir, const ResonanceIntervals& stop,
                             const ResonanceIntervals* split, std::int64_t cap = 0) {
  if (cap <= 0) cap = default_cap(c.omega, stop);
  BlockWalk out;
  OrbitWalker walk(c.omega, x, dir);
  Accumulator block, whole;
  Real y = frac(x);
  const Real hs = stop.half_width;
  const Real hp = split ? split->half_width : hs;
  for (std::int64_t j = 1; j <= cap; ++j) {
    if (dir == Direction::Forward) {
      Mat2 f = c.evaluate(y);
      block.left(f);
      whole.left(f);
      y = walk.next();
    } else {
      y = walk.next();
      Mat2 f = c.evaluate(y);
      block.right(f);
      whole.right(f);
    }
    Real d0 = std::min(y, 1 - y), d1 = std::abs(y - 0.5L);
    bool in_stop = d0 <= hs || d1 <= hs;
    bool in_split = in_stop || d0 <= hp || d1 <= hp;
    if (in_split) {
      out.blocks.push_back({j, block.triple()});
      block = Accumulator{};
    }
    if (in_stop) {
      out.length = j;
      out.landing = y;
      out.total = whole.triple();
      return out;
    }
  }
  throw Error(ErrorKind::CapExceeded, "no return within " + std::to_string(cap) + " steps");
}

// psi_{A,-r^-}(x) + phi_{A,r^+}(x) - pi/2 reduced into (-pi/2, pi/2]
inline double boundary_angle_sum(const Cocycle& c, Real x, std::int64_t r_plus, std::int64_t r_minus) {
  TransferResult f = transfer(c, x, r_plus, Direction::Forward);
  TransferResult b = transfer(c, x, r_minus, Direction::Backward);
  if (!f.hyperbolic || !b.hyperbolic) throw Error(ErrorKind::NonHyperbolic, "boundary block is not hyperbolic");
  return reduce_half_pi(b.triple.psi + f.triple.phi - kHalfPi);
}

// Boundary data of x at a level, with the change relative to the coarser level computed from
// block compositions in the log domain.
struct BoundaryData {
  Real x = 0;
  std::int64_t r_plus = 0, r_minus = 0;
  double sum = 0;           // psi + phi - pi/2 reduced
  double log_norm_fwd = 0;  // log ||A^{r+}(x)||
  double log_norm_bwd = 0;
  SLog defect;              // sum at this level minus sum at the split level
  std::size_t blocks_fwd = 0, blocks_bwd = 0;
};

inline BoundaryData boundary_data(const Cocycle& c, Real x, const ResonanceIntervals& level,
                                  const ResonanceIntervals* coarser) {
  BoundaryData d;
  d.x = x;
  BlockWalk fw = walk_blocks(c, x, Direction::Forward, level, coarser);
  BlockWalk bw = walk_blocks(c, x, Direction::Backward, level, coarser);
  d.r_plus = fw.length;
  d.r_minus = bw.length;
  d.blocks_fwd = fw.blocks.size();
  d.blocks_bwd = bw.blocks.size();
  d.sum = reduce_half_pi(bw.total.psi + fw.total.phi - kHalfPi);
  d.log_norm_fwd = fw.total.alpha;
  d.log_norm_bwd = bw.total.alpha;
  SLog acc;
  HyperbolicTriple t = fw.blocks.front().triple;
  for (std::size_t j = 1; j < fw.blocks.size(); ++j) {
    Composition comp = compose_full(fw.blocks[j].triple, t);
    acc = acc + (-comp.corr.phi_reduced);
    t = comp.triple;
  }
  HyperbolicTriple u = bw.blocks.front().triple;
  for (std::size_t j = 1; j < bw.blocks.size(); ++j) {
    Composition comp = compose_full(u, bw.blocks[j].triple);
    acc = acc + comp.corr.psi_reduced;
    u = comp.triple;
  }
  d.defect = acc;
  return d;
}

struct FiniteLeEstimate {
  std::int64_t n = 0;  // fixed n, or 0 in return-time mode
  int grid_size = 0;
  double value = 0;
  double log_mu_lower = 0, log_mu_upper = 0;
  double mu_lower() const { return std::exp(log_mu_lower); }
  double mu_upper() const { return std::exp(log_mu_upper); }
};

namespace detail {

inline FiniteLeEstimate summarize(const std::vector<double>& rates, std::int64_t n) {
  FiniteLeEstimate e;
  e.n = n;
  e.grid_size = static_cast<int>(rates.size());
  double s = 0, lo = rates.front(), hi = rates.front();
  for (double v : rates) {
    s += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  e.value = s / static_cast<double>(rates.size());
  e.log_mu_lower = lo;
  e.log_mu_upper = hi;
  return e;
}

}  // namespace detail

// midpoint rule for (1/n) log ||A^n(x)|| over [lo, hi) (the whole circle by default)
inline FiniteLeEstimate finite_le(const Cocycle& c, std::int64_t n, int grid,
                                  std::optional<std::pair<Real, Real>> restrict = std::nullopt, int threads = 1) {
  if (grid < 64) throw Error(ErrorKind::InvalidParams, "finite_le needs grid >= 64");
  Real lo = restrict ? restrict->first : 0, hi = restrict ? restrict->second : 1;
  std::vector<double> rates(grid);
  parallel_for(grid, threads, [&](std::size_t i) {
    Real x = lo + (hi - lo) * (static_cast<Real>(i) + 0.5L) / grid;
    rates[i] = transfer(c, x, n, Direction::Forward).dense.log_norm() / static_cast<double>(n);
  });
  return detail::summarize(rates, n);
}

// per-point return-time mode: rates (1/r(x)) log ||A^{r(x)}(x)|| on midpoint grids of both arcs of I
inline FiniteLeEstimate finite_le_returns(const Cocycle& c, const ResonanceIntervals& I, int grid, int threads = 1,
                                          std::vector<double>* per_point = nullptr) {
  if (grid < 2) throw Error(ErrorKind::InvalidParams, "return-time grid needs >= 2 points");
  int half = grid / 2;
  std::vector<double> rates(2 * half);
  const Real hw = I.half_width;
  parallel_for(rates.size(), threads, [&](std::size_t i) {
    int comp = static_cast<int>(i) / half, j = static_cast<int>(i) % half;
    Real x = frac(I.center(comp) - hw + 2 * hw * (static_cast<Real>(j) + 0.5L) / half);
    BlockWalk w = walk_blocks(c, x, Direction::Forward, I, nullptr);
    rates[i] = w.total.alpha / static_cast<double>(w.length);
  });
  if (per_point) *per_point = rates;
  return detail::summarize(rates, 0);
}

}  // namespace cclab
