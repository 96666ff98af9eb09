#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cclab/cocycle.hpp"
#include "cclab/construct.hpp"
#include "cclab/error.hpp"
#include "cclab/hermite.hpp"
#include "cclab/parallel.hpp"
#include "cclab/profiles.hpp"
#include "cclab/rotation.hpp"

namespace cclab {

struct DestructParams {
  int steps = 1;
  double delta0 = 0;        // 0: min(1/(100 l^2), M^{-k1}/10)
  int samples = 64;         // growth samples per component
  int ratio_grid = 256;     // return_ratio_stats grid
  int platform_nodes = 256; // samples of the boundary sum on [c~, d]
  int sub_grid = 0;         // defect nodes in the sub-iterations, 0: construction grid
  int verify_samples = 0;   // 0: construction value
  bool strict = true;       // NonHyperbolic when a sub-level misses its nu floor
};

struct PlatformGeometry {
  std::int64_t q_prev = 0;
  double log_inv_c = 0;  // log(1/c)
  double c = 0, c_tilde = 0, d = 0, b = 0;
  double height = 0;     // |platform value|: 2|c|^{l+1}, smooth e^{-|c|^{-a}}
  bool ordered() const { return 0 < c && c < c_tilde && c_tilde < d && d < b; }
};

struct GrowthBounds {
  std::int64_t q = 0;
  int samples = 0;
  double log_mu_lower = 0, log_mu_upper = 0;  // min / max of (1/r) log ||A^r(x)||
  std::int64_t r_min = 0, r_max = 0;
};

struct DecayRow {
  int step = 0;
  std::int64_t n_prev = 0, n = 0;
  double log_mu_lower_prev = 0, log_mu_upper_prev = 0;
  double log_mu_lower = 0, log_mu_upper = 0;
  double rho = 0;                  // measured min r / max r at the previous level
  double log_bound_mechanism = 0;  // log mu_up_prev - 2 l rho delta0 (1 + 0.2) log mu_low_prev
  double log_bound_k1 = 0;         // log mu_up_prev - 2 l M^{-k1} delta0 log mu_low_prev
  double log_bound_delta2 = 0;     // (1 - delta2) log mu_up_prev
  double log_lower_floor = 0;      // (1 - delta1)^i log mu
  bool strict_decay = false, mechanism_ok = false, k1_ok = false, delta2_ok = false;
  bool comparable = false;         // mu_up <= mu_low^2
  bool lower_ok = false;
  bool pass() const { return strict_decay && mechanism_ok && comparable; }
};

struct DestructionState {
  ConstructParams params;
  DestructParams dparams;
  int step = 0;
  AngleProfile theta;
  AngleProfile target;
  std::int64_t n = 0;  // current level q_{n_i}
  double log_mu = 0;   // mu = lambda^{1-eps}
  double delta0 = 0, delta1 = 0, delta2 = 0;
  int k1 = 0;
  double M = 2;
  RatioStats ratio;    // at the current level
  GrowthBounds bounds; // at the current level
  PlatformGeometry geometry;
  std::vector<double> log_nu;
  std::vector<std::int64_t> sub_levels;
  std::vector<VerifyReport> sub_reports;
  std::vector<Increment> sub_increments;
  double platform_residual = 0;       // max |sum - platform| on [c~, d] after the surgery, level n_{i-1}
  double log_platform_cl = kNegInf;   // log |e_i|_{C^l}
  double log_increment_cl = kNegInf;  // log of the C^l norm bound of theta_i - theta_{i-1}
  double log_increment_bound = 0;     // log of the (P_i)(5) expression
  VerifyReport final_report;          // flatness at n_i
  std::vector<DecayRow> decay;
};

inline GrowthBounds measure_growth_bounds(const Cocycle& c, const ResonanceIntervals& I, int samples,
                                          int threads = 1) {
  if (samples < 1) throw Error(ErrorKind::InvalidParams, "need at least one sample per component");
  GrowthBounds g;
  g.q = I.q;
  g.samples = 2 * samples;
  std::vector<double> rate(2 * samples);
  std::vector<std::int64_t> r(2 * samples);
  const Real hw = I.half_width;
  parallel_for(rate.size(), threads, [&](std::size_t i) {
    int comp = static_cast<int>(i) / samples, j = static_cast<int>(i) % samples;
    Real x = frac(I.center(comp) - hw + 2 * hw * (static_cast<Real>(j) + 0.5L) / samples);
    BlockWalk w = walk_blocks(c, x, Direction::Forward, I, nullptr);
    rate[i] = w.total.alpha / static_cast<double>(w.length);
    r[i] = w.length;
  });
  g.log_mu_lower = *std::min_element(rate.begin(), rate.end());
  g.log_mu_upper = *std::max_element(rate.begin(), rate.end());
  g.r_min = *std::min_element(r.begin(), r.end());
  g.r_max = *std::max_element(r.begin(), r.end());
  return g;
}

// nu_j = nu_0^{1 - 2 (l+1) delta0 (1 + 2^{-1/2} + ... + 2^{-(j-1)/2})}, in logs
inline std::vector<double> nu_ladder(double log_nu0, double delta0, int l, int count) {
  std::vector<double> out;
  double s = 0;
  for (int j = 0; j < count; ++j) {
    out.push_back(log_nu0 * (1 - 2.0 * (l + 1) * delta0 * s));
    s += std::pow(std::sqrt(2.0), -j);
  }
  return out;
}

inline DestructionState init_destruction(const ConstructionState& A, const DestructParams& dp = {}) {
  if (A.level_index < 0) throw Error(ErrorKind::InvalidParams, "construction has not run");
  DestructionState s;
  s.params = A.params;
  s.dparams = dp;
  s.theta = A.xi;
  s.target = A.target;
  s.n = A.q();
  const int l = A.params.l == kSmoothInfinite ? 1 : A.params.l;
  s.log_mu = (1 - A.params.eps) * std::log(A.params.lambda);
  s.M = std::max(2.0, A.params.omega.bounded_type_M);
  ResonanceIntervals I = resonance_intervals(s.n);
  s.ratio = return_ratio_stats(A.params.omega, I, dp.ratio_grid);
  s.k1 = s.ratio.k1;
  double mk = std::pow(s.M, -s.k1);
  s.delta0 = dp.delta0 > 0 ? dp.delta0 : std::min(1.0 / (100.0 * l * l), mk / 10);
  s.delta1 = 8 * s.delta0 * l;
  s.delta2 = mk * s.delta0 * l;
  if (!(s.delta1 > s.delta2 && s.delta2 > 0)) throw Error(ErrorKind::InvalidParams, "need delta1 > delta2 > 0");
  s.bounds = measure_growth_bounds(A.cocycle(), I, dp.samples, A.params.threads);
  return s;
}

inline Cocycle destruction_cocycle(const DestructionState& s) { return angle_family(s.params.omega, s.params.lambda, s.theta); }

// c from log(1/c) = 2 delta0 r log mu_low (finite l), |c| = (2 delta0 r log mu_low)^{-1/a} (smooth)
inline PlatformGeometry platform_geometry(const DestructionState& s) {
  PlatformGeometry g;
  g.q_prev = s.n;
  const bool smooth = s.params.l == kSmoothInfinite;
  double t = 2 * s.delta0 * static_cast<double>(s.bounds.r_min) * s.bounds.log_mu_lower;
  if (!(t > 0)) throw Error(ErrorKind::GeometryError, "non-positive growth at the previous level");
  g.log_inv_c = smooth ? std::log(t) / s.params.a : t;
  g.c = std::exp(-g.log_inv_c);
  g.c_tilde = s.M * s.M * g.c;
  double q2 = static_cast<double>(s.n) * static_cast<double>(s.n);
  g.d = 1 / (2 * q2);
  g.b = 1 / q2;
  g.height = smooth ? std::exp(-std::pow(g.c, -s.params.a)) : 2 * std::pow(g.c, s.params.l + 1);
  if (!g.ordered()) {
    std::ostringstream os;
    os << "platform ordering fails: c=" << g.c << " c~=" << g.c_tilde << " d=" << g.d << " b=" << g.b;
    throw Error(ErrorKind::GeometryError, os.str());
  }
  return g;
}

// First ladder level q after the current one with (1-delta1)^i q log mu > 2 log q > 2 delta0 r log lambda
// and |I_q| < c.
inline std::int64_t choose_next_level(const DestructionState& s, const PlatformGeometry& g) {
  std::vector<std::int64_t> ladder = level_ladder(s.params.omega, s.n, s.params.qmax);
  double lf = std::pow(1 - s.delta1, s.step + 1);
  double rhs = 2 * s.delta0 * static_cast<double>(s.bounds.r_min) * std::log(s.params.lambda);
  for (std::size_t k = 1; k < ladder.size(); ++k) {
    double q = static_cast<double>(ladder[k]);
    double lq = 2 * std::log(q);
    if (lf * q * s.log_mu > lq && lq > rhs && resonance_intervals(ladder[k]).measure() < g.c) return ladder[k];
  }
  std::ostringstream os;
  os << "no convergent level up to " << ladder.back() << " satisfies |I_n| < c=" << g.c << " and q^2 > lambda^{2 delta0 r}";
  throw Error(ErrorKind::GeometryError, os.str());
}

struct PlatformSurgery {
  PlatformGeometry geometry;
  Layer e;             // added to theta
  Layer e_negated;     // added to the target
  std::array<double, 2> platform_value{0, 0};  // signed platform per component
};

namespace detail {

inline Layer platform_layer(const PlatformGeometry& g, const std::array<std::shared_ptr<HermiteSpline>, 2>& sp,
                            int l, bool smooth, double sign,
                            const std::string& tag) {
  Layer L;
  L.tag = tag;
  auto zero = [](double lo, double hi) { return platform(lo, hi, 0); };
  auto scaled = [&](int comp) {
    if (sign > 0) return std::shared_ptr<const HermiteSpline>(sp[comp]);
    auto h = std::make_shared<HermiteSpline>(*sp[comp]);
    for (auto& nd : h->node_derivs)
      for (auto& v : nd) v = -v;
    h->build();
    return std::shared_ptr<const HermiteSpline>(h);
  };
  for (int comp = 0; comp < 2; ++comp) {
    double o = comp == 0 ? 0.0 : 0.5;
    auto s = scaled(comp);
    if (smooth) {
      Piece p = spline_piece(s, o + g.c, o + g.b, o, 0);
      p.window = {g.c, g.c_tilde, g.d, g.b};
      L.pieces.push_back(zero(o, o + g.c));
      L.pieces.push_back(p);
    } else {
      std::vector<double> zeros(l + 1, 0.0);
      std::vector<double> lo = s->node_derivs.front(), hi = s->node_derivs.back();
      HermitePoly left = patch_or_throw({g.c, g.c_tilde, zeros, lo}, l);
      HermitePoly right = patch_or_throw({g.d, g.b, hi, zeros}, l);
      L.pieces.push_back(zero(o, o + g.c));
      L.pieces.push_back(poly_piece(left, o + g.c, o + g.c_tilde, o));
      L.pieces.push_back(spline_piece(s, o + g.c_tilde, o + g.d, o, 0));
      L.pieces.push_back(poly_piece(right, o + g.d, o + g.b, o));
    }
    L.pieces.push_back(zero(o + g.b, comp == 0 ? 0.5 : 1.0));
  }
  return L;
}

}  // namespace detail

// e = s - P on [c~, d] (smooth: on [c, b] times the window), s the boundary sum at the current level and
// P = sgn(s) * height; connectors to zero at c and b. Right side of both components only.
inline PlatformSurgery platform_correction(const DestructionState& s) {
  PlatformSurgery out;
  PlatformGeometry g = platform_geometry(s);
  out.geometry = g;
  const bool smooth = s.params.l == kSmoothInfinite;
  const int order = smooth ? 4 : s.params.l;
  const int n = std::max(2 * order + 3, s.dparams.platform_nodes);
  Cocycle c = destruction_cocycle(s);
  ResonanceIntervals I = resonance_intervals(s.n);
  double lo = smooth ? g.c : g.c_tilde, hi = smooth ? g.b : g.d;
  std::vector<double> y(n);
  for (int j = 0; j < n; ++j) y[j] = lo + (hi - lo) * j / (n - 1);
  std::array<std::vector<double>, 2> sum{std::vector<double>(n), std::vector<double>(n)};
  parallel_for(2 * static_cast<std::size_t>(n), s.params.threads, [&](std::size_t i) {
    int comp = static_cast<int>(i) / n, j = static_cast<int>(i) % n;
    Real x = I.center(comp) + static_cast<Real>(y[j]);
    sum[comp][j] = boundary_data(c, x, I, nullptr).sum;
  });
  std::array<std::shared_ptr<HermiteSpline>, 2> sp;
  std::array<std::vector<double>, 2> ev;  // e at the nodes
  for (int comp = 0; comp < 2; ++comp) {
    double sg = 0;
    for (double v : sum[comp]) sg += v;
    double P = (sg < 0 ? -1.0 : 1.0) * g.height;
    out.platform_value[comp] = P;
    ev[comp].resize(n);
    for (int j = 0; j < n; ++j) ev[comp][j] = sum[comp][j] - P;
    auto h = std::make_shared<HermiteSpline>();
    h->l = order;
    h->nodes = y;
    h->node_derivs = fd_node_derivs(y, ev[comp], order);
    try {
      h->build();
    } catch (const Error& e) {
      throw Error(ErrorKind::PatchResidual, std::string("platform spline: ") + e.what());
    }
    sp[comp] = h;
  }
  std::string tag = "e:q=" + std::to_string(s.n);
  out.e = detail::platform_layer(g, sp, order, smooth, 1, tag);
  out.e_negated = detail::platform_layer(g, sp, order, smooth, -1, "-" + tag);
  return out;
}

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

// Platform surgery at the current level, re-flattening over the ladder levels up to n_i, then
// growth bounds at n_i and the decay row.
inline DestructionState destruction_step(const DestructionState& in) {
  DestructionState s = in;
  const int i = in.step + 1;
  const int l = s.params.l == kSmoothInfinite ? 1 : s.params.l;
  PlatformSurgery ps = platform_correction(in);
  s.geometry = ps.geometry;
  std::int64_t n_next = choose_next_level(in, ps.geometry);
  const int cl_order = s.theta.smoothness_order();

  s.theta.add_layer(ps.e);
  s.target.add_layer(ps.e_negated);
  s.log_platform_cl = layer_cl_log_norm(ps.e, cl_order, 16);
  double log_inc = s.log_platform_cl;

  // platform residual at the previous level on [c~, d]
  {
    Cocycle c = destruction_cocycle(s);
    ResonanceIntervals I = resonance_intervals(in.n);
    const int m = std::max(2, s.dparams.samples);
    std::vector<double> res(2 * m);
    parallel_for(res.size(), s.params.threads, [&](std::size_t k) {
      int comp = static_cast<int>(k) / m, j = static_cast<int>(k) % m;
      double y = ps.geometry.c_tilde + (ps.geometry.d - ps.geometry.c_tilde) * (j + 0.5) / m;
      Real x = I.center(comp) + static_cast<Real>(y);
      res[k] = std::abs(boundary_data(c, x, I, nullptr).sum - ps.platform_value[comp]);
    });
    s.platform_residual = *std::max_element(res.begin(), res.end());
  }

  // sub-iterations over the ladder levels between n_{i-1} and n_i
  std::vector<std::int64_t> ladder = level_ladder(s.params.omega, in.n, s.params.qmax);
  std::vector<std::int64_t> levels;
  for (std::int64_t q : ladder) {
    levels.push_back(q);
    if (q == n_next) break;
  }
  ConstructionState sub;
  sub.params = s.params;
  if (s.dparams.sub_grid > 0) sub.params.grid = s.dparams.sub_grid;
  if (s.dparams.verify_samples > 0) sub.params.verify_samples = s.dparams.verify_samples;
  sub.params.steps = static_cast<int>(levels.size());
  sub.levels = levels;
  sub.level_index = 0;
  sub.xi = s.theta;
  sub.target = s.target;
  double log_nu0 = s.log_mu * std::pow(1 - s.delta1, i - 1);
  s.log_nu = nu_ladder(log_nu0, s.delta0, l, static_cast<int>(levels.size()));
  sub.schedule.q = levels;
  sub.schedule.log_lambda = s.log_nu;
  sub.schedule.eps = s.params.eps;
  s.sub_levels = levels;
  s.sub_reports.clear();
  s.sub_increments.clear();
  while (!sub.done()) {
    sub = correction_step(sub);
    VerifyReport r = verify_step(sub, sub.params.verify_samples);
    s.sub_reports.push_back(r);
    s.sub_increments.push_back(sub.increments.back());
    log_inc = log_add(log_inc, sub.increments.back().log_cl_norm);
    if (s.dparams.strict && !r.growth_ok) {
      std::ostringstream os;
      os << "sub-level j=" << sub.level_index << " (q=" << r.q << "): growth " << r.growth_min << " below log nu_j "
         << r.log_lambda_k;
      throw Error(ErrorKind::NonHyperbolic, os.str());
    }
  }
  s.theta = sub.xi;
  s.final_report = s.sub_reports.back();
  s.log_increment_cl = log_inc;
  double qp = static_cast<double>(in.n);
  double pe = std::pow(1 - s.delta1, i - 1);
  s.log_increment_bound = log_add(4 * s.M * l * l * std::log(qp) - 0.5 * pe * qp * s.log_mu, -2 * std::log(qp));

  // growth bounds at n_i
  ResonanceIntervals In = resonance_intervals(n_next);
  GrowthBounds gb = measure_growth_bounds(destruction_cocycle(s), In, s.dparams.samples, s.params.threads);
  DecayRow row;
  row.step = i;
  row.n_prev = in.n;
  row.n = n_next;
  row.log_mu_lower_prev = in.bounds.log_mu_lower;
  row.log_mu_upper_prev = in.bounds.log_mu_upper;
  row.log_mu_lower = gb.log_mu_lower;
  row.log_mu_upper = gb.log_mu_upper;
  row.rho = in.ratio.ratio;
  row.log_bound_mechanism = in.bounds.log_mu_upper - 2 * l * row.rho * s.delta0 * 1.2 * in.bounds.log_mu_lower;
  row.log_bound_k1 = in.bounds.log_mu_upper - 2 * l * std::pow(s.M, -s.k1) * s.delta0 * in.bounds.log_mu_lower;
  row.log_bound_delta2 = (1 - s.delta2) * in.bounds.log_mu_upper;
  row.log_lower_floor = std::pow(1 - s.delta1, i) * s.log_mu;
  row.strict_decay = gb.log_mu_upper < in.bounds.log_mu_upper;
  row.mechanism_ok = gb.log_mu_upper <= row.log_bound_mechanism;
  row.k1_ok = gb.log_mu_upper <= row.log_bound_k1;
  row.delta2_ok = gb.log_mu_upper <= row.log_bound_delta2;
  row.comparable = gb.log_mu_upper <= 2 * gb.log_mu_lower;
  row.lower_ok = gb.log_mu_lower >= row.log_lower_floor;
  s.decay.push_back(row);

  s.step = i;
  s.n = n_next;
  s.bounds = gb;
  s.ratio = return_ratio_stats(s.params.omega, In, s.dparams.ratio_grid);
  return s;
}

inline DestructionState run_destruction(DestructionState s) {
  while (s.step < s.dparams.steps) s = destruction_step(s);
  return s;
}

inline void write_decay_csv(std::ostream& out, const std::vector<DecayRow>& rows) {
  using detail::num;
  out << "step,n_prev,n,log_mu_lower_prev,log_mu_upper_prev,log_mu_lower,log_mu_upper,rho,log_bound_mechanism,"
         "log_bound_k1,log_bound_delta2,log_lower_floor,strict_decay,mechanism_ok,k1_ok,delta2_ok,comparable,lower_ok,"
         "pass\n";
  for (const auto& r : rows)
    out << r.step << "," << r.n_prev << "," << r.n << "," << num(r.log_mu_lower_prev) << ","
        << num(r.log_mu_upper_prev) << "," << num(r.log_mu_lower) << "," << num(r.log_mu_upper) << "," << num(r.rho)
        << "," << num(r.log_bound_mechanism) << "," << num(r.log_bound_k1) << "," << num(r.log_bound_delta2) << ","
        << num(r.log_lower_floor) << "," << r.strict_decay << "," << r.mechanism_ok << "," << r.k1_ok << ","
        << r.delta2_ok << "," << r.comparable << "," << r.lower_ok << "," << r.pass() << "\n";
}

}  // namespace cclab
