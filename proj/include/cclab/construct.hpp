#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cclab/cocycle.hpp"
#include "cclab/error.hpp"
#include "cclab/hermite.hpp"
#include "cclab/profiles.hpp"
#include "cclab/rotation.hpp"
#include "cclab/sl2.hpp"

namespace cclab {

struct LambdaSchedule {
  std::vector<std::int64_t> q;     // levels q_N, ... (ladder)
  std::vector<double> log_lambda;  // log lambda_k per level
  double tail_sum = 0;             // 10 l sum_{k>=N} log q_{k+1} / q_k (or the smooth analogue), with tail bound
  double eps = 0.1;
  bool tail_ok = false;            // tail_sum <= eps
  bool lambda_ok = false;          // lambda > q_N^2
  double final_margin = 0;         // log lambda_K - (1 - eps) log lambda
  bool feasible() const { return tail_ok && lambda_ok; }
};

// finite l: log lambda_k = log lambda_{k-1} - 10 l log q_k / q_{k-1};
// smooth: log lambda_k = log lambda_{k-1} - (10 q_k^2)^a / q_k
inline LambdaSchedule lambda_schedule(double lambda, int l, double a, const RotationNumber& w,
                                      const std::vector<std::int64_t>& levels, double eps = 0.1,
                                      bool strict = false) {
  if (!(lambda > 1)) throw Error(ErrorKind::InvalidParams, "lambda must exceed 1");
  if (levels.empty()) throw Error(ErrorKind::InvalidParams, "empty level list");
  bool smooth = l == kSmoothInfinite;
  LambdaSchedule s;
  s.eps = eps;
  s.q = levels;
  s.log_lambda.push_back(std::log(lambda));
  for (std::size_t k = 1; k < levels.size(); ++k) {
    double qk = static_cast<double>(levels[k]), qp = static_cast<double>(levels[k - 1]);
    double drop = smooth ? std::pow(10 * qk * qk, a) / qk : 10.0 * l * std::log(qk) / qp;
    s.log_lambda.push_back(s.log_lambda.back() - drop);
  }
  // tail sum over all computed convergents from q_N on, plus a geometric bound for the rest
  int start = w.index_of(levels.front());
  double sum = 0, last = 0;
  auto term = [&](double qk, double qn) {
    return smooth ? std::pow(10 * qn * qn, a) / qn : 10.0 * l * std::log(qn) / qk;
  };
  for (std::size_t k = start; k + 1 < w.q.size(); ++k) {
    last = term(static_cast<double>(w.q[k]), static_cast<double>(w.q[k + 1]));
    sum += last;
  }
  // q_{k+2} >= 2 q_k, so later terms shrink at least by a factor 1/sqrt(2) up to the log growth
  double M = std::max(2.0, w.bounded_type_M);
  double qlast = static_cast<double>(w.q.back());
  double g = std::sqrt(2.0);
  double tail = 0;
  for (int j = 1; j < 4000; ++j) {
    double qk = qlast * std::pow(g, j - 1), qn = qlast * std::pow(g, j - 1) * M;
    double t = term(qk, qn);
    tail += t;
    if (t < 1e-18 * (sum + tail)) break;
  }
  s.tail_sum = sum + tail;
  s.tail_ok = s.tail_sum <= eps;
  double qN = static_cast<double>(levels.front());
  s.lambda_ok = lambda > qN * qN;
  s.final_margin = s.log_lambda.back() - (1 - eps) * std::log(lambda);
  if (strict && !s.feasible()) {
    std::ostringstream os;
    os << "feasibility fails: tail sum " << s.tail_sum << " vs eps " << eps << ", lambda " << lambda << " vs q_N^2 "
       << qN * qN;
    throw Error(ErrorKind::FeasibilityError, os.str());
  }
  return s;
}

struct ConstructParams {
  RotationNumber omega = golden();
  double lambda = 1000;
  int l = 1;
  double a = 0.05;
  std::int64_t qN = 21;
  int steps = 3;
  double eps = 0.1;
  Branch branch = Branch::Homotopic;
  int grid = 512;           // defect nodes per component
  int verify_samples = 64;  // per component and check
  bool strict_feasibility = false;
  int threads = 1;
  std::int64_t qmax = 4000000000LL;
};

struct VerifyReport {
  std::int64_t q = 0;
  double flatness = 0;            // max |sum - target| on I/10
  double log_interp_residual = kNegInf;  // log max |defect - f| at off-node points (levels beyond N)
  double separation_min = 0;      // min |sum| on I \ I/10
  double separation_bound = 0;
  double growth_min = 0;          // min (1/r) log ||B^r||
  double growth_max = 0;
  double log_lambda_k = 0;
  std::int64_t r_min = 0, r_max = 0;
  bool flat_ok = false, sep_ok = false, growth_ok = false;
  bool pass() const { return flat_ok && sep_ok && growth_ok; }
};

struct Increment {
  std::int64_t q = 0;
  double log_defect_max = kNegInf;  // log sup |f_k|
  double log_cl_norm = kNegInf;     // log |f_k|_{C^l}
  std::size_t nodes = 0;
};

struct ConstructionState {
  ConstructParams params;
  LambdaSchedule schedule;
  std::vector<std::int64_t> levels;
  int level_index = -1;  // last corrected level, -1 before the first step
  AngleProfile xi;
  AngleProfile target;
  std::vector<VerifyReport> reports;
  std::vector<Increment> increments;

  std::int64_t q() const { return levels.at(level_index); }
  ResonanceIntervals intervals(int idx) const { return resonance_intervals(levels.at(idx)); }
  ResonanceIntervals intervals() const { return intervals(level_index); }
  Cocycle cocycle() const { return angle_family(params.omega, params.lambda, xi); }
  double log_lambda_k() const { return schedule.log_lambda.at(level_index); }
  bool done() const { return level_index + 1 >= static_cast<int>(levels.size()); }
};

inline ConstructionState init_construction(const ConstructParams& p) {
  ConstructionState s;
  s.params = p;
  std::vector<std::int64_t> ladder = level_ladder(p.omega, p.qN, p.qmax);
  if (static_cast<int>(ladder.size()) < p.steps)
    throw Error(ErrorKind::InvalidParams, "convergent table too short for " + std::to_string(p.steps) + " steps");
  ladder.resize(p.steps);
  s.levels = ladder;
  s.schedule = lambda_schedule(p.lambda, p.l, p.a, p.omega, ladder, p.eps, p.strict_feasibility);
  BaseProfile bp = base_profile(p.qN, p.l, p.a, p.branch);
  s.xi = bp.xi;
  s.target = bp.target;
  return s;
}

// Defect samples on the node grid of both components, as signed logs.
struct DefectSamples {
  std::vector<double> y;                  // local node coordinates
  std::array<std::vector<SLog>, 2> D;     // per component
};

namespace detail {

inline std::vector<double> node_grid(double half, int n) {
  std::vector<double> y(n);
  for (int j = 0; j < n; ++j) y[j] = -half + 2 * half * j / (n - 1);
  return y;
}

inline Piece spline_piece(std::shared_ptr<const HermiteSpline> sp, double lo, double hi, double center,
                          double bump_hw) {
  Piece p;
  p.kind = PieceKind::Spline;
  p.lo = lo;
  p.hi = hi;
  p.center = center;
  p.spline = std::move(sp);
  if (bump_hw > 0) p.set_bump(bump_hw);
  return p;
}

inline Piece poly_piece(const HermitePoly& poly, double lo, double hi, double center) {
  Piece p;
  p.kind = PieceKind::HermitePatch;
  p.lo = lo;
  p.hi = hi;
  p.center = center;
  p.poly = poly;
  return p;
}

inline HermitePoly patch_or_throw(const HermiteSpec& s, int l) {
  try {
    return hermite_patch(s, l);
  } catch (const Error& e) {
    throw Error(ErrorKind::PatchResidual, std::string("hermite connector: ") + e.what());
  }
}

}  // namespace detail

// f = D on I/10 with degree-(2l+1) connectors down to 0 at the edge of I (finite l),
// or f = D * g on I with the smooth bump g (infinite class). Returns nullopt if D vanishes.
inline std::optional<Layer> correction_layer(const DefectSamples& s, double hw, int l, bool smooth,
                                             const std::string& tag, int smooth_order = 4) {
  double S = kNegInf;
  for (const auto& comp : s.D)
    for (const SLog& v : comp)
      if (v.sign != 0) S = std::max(S, v.log);
  if (S == kNegInf) return std::nullopt;
  int order = smooth ? smooth_order : l;
  std::array<std::shared_ptr<HermiteSpline>, 2> sp;
  for (int c = 0; c < 2; ++c) {
    std::vector<double> v(s.y.size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = s.D[c][j].sign == 0 ? 0.0 : s.D[c][j].sign * std::exp(s.D[c][j].log - S);
    auto h = std::make_shared<HermiteSpline>();
    h->l = order;
    h->nodes = s.y;
    h->node_derivs = fd_node_derivs(s.y, v, order);
    try {
      h->build();
    } catch (const Error& e) {
      throw Error(ErrorKind::PatchResidual, std::string("defect spline: ") + e.what());
    }
    sp[c] = h;
  }
  Layer L;
  L.tag = tag;
  L.log_scale = S;
  auto zero = [](double lo, double hi) {
    Piece p;
    p.kind = PieceKind::Platform;
    p.lo = lo;
    p.hi = hi;
    return p;
  };
  if (smooth) {
    L.pieces.push_back(detail::spline_piece(sp[0], 0, hw, 0, hw));
    L.pieces.push_back(zero(hw, 0.5 - hw));
    L.pieces.push_back(detail::spline_piece(sp[1], 0.5 - hw, 0.5 + hw, 0.5, hw));
    L.pieces.push_back(zero(0.5 + hw, 1 - hw));
    L.pieces.push_back(detail::spline_piece(sp[0], 1 - hw, 1, 1, hw));
    return L;
  }
  double h10 = hw / 10;
  std::vector<double> zeros(l + 1, 0.0);
  std::array<HermitePoly, 2> left, right;
  for (int c = 0; c < 2; ++c) {
    right[c] = detail::patch_or_throw({h10, hw, sp[c]->node_derivs.back(), zeros}, l);
    left[c] = detail::patch_or_throw({-hw, -h10, zeros, sp[c]->node_derivs.front()}, l);
  }
  L.pieces.push_back(detail::spline_piece(sp[0], 0, h10, 0, 0));
  L.pieces.push_back(detail::poly_piece(right[0], h10, hw, 0));
  L.pieces.push_back(zero(hw, 0.5 - hw));
  L.pieces.push_back(detail::poly_piece(left[1], 0.5 - hw, 0.5 - h10, 0.5));
  L.pieces.push_back(detail::spline_piece(sp[1], 0.5 - h10, 0.5 + h10, 0.5, 0));
  L.pieces.push_back(detail::poly_piece(right[1], 0.5 + h10, 0.5 + hw, 0.5));
  L.pieces.push_back(zero(0.5 + hw, 1 - hw));
  L.pieces.push_back(detail::poly_piece(left[0], 1 - hw, 1 - h10, 1));
  L.pieces.push_back(detail::spline_piece(sp[0], 1 - h10, 1, 1, 0));
  return L;
}

// Measures the defect at the next level and adds the correction layer f_k.
inline ConstructionState correction_step(const ConstructionState& in) {
  if (in.done()) throw Error(ErrorKind::InvalidParams, "construction already at its last level");
  ConstructionState s = in;
  s.level_index += 1;
  const int idx = s.level_index;
  const ResonanceIntervals I = s.intervals(idx);
  std::optional<ResonanceIntervals> coarse;
  if (idx > 0) coarse = s.intervals(idx - 1);
  const bool smooth = s.params.l == kSmoothInfinite;
  const double hw = static_cast<double>(I.half_width);
  const int n = s.params.grid;
  DefectSamples ds;
  ds.y = detail::node_grid(smooth ? hw : hw / 10, n);
  ds.D[0].resize(n);
  ds.D[1].resize(n);
  Cocycle c = s.cocycle();
  double worst_direct = 0;
  std::vector<double> direct(2 * n, 0.0);
  parallel_for(2 * static_cast<std::size_t>(n), s.params.threads, [&](std::size_t i) {
    int comp = static_cast<int>(i) / n, j = static_cast<int>(i) % n;
    Real x = frac(I.center(comp) + static_cast<Real>(ds.y[j]));
    if (idx == 0) {
      BoundaryData b = boundary_data(c, x, I, nullptr);
      direct[i] = b.sum - s.target(x);
      ds.D[comp][j] = SLog::from(direct[i]);
    } else {
      ds.D[comp][j] = boundary_data(c, x, I, &*coarse).defect;
    }
  });
  Increment inc;
  inc.q = I.q;
  inc.nodes = 2 * static_cast<std::size_t>(n);
  if (idx == 0) {
    // the base level is flat by construction up to rounding; only a defect above rounding is patched
    // angles are O(1), so rounding is absolute
    for (int i = 0; i < 2 * n; ++i) worst_direct = std::max(worst_direct, std::abs(direct[i]));
    if (worst_direct <= 64 * std::numeric_limits<double>::epsilon()) {
      for (auto& comp : ds.D)
        for (auto& v : comp) v = SLog{};
    }
  }
  std::optional<Layer> L =
      correction_layer(ds, hw, s.params.l, smooth, "f:q=" + std::to_string(I.q));
  if (L) {
    for (const auto& comp : ds.D)
      for (const SLog& v : comp)
        if (v.sign != 0) inc.log_defect_max = std::max(inc.log_defect_max, v.log);
    inc.log_cl_norm = layer_cl_log_norm(*L, s.xi.smoothness_order(), 8);
    s.xi.add_layer(*L);
  }
  s.increments.push_back(inc);
  return s;
}

namespace detail {

// evaluates a layer in the log domain at x: returns signed log of exp(log_scale) * piece(x)
inline SLog layer_value_log(const Layer& L, double x) {
  double v = L.piece_at(x).eval(x);
  SLog r = SLog::from(v);
  if (r.sign != 0) r.log += L.log_scale;
  return r;
}

}  // namespace detail

// Checks flatness on I/10, separation on I \ I/10, and per-return growth on I at the current level.
inline VerifyReport verify_step(const ConstructionState& s, int samples) {
  if (s.level_index < 0) throw Error(ErrorKind::InvalidParams, "nothing to verify before the first step");
  VerifyReport r;
  const int idx = s.level_index;
  const ResonanceIntervals I = s.intervals();
  const double hw = static_cast<double>(I.half_width);
  const bool smooth = s.params.l == kSmoothInfinite;
  r.q = I.q;
  r.log_lambda_k = s.log_lambda_k();
  double q2 = static_cast<double>(I.q) * static_cast<double>(I.q);
  r.separation_bound = smooth ? std::exp(-std::pow(20 * q2, s.params.a)) : std::pow(1 / (20 * q2), s.params.l + 1);
  Cocycle c = s.cocycle();
  const int m = std::max(2, samples);
  std::optional<ResonanceIntervals> coarse;
  if (idx > 0) coarse = s.intervals(idx - 1);
  const Layer* f = nullptr;
  if (idx > 0 && !s.xi.layers.empty() && s.xi.layers.back().tag == "f:q=" + std::to_string(I.q)) f = &s.xi.layers.back();

  // flatness on I/10 at midpoints between defect nodes
  std::vector<double> flat(2 * m), interp(2 * m, kNegInf);
  parallel_for(2 * static_cast<std::size_t>(m), s.params.threads, [&](std::size_t i) {
    int comp = static_cast<int>(i) / m, j = static_cast<int>(i) % m;
    double y = -hw / 10 + (hw / 5) * (j + 0.5) / m;
    Real x = frac(I.center(comp) + static_cast<Real>(y));
    BoundaryData b = boundary_data(c, x, I, coarse ? &*coarse : nullptr);
    flat[i] = std::abs(reduce_half_pi(b.sum - s.target(x)));
    if (coarse) {
      SLog fv = f ? detail::layer_value_log(*f, static_cast<double>(x)) : SLog{};
      SLog diff = b.defect + (-fv);
      interp[i] = diff.sign == 0 ? kNegInf : diff.log;
    }
  });
  for (int i = 0; i < 2 * m; ++i) {
    r.flatness = std::max(r.flatness, flat[i]);
    r.log_interp_residual = std::max(r.log_interp_residual, interp[i]);
  }
  r.flat_ok = r.flatness <= 1e-6;

  // separation on I \ I/10, both sides of both components
  std::vector<double> sep(4 * m);
  parallel_for(4 * static_cast<std::size_t>(m), s.params.threads, [&](std::size_t i) {
    int comp = static_cast<int>(i) / (2 * m), rest = static_cast<int>(i) % (2 * m);
    int side = rest < m ? -1 : 1, j = rest % m;
    double y = side * (hw / 10 + 0.9 * hw * (j + 0.5) / m);
    Real x = frac(I.center(comp) + static_cast<Real>(y));
    sep[i] = std::abs(boundary_data(c, x, I, nullptr).sum);
  });
  r.separation_min = *std::min_element(sep.begin(), sep.end());
  r.sep_ok = r.separation_min >= r.separation_bound;

  // growth on I
  std::vector<double> gr(2 * m);
  std::vector<std::int64_t> rt(2 * m);
  parallel_for(2 * static_cast<std::size_t>(m), s.params.threads, [&](std::size_t i) {
    int comp = static_cast<int>(i) / m, j = static_cast<int>(i) % m;
    double y = -hw + 2 * hw * (j + 0.5) / m;
    Real x = frac(I.center(comp) + static_cast<Real>(y));
    BlockWalk w = walk_blocks(c, x, Direction::Forward, I, nullptr);
    gr[i] = w.total.alpha / static_cast<double>(w.length);
    rt[i] = w.length;
  });
  r.growth_min = *std::min_element(gr.begin(), gr.end());
  r.growth_max = *std::max_element(gr.begin(), gr.end());
  r.r_min = *std::min_element(rt.begin(), rt.end());
  r.r_max = *std::max_element(rt.begin(), rt.end());
  // equality holds at the base level; allow relative rounding of the log
  r.growth_ok = r.growth_min >= r.log_lambda_k * (1 - 1e-12);
  return r;
}

// Runs the remaining steps, verifying after each one.
inline ConstructionState run_construction(ConstructionState s, bool verbose_stop_on_fail = false) {
  while (!s.done()) {
    s = correction_step(s);
    VerifyReport r = verify_step(s, s.params.verify_samples);
    s.reports.push_back(r);
    if (verbose_stop_on_fail && !r.pass()) break;
  }
  return s;
}

// ------------------------------------------------------------------ checkpoints

inline void write_checkpoint(std::ostream& out, const ConstructionState& s) {
  using detail::num;
  const ConstructParams& p = s.params;
  out << "cclab-checkpoint 1\n";
  out << "omega " << p.omega.label << " " << detail::num(static_cast<double>(p.omega.value)) << "\n";
  out << "lambda " << num(p.lambda) << "\nl " << p.l << "\na " << num(p.a) << "\nqN " << p.qN << "\nsteps "
      << p.steps << "\neps " << num(p.eps) << "\nbranch " << (p.branch == Branch::Homotopic ? "homotopic" : "nonhomotopic")
      << "\ngrid " << p.grid << "\nverify_samples " << p.verify_samples << "\nlevel_index " << s.level_index << "\n";
  out << "increments " << s.increments.size() << "\n";
  for (const auto& i : s.increments)
    out << i.q << " " << num(i.log_defect_max) << " " << num(i.log_cl_norm) << " " << i.nodes << "\n";
  out << "reports " << s.reports.size() << "\n";
  for (const auto& r : s.reports)
    out << r.q << " " << num(r.flatness) << " " << num(r.log_interp_residual) << " " << num(r.separation_min) << " "
        << num(r.separation_bound) << " " << num(r.growth_min) << " " << num(r.growth_max) << " "
        << num(r.log_lambda_k) << " " << r.r_min << " " << r.r_max << " " << r.flat_ok << r.sep_ok << r.growth_ok
        << "\n";
  out << "profile\n";
  write_profile(out, s.xi);
  out << "target\n";
  write_profile(out, s.target);
}

inline RotationNumber omega_from_label(const std::string& label, double value) {
  if (label == "golden") return golden();
  if (label == "sqrt2m1") return sqrt2m1();
  std::ostringstream os;
  os << std::setprecision(17) << value;
  return parse_omega(os.str());
}

inline ConstructionState read_checkpoint(std::istream& in) {
  ConstructionState s;
  ConstructParams& p = s.params;
  detail::expect(in, "cclab-checkpoint");
  int version;
  in >> version;
  std::string key, label, br;
  detail::expect(in, "omega");
  in >> label;
  double wv = detail::read_num(in);
  p.omega = omega_from_label(label, wv);
  detail::expect(in, "lambda");
  p.lambda = detail::read_num(in);
  detail::expect(in, "l");
  in >> p.l;
  detail::expect(in, "a");
  p.a = detail::read_num(in);
  detail::expect(in, "qN");
  in >> p.qN;
  detail::expect(in, "steps");
  in >> p.steps;
  detail::expect(in, "eps");
  p.eps = detail::read_num(in);
  detail::expect(in, "branch");
  in >> br;
  p.branch = br == "homotopic" ? Branch::Homotopic : Branch::Nonhomotopic;
  detail::expect(in, "grid");
  in >> p.grid;
  detail::expect(in, "verify_samples");
  in >> p.verify_samples;
  detail::expect(in, "level_index");
  in >> s.level_index;
  std::size_t n;
  detail::expect(in, "increments");
  in >> n;
  for (std::size_t i = 0; i < n; ++i) {
    Increment inc;
    in >> inc.q;
    inc.log_defect_max = detail::read_num(in);
    inc.log_cl_norm = detail::read_num(in);
    in >> inc.nodes;
    s.increments.push_back(inc);
  }
  detail::expect(in, "reports");
  in >> n;
  for (std::size_t i = 0; i < n; ++i) {
    VerifyReport r;
    in >> r.q;
    r.flatness = detail::read_num(in);
    r.log_interp_residual = detail::read_num(in);
    r.separation_min = detail::read_num(in);
    r.separation_bound = detail::read_num(in);
    r.growth_min = detail::read_num(in);
    r.growth_max = detail::read_num(in);
    r.log_lambda_k = detail::read_num(in);
    in >> r.r_min >> r.r_max;
    std::string flags;
    in >> flags;
    if (flags.size() != 3) throw Error(ErrorKind::ParseError, "bad report flags");
    r.flat_ok = flags[0] == '1';
    r.sep_ok = flags[1] == '1';
    r.growth_ok = flags[2] == '1';
    s.reports.push_back(r);
  }
  if (!in) throw Error(ErrorKind::ParseError, "truncated checkpoint");
  std::vector<std::int64_t> ladder = level_ladder(p.omega, p.qN, p.qmax);
  ladder.resize(std::min<std::size_t>(ladder.size(), p.steps));
  s.levels = ladder;
  s.schedule = lambda_schedule(p.lambda, p.l, p.a, p.omega, ladder, p.eps, false);
  detail::expect(in, "profile");
  s.xi = read_profile(in);
  detail::expect(in, "target");
  s.target = read_profile(in);
  return s;
}

inline void save_checkpoint(const std::string& path, const ConstructionState& s) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::InvalidParams, "cannot write " + path);
  write_checkpoint(f, s);
}

inline ConstructionState load_checkpoint(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::InvalidParams, "cannot read " + path);
  return read_checkpoint(f);
}

}  // namespace cclab
