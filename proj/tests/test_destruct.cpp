#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "cclab/destruct.hpp"

using namespace cclab;

namespace {

// construction through 21, 55, 144
const ConstructionState& base_run() {
  static const ConstructionState s = [] {
    ConstructParams p;
    p.steps = 3;
    return run_construction(init_construction(p));
  }();
  return s;
}

const DestructionState& start() {
  static const DestructionState s = init_destruction(base_run());
  return s;
}

double layer_at(const Layer& L, double x) { return L.scale() * L.piece_at(x).eval(x); }

}  // namespace

TEST(NuLadder, ExactAndFloor) {
  double log_nu0 = 6.0, d0 = 1e-3;
  int l = 2;
  std::vector<double> nu = nu_ladder(log_nu0, d0, l, 12);
  ASSERT_EQ(nu.size(), 12u);
  EXPECT_EQ(nu[0], log_nu0);
  EXPECT_NEAR(nu[1], log_nu0 * (1 - 2 * 3 * d0), 1e-15);
  EXPECT_NEAR(nu[2], log_nu0 * (1 - 2 * 3 * d0 * (1 + 1 / std::sqrt(2.0))), 1e-15);
  for (std::size_t j = 1; j < nu.size(); ++j) {
    EXPECT_LT(nu[j], nu[j - 1]);
    EXPECT_GE(nu[j], log_nu0 * (1 - 8 * d0 * (l + 1)));
  }
}

TEST(GrowthBounds, ConstantCocycle) {
  Cocycle c = constant_cocycle(golden(), diag(5, 0.2));
  GrowthBounds g = measure_growth_bounds(c, resonance_intervals(21), 8);
  EXPECT_NEAR(g.log_mu_lower, std::log(5.0), 1e-12);
  EXPECT_NEAR(g.log_mu_upper, std::log(5.0), 1e-12);
  EXPECT_GE(g.r_min, 21);
  EXPECT_THROW(measure_growth_bounds(c, resonance_intervals(21), 0), Error);
}

TEST(Init, ParametersFromRatio) {
  const DestructionState& s = start();
  EXPECT_EQ(s.n, 144);
  EXPECT_NEAR(s.log_mu, 0.9 * std::log(1000.0), 1e-12);
  double mk = std::pow(s.M, -s.k1);
  EXPECT_LE(mk, s.ratio.ratio);
  EXPECT_DOUBLE_EQ(s.delta0, std::min(1.0 / 100, mk / 10));
  EXPECT_DOUBLE_EQ(s.delta1, 8 * s.delta0);
  EXPECT_DOUBLE_EQ(s.delta2, mk * s.delta0);
  EXPECT_GT(s.delta1, s.delta2);
  EXPECT_GT(s.delta2, 0);
  EXPECT_LE(s.bounds.log_mu_lower, s.bounds.log_mu_upper);
  EXPECT_THROW(init_destruction(ConstructionState{}), Error);
}

TEST(Geometry, Ordering) {
  const DestructionState& s = start();
  PlatformGeometry g = platform_geometry(s);
  EXPECT_TRUE(g.ordered());
  EXPECT_NEAR(g.log_inv_c, 2 * s.delta0 * s.bounds.r_min * s.bounds.log_mu_lower, 1e-12);
  EXPECT_NEAR(g.c_tilde, s.M * s.M * g.c, 1e-12 * g.c_tilde);
  EXPECT_DOUBLE_EQ(g.d, 1 / (2.0 * 144 * 144));
  EXPECT_DOUBLE_EQ(g.b, 1 / (144.0 * 144));
  EXPECT_NEAR(g.height, 2 * g.c * g.c, 1e-12 * g.height);
}

TEST(Geometry, UnorderedThrows) {
  DestructionState s = start();
  s.bounds.r_min = 1;  // c close to 1
  try {
    platform_geometry(s);
    FAIL() << "expected GeometryError";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::GeometryError);
  }
}

TEST(Geometry, NextLevel) {
  const DestructionState& s = start();
  PlatformGeometry g = platform_geometry(s);
  std::int64_t n = choose_next_level(s, g);
  double q = static_cast<double>(n);
  EXPECT_GT(n, s.n);
  EXPECT_LT(4 / (q * q), g.c);
  EXPECT_GT((1 - s.delta1) * q * s.log_mu, 2 * std::log(q));
  EXPECT_GT(2 * std::log(q), 2 * s.delta0 * s.bounds.r_min * std::log(1000.0));
  DestructionState t = s;
  t.params.qmax = 400;
  try {
    choose_next_level(t, g);
    FAIL() << "expected GeometryError";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::GeometryError);
  }
}

TEST(Platform, SupportAndSign) {
  const DestructionState& s = start();
  PlatformSurgery ps = platform_correction(s);
  const PlatformGeometry& g = ps.geometry;
  for (int comp = 0; comp < 2; ++comp) {
    double o = comp == 0 ? 0.0 : 0.5;
    EXPECT_EQ(std::abs(ps.platform_value[comp]), g.height);
    for (int i = 0; i < 4000; ++i) {
      // dense near the support, coarse elsewhere
      double x = o + (i < 2000 ? 2 * g.b * (i + 0.5) / 2000 : 0.5 * (i - 2000 + 0.5) / 2000);
      double v = layer_at(ps.e, x), w = layer_at(ps.e_negated, x);
      if (x - o <= g.c || x - o >= g.b) {
        EXPECT_EQ(v, 0) << x;
      }
      EXPECT_NEAR(v, -w, 1e-15 * std::abs(v) + 1e-300);
    }
  }
  // mirror side of each component untouched
  AngleProfile t = s.theta;
  t.add_layer(ps.e);
  std::vector<std::pair<double, double>> sup = {{g.c, g.b}, {0.5 + g.c, 0.5 + g.b}};
  EXPECT_EQ(cl_distance_outside(t, s.theta, s.params.l, 16, sup), 0);
}

TEST(Platform, FlatOnInnerInterval) {
  const DestructionState& s = start();
  PlatformSurgery ps = platform_correction(s);
  DestructionState t = s;
  t.theta.add_layer(ps.e);
  Cocycle c = destruction_cocycle(t);
  ResonanceIntervals I = resonance_intervals(s.n);
  const PlatformGeometry& g = ps.geometry;
  for (int comp = 0; comp < 2; ++comp)
    for (int j = 0; j < 40; ++j) {
      double y = g.c_tilde + (g.d - g.c_tilde) * (j + 0.5) / 40;
      Real x = I.center(comp) + static_cast<Real>(y);
      EXPECT_NEAR(boundary_data(c, x, I, nullptr).sum, ps.platform_value[comp], 1e-12);
    }
}

TEST(LogAdd, Basic) {
  EXPECT_NEAR(log_add(std::log(2.0), std::log(3.0)), std::log(5.0), 1e-15);
  EXPECT_EQ(log_add(kNegInf, 1.5), 1.5);
  EXPECT_NEAR(log_add(-1000, -1000), -1000 + std::log(2.0), 1e-12);
}

TEST(Step, ReducedGridStep) {
  // sub-iterations on coarse grids: structure and bookkeeping only; the full-resolution
  // decay is exercised by the acceptance run
  DestructParams dp;
  dp.sub_grid = 64;
  dp.verify_samples = 8;
  dp.samples = 8;
  dp.platform_nodes = 64;
  dp.strict = false;
  DestructionState s = init_destruction(base_run(), dp);
  DestructionState t = destruction_step(s);
  EXPECT_EQ(t.step, 1);
  ASSERT_EQ(t.decay.size(), 1u);
  const DecayRow& r = t.decay[0];
  EXPECT_EQ(r.n_prev, 144);
  EXPECT_EQ(r.n, t.n);
  EXPECT_EQ(t.sub_levels.front(), 144);
  EXPECT_EQ(t.sub_levels.back(), t.n);
  EXPECT_EQ(t.sub_reports.size(), t.sub_levels.size() - 1);
  EXPECT_EQ(t.log_nu.size(), t.sub_levels.size());
  EXPECT_LT(t.platform_residual, 1e-12);
  EXPECT_LE(t.final_report.flatness, 1e-8);
  EXPECT_DOUBLE_EQ(r.log_lower_floor, (1 - s.delta1) * s.log_mu);
  std::ostringstream os;
  write_decay_csv(os, t.decay);
  std::string csv = os.str();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_EQ(csv.rfind("step,n_prev,n,", 0), 0u);
}
