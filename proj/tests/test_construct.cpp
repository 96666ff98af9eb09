#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "cclab/construct.hpp"

using namespace cclab;

namespace {

double angle_err_mod_pi(double a, double b) { return std::abs(reduce_half_pi(a - b)); }

struct TwoSteps {
  ConstructionState first, second;
};

// levels 21, 55, 144: the state after two verified steps and the one after the third
const TwoSteps& three_level_run() {
  static const TwoSteps r = [] {
    ConstructParams p;
    p.steps = 3;
    ConstructionState s = init_construction(p);
    for (int k = 0; k < 2; ++k) {
      s = correction_step(s);
      s.reports.push_back(verify_step(s, p.verify_samples));
    }
    ConstructionState t = correction_step(s);
    t.reports.push_back(verify_step(t, p.verify_samples));
    return TwoSteps{s, t};
  }();
  return r;
}

}  // namespace

TEST(Schedule, OneStepExample) {
  LambdaSchedule s = lambda_schedule(1000, 1, 0, golden(), {21, 34});
  ASSERT_EQ(s.log_lambda.size(), 2u);
  EXPECT_DOUBLE_EQ(s.log_lambda[0], std::log(1000.0));
  EXPECT_NEAR(s.log_lambda[1], std::log(1000.0) - 10 * std::log(34.0) / 21, 1e-14);
}

TEST(Schedule, EmptyRecursion) {
  LambdaSchedule s = lambda_schedule(1000, 2, 0, golden(), {21});
  ASSERT_EQ(s.log_lambda.size(), 1u);
  EXPECT_DOUBLE_EQ(std::exp(s.log_lambda[0]), 1000);
}

TEST(Schedule, SmoothRecursion) {
  LambdaSchedule s = lambda_schedule(1000, kSmoothInfinite, 0.05, golden(), {21, 55, 144});
  double e = std::log(1000.0);
  for (std::size_t k = 1; k < 3; ++k) {
    double q = static_cast<double>(s.q[k]);
    // lambda_{n+1}^q = lambda_n^q e^{-(10 q^2)^a}
    e = (q * e - std::pow(10 * q * q, 0.05)) / q;
    EXPECT_NEAR(s.log_lambda[k], e, 1e-12);
  }
}

TEST(Schedule, MonotoneDecreasing) {
  LambdaSchedule s = lambda_schedule(1e6, 1, 0, golden(), level_ladder(golden(), 21, 100000));
  for (std::size_t k = 1; k < s.log_lambda.size(); ++k) EXPECT_LT(s.log_lambda[k], s.log_lambda[k - 1]);
}

TEST(Schedule, StrictFeasibility) {
  // lambda = 10^3 with q_N = 21: the tail sum exceeds eps
  LambdaSchedule s = lambda_schedule(1000, 1, 0, golden(), {21, 55, 144});
  EXPECT_FALSE(s.tail_ok);
  EXPECT_TRUE(s.lambda_ok);
  try {
    lambda_schedule(1000, 1, 0, golden(), {21, 55, 144}, 0.1, true);
    FAIL() << "expected FeasibilityError";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::FeasibilityError);
  }
  EXPECT_FALSE(lambda_schedule(300, 1, 0, golden(), {21}).lambda_ok);
  EXPECT_THROW(lambda_schedule(1, 1, 0, golden(), {21}), Error);
}

TEST(Construction, StepsVerify) {
  const TwoSteps& r = three_level_run();
  ASSERT_EQ(r.second.reports.size(), 3u);
  for (const VerifyReport& v : r.second.reports) {
    EXPECT_TRUE(v.pass()) << "q=" << v.q;
    EXPECT_LE(v.flatness, 1e-8);
    EXPECT_GE(v.separation_min, std::pow(1 / (20.0 * v.q * v.q), 2));
    EXPECT_GE(v.growth_min, v.log_lambda_k);
  }
}

TEST(Construction, CorrectionVanishesOutsideInterval) {
  const TwoSteps& r = three_level_run();
  ResonanceIntervals I = r.second.intervals();
  for (int i = 0; i < 100000; ++i) {
    Real x = (i + 0.5L) / 100000;
    if (I.contains(x)) continue;
    ASSERT_EQ(r.second.xi(x), r.first.xi(x)) << static_cast<double>(x);
  }
}

TEST(Construction, RotationIdentityAndBackwardBlock) {
  const TwoSteps& r = three_level_run();
  ResonanceIntervals I = r.second.intervals();
  Cocycle b0 = r.first.cocycle(), b1 = r.second.cocycle();
  for (int comp = 0; comp < 2; ++comp)
    for (Real x : arc_grid(I.center(comp), I.half_width * 0.99L, 24)) {
      double f = r.second.xi(x) - r.first.xi(x);
      FirstReturn fr = first_return(b1.omega, I, x, Direction::Forward);
      FirstReturn br = first_return(b1.omega, I, x, Direction::Backward);
      // forward: B_k^r(x) = B_{k-1}^r(x) R_{-f(x)}
      TransferResult n1 = transfer(b1, x, fr.time, Direction::Forward);
      TransferResult n0 = transfer(b0, x, fr.time, Direction::Forward);
      EXPECT_NEAR(n1.triple.alpha, n0.triple.alpha, 1e-10 * n0.triple.alpha);
      EXPECT_LT(angle_err_mod_pi(n1.triple.phi, n0.triple.phi - f), 1e-8);
      EXPECT_LT(angle_err_mod_pi(n1.triple.psi, n0.triple.psi), 1e-8);
      // backward: the image direction is untouched
      TransferResult m1 = transfer(b1, x, br.time, Direction::Backward);
      TransferResult m0 = transfer(b0, x, br.time, Direction::Backward);
      EXPECT_NEAR(m1.triple.alpha, m0.triple.alpha, 1e-10 * m0.triple.alpha);
      EXPECT_LT(angle_err_mod_pi(m1.triple.psi, m0.triple.psi), 1e-8);
    }
}

TEST(Construction, IncrementExponent) {
  const TwoSteps& r = three_level_run();
  const ConstructionState& s = r.second;
  ASSERT_EQ(s.increments.size(), 3u);
  // the base level needs no patch
  EXPECT_EQ(s.increments[0].log_defect_max, kNegInf);
  for (std::size_t k = 1; k < 3; ++k) {
    const Increment& inc = s.increments[k];
    double rprev = static_cast<double>(s.reports[k - 1].r_min);
    double log_lk = s.schedule.log_lambda[k];
    double q2 = static_cast<double>(inc.q) * static_cast<double>(inc.q);
    int l = s.params.l;
    // |f_k| <~ lambda_k^{-2 r_{k-1}}, C^l norm with |I_k|^{-l^2}
    EXPECT_LE(inc.log_defect_max, -2 * rprev * log_lk);
    EXPECT_LE(inc.log_cl_norm, -2 * rprev * log_lk + l * l * std::log(q2 / 4) + std::log(100.0));
  }
}

TEST(Construction, ClDistanceBetweenSteps) {
  const TwoSteps& r = three_level_run();
  double d = cl_distance(r.first.xi, r.second.xi, 1, 16);
  EXPECT_GE(d, 0);
  EXPECT_LE(d, std::exp(r.second.increments.back().log_cl_norm) * 1.01 + 1e-300);
}

TEST(Construction, LastLevelThrows) {
  const TwoSteps& r = three_level_run();
  EXPECT_THROW(correction_step(r.second), Error);
}

TEST(Construction, TooFewConvergents) {
  ConstructParams p;
  p.steps = 40;
  p.qmax = 10000;
  EXPECT_THROW(init_construction(p), Error);
}

TEST(Checkpoint, RoundTrip) {
  const ConstructionState& s = three_level_run().second;
  std::stringstream ss;
  write_checkpoint(ss, s);
  ConstructionState t = read_checkpoint(ss);
  EXPECT_EQ(t.level_index, s.level_index);
  EXPECT_EQ(t.levels, s.levels);
  EXPECT_EQ(profile_to_string(t.xi), profile_to_string(s.xi));
  EXPECT_EQ(profile_to_string(t.target), profile_to_string(s.target));
  ASSERT_EQ(t.reports.size(), s.reports.size());
  for (std::size_t k = 0; k < s.reports.size(); ++k) {
    EXPECT_EQ(t.reports[k].growth_min, s.reports[k].growth_min);
    EXPECT_EQ(t.reports[k].r_max, s.reports[k].r_max);
    EXPECT_EQ(t.reports[k].pass(), s.reports[k].pass());
  }
  std::stringstream again;
  write_checkpoint(again, t);
  std::stringstream first;
  write_checkpoint(first, s);
  EXPECT_EQ(again.str(), first.str());
}

TEST(Checkpoint, Truncated) {
  std::stringstream ss("cclab-checkpoint 1\nomega golden 0.6\nlambda 1000\n");
  EXPECT_THROW(read_checkpoint(ss), Error);
}

TEST(Construction, FiniteLeFloorAtLastLevel) {
  const ConstructionState& s = three_level_run().second;
  FiniteLeEstimate e = finite_le_returns(s.cocycle(), s.intervals(), 64);
  EXPECT_GE(e.log_mu_lower, s.log_lambda_k());
}
