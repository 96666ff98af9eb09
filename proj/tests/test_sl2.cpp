#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cclab/sl2.hpp"

using namespace cclab;

namespace {

double angle_err_mod_pi(double a, double b) { return std::abs(reduce_half_pi(a - b)); }

// triples equal as matrices: same alpha, and angles equal mod pi with the coupled sign
void expect_same_triple(const HyperbolicTriple& a, const HyperbolicTriple& b, double ang, double rel) {
  EXPECT_NEAR(a.alpha, b.alpha, rel * std::max(1.0, std::abs(b.alpha)));
  EXPECT_LT(angle_err_mod_pi(a.phi, b.phi), ang);
  EXPECT_LT(angle_err_mod_pi(a.psi, b.psi), ang);
}

}  // namespace

TEST(Decompose, Diagonal) {
  HyperbolicTriple t = decompose(diag(3, 1.0 / 3));
  EXPECT_NEAR(t.psi, 0, 1e-15);
  EXPECT_NEAR(t.alpha, std::log(3.0), 1e-15);
  EXPECT_NEAR(t.phi, 0, 1e-15);
}

TEST(Decompose, RoundTripExample) {
  Mat2 A = rotation(0.7) * diag(5, 0.2) * rotation(0.3);
  HyperbolicTriple t = decompose(A);
  EXPECT_NEAR(t.psi, 0.7, 1e-12);
  EXPECT_NEAR(t.alpha, std::log(5.0), 1e-12);
  EXPECT_NEAR(t.phi, 0.3, 1e-12);
}

TEST(Decompose, RotationIsNotHyperbolic) {
  try {
    decompose(rotation(0.4));
    FAIL() << "expected NonHyperbolic";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonHyperbolic);
  }
}

TEST(Decompose, BranchConvention) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-10, 10), A(1e-3, 20);
  for (int i = 0; i < 2000; ++i) {
    HyperbolicTriple t{U(rng), A(rng), U(rng)};
    HyperbolicTriple d = decompose(t.reconstruct());
    EXPECT_GE(d.phi, 0);
    EXPECT_LT(d.phi, kPi);
    EXPECT_GT(d.psi, -kPi);
    EXPECT_LE(d.psi, kPi);
    Mat2 r = d.reconstruct(), m = t.reconstruct();
    double s = m.norm();
    EXPECT_NEAR(r.a11, m.a11, 1e-10 * s);
    EXPECT_NEAR(r.a12, m.a12, 1e-10 * s);
    EXPECT_NEAR(r.a21, m.a21, 1e-10 * s);
    EXPECT_NEAR(r.a22, m.a22, 1e-10 * s);
    EXPECT_NEAR(r.det(), 1, 1e-10 * s * s);
  }
}

TEST(Compose, ThetaZeroMultipliesNorms) {
  HyperbolicTriple A{0.4, 2.5, 1.1}, B{-0.3, 1.5, kPi - 0.4};
  HyperbolicTriple C = compose(B, A);
  EXPECT_NEAR(C.alpha, 4.0, 1e-12);
  EXPECT_LT(angle_err_mod_pi(C.phi, 1.1), 1e-12);
  EXPECT_LT(angle_err_mod_pi(C.psi, -0.3), 1e-12);
}

TEST(Compose, MatchesDenseAt2And2) {
  HyperbolicTriple A{0.2, 2, 0.5}, B{0.9, 2, 1.0 - 0.2};
  HyperbolicTriple C = compose(B, A);
  HyperbolicTriple D = decompose(B.reconstruct() * A.reconstruct());
  expect_same_triple(C, D, 1e-8, 1e-10);
  Mat2 rc = C.reconstruct(), rd = B.reconstruct() * A.reconstruct();
  EXPECT_NEAR(rc.a11, rd.a11, 1e-8 * rd.norm());
  EXPECT_NEAR(rc.a21, rd.a21, 1e-8 * rd.norm());
}

TEST(Compose, AntidiagonalAtHalfPi) {
  HyperbolicTriple A{0, 3, 0}, B{0, 1, kHalfPi};
  EXPECT_NEAR(compose(B, A).alpha, 2, 1e-12);
}

TEST(Compose, NonHyperbolicProduct) {
  HyperbolicTriple A{0, 1, 0}, B{0, 1, kHalfPi};
  try {
    compose(B, A);
    FAIL() << "expected NonHyperbolic";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonHyperbolic);
  }
}

TEST(AngleCorrection, ThetaZero) {
  AngleCorrection c = angle_correction(2, 3, 0);
  EXPECT_EQ(c.phi_corr, 0);
  EXPECT_EQ(c.psi_corr, 0);
}

TEST(AngleCorrection, HalfPiBranches) {
  // b < 0 when alpha_A < alpha_B
  AngleCorrection neg = angle_correction(1, 3, kHalfPi);
  EXPECT_LT(neg.b.sign, 0);
  EXPECT_DOUBLE_EQ(neg.phi_corr, -kHalfPi);
  AngleCorrection pos = angle_correction(3, 1, kHalfPi);
  EXPECT_GT(pos.b.sign, 0);
  EXPECT_DOUBLE_EQ(pos.phi_corr, 0);
}

TEST(AngleCorrection, MatchesDenseOracle) {
  HyperbolicTriple A{0.3, 2, 0.6}, B{-0.2, 2, 1.0 - 0.3};
  AngleCorrection c = angle_correction(2, 2, 1.0);
  HyperbolicTriple D = decompose(B.reconstruct() * A.reconstruct());
  EXPECT_LT(angle_err_mod_pi(c.phi_corr, A.phi - D.phi), 1e-8);
}

TEST(AngleCorrection, ReducedFormKeepsPrecision) {
  // correction of order e^{-2 alpha_A}: far below double resolution of the angle itself
  AngleCorrection c = angle_correction(400, 300, 1.0);
  EXPECT_NE(c.phi_reduced.sign, 0);
  EXPECT_LT(c.phi_reduced.log, -700);
  // |phi| ~ 1/(2f) with f ~ a cot(theta), a ~ e^{2 alpha_A}/2
  double expect = -2 * 400.0 + std::log(std::tan(1.0));
  EXPECT_NEAR(c.phi_reduced.log, expect, 1e-6);
}

TEST(Compose, RandomOracleSweep) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0, kPi), A(0.1, 40), S(-kPi, kPi);
  int checked = 0;
  for (int i = 0; i < 3000; ++i) {
    HyperbolicTriple a{S(rng), A(rng), U(rng)}, b{S(rng), A(rng), U(rng)};
    HyperbolicTriple C;
    try {
      C = compose(b, a);
    } catch (const Error&) {
      continue;
    }
    ScaledMat d = dense_product(b, a);
    HyperbolicTriple D = decompose_unchecked(d.m);
    D.alpha += d.log_scale;
    expect_same_triple(C, D, 1e-8, 1e-10);
    ++checked;
  }
  EXPECT_GT(checked, 2900);
}

TEST(Compose, SandwichBounds) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> U(0, kPi), A(0.1, 30);
  for (int i = 0; i < 20000; ++i) {
    double aA = A(rng), aB = A(rng), th = U(rng);
    HyperbolicTriple a{0, aA, 0}, b{0, aB, th};
    double logN = log_sandwich_N(aA, aB, th);
    double l2;
    try {
      l2 = 2 * compose(b, a).alpha;
    } catch (const Error&) {
      continue;
    }
    EXPECT_LE(l2, logN + 1e-12);
    EXPECT_GE(l2, logN - std::log(4.0) - 1e-12);
  }
}

TEST(Compose, RotationShift) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-kPi, kPi), A(0.1, 20);
  for (int i = 0; i < 3000; ++i) {
    HyperbolicTriple t{U(rng), A(rng), U(rng)};
    double th = U(rng);
    HyperbolicTriple r = decompose(t.reconstruct() * rotation(th));
    EXPECT_LT(angle_err_mod_pi(r.phi, t.phi + th), 1e-10);
    EXPECT_LT(angle_err_mod_pi(r.psi, t.psi), 1e-10);
  }
}

TEST(Compose, Associativity) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(0, kPi), A(0.5, 50), S(-kPi, kPi);
  for (int i = 0; i < 2000; ++i) {
    HyperbolicTriple a{S(rng), A(rng), U(rng)}, b{S(rng), A(rng), U(rng)}, c{S(rng), A(rng), U(rng)};
    HyperbolicTriple l, r;
    try {
      l = compose(c, compose(b, a));
      r = compose(compose(c, b), a);
    } catch (const Error&) {
      continue;
    }
    expect_same_triple(l, r, 1e-8, 1e-10);
  }
}

TEST(Compose, LargeNormsStayFinite) {
  HyperbolicTriple a{0.1, 5000, 0.7}, b{0.2, 7000, 0.4};
  HyperbolicTriple c = compose(b, a);
  EXPECT_TRUE(std::isfinite(c.alpha));
  EXPECT_GT(c.alpha, 11000);
  EXPECT_LE(c.alpha, 12000);
}

TEST(Probe, PhiOrderZeroExample) {
  ProbeResult r = derivative_bound_probe(5, 5, kHalfPi + 0.1, 0, ProbeQuantity::Phi);
  EXPECT_LE(r.measured, 10 * std::exp(-10.0) * 10);
}

TEST(Probe, ThetaZeroGivesZero) {
  ProbeResult r = derivative_bound_probe(5, 5, 0, 0, ProbeQuantity::Phi);
  EXPECT_EQ(r.measured, 0);
  EXPECT_EQ(r.bound_ratio, 0);
}

TEST(Probe, NormOrderOneExample) {
  ProbeResult r = derivative_bound_probe(4, 4, kHalfPi + 0.05, 1, ProbeQuantity::Norm);
  EXPECT_LE(r.bound_ratio, 100);
}

TEST(Probe, HypothesisEnforced) {
  EXPECT_THROW(derivative_bound_probe(1, 1, kHalfPi + 0.01, 0, ProbeQuantity::Phi), Error);
  EXPECT_THROW(derivative_bound_probe(5, 5, kHalfPi, 1, ProbeQuantity::Phi), Error);
}

TEST(Probe, SweepConstantsStable) {
  for (ProbeQuantity q : {ProbeQuantity::Phi, ProbeQuantity::Psi})
    for (int order : {0, 1}) {
      ProbeSweep s = probe_sweep(q, order, 400, 3);
      EXPECT_TRUE(s.stable());
      // scaling exponent: per-decade maxima agree within a factor 10
      double lo = *std::min_element(s.decade_max.begin(), s.decade_max.end());
      double hi = *std::max_element(s.decade_max.begin(), s.decade_max.end());
      EXPECT_LE(hi, 10 * lo);
    }
}

TEST(SLog, Arithmetic) {
  SLog a = SLog::from(3), b = SLog::from(-2);
  EXPECT_NEAR((a + b).value(), 1, 1e-15);
  EXPECT_NEAR((a * b).value(), -6, 1e-14);
  EXPECT_EQ((a + (-a)).sign, 0);
  SLog tiny{1, -2000}, tiny2{1, -2000 + std::log(3.0)};
  SLog s = tiny + tiny2;
  EXPECT_NEAR(s.log, -2000 + std::log(4.0), 1e-12);
}
