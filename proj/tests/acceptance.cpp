// One line per criterion: PASS/FAIL, measured values, runtime. Exit status 1 if any criterion fails.
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "cclab/cocycle.hpp"
#include "cclab/construct.hpp"
#include "cclab/destruct.hpp"
#include "cclab/profiles.hpp"
#include "cclab/rotation.hpp"
#include "cclab/sl2.hpp"

using namespace cclab;

namespace {

int failures = 0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
  auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool in_time = budget_s <= 0 || dt < budget_s;
  if (!in_time) o.detail += fmt("; over the %.0f s budget", budget_s);
  bool ok = o.pass && in_time;
  if (!ok) ++failures;
  std::printf("%s [%2d] %s: %s (%.1f s)\n", ok ? "PASS" : "FAIL", id, name, o.detail.c_str(), dt);
  std::fflush(stdout);
}

double angle_err(double a, double b) { return std::abs(reduce_half_pi(a - b)); }

double rel_diff(const Mat2& a, const Mat2& b) {
  Mat2 d{a.a11 - b.a11, a.a12 - b.a12, a.a21 - b.a21, a.a22 - b.a22};
  return d.norm() / b.norm();
}

// long double product of two reconstructed triples
struct LMat {
  long double a, b, c, d;
};
LMat lrecon(const HyperbolicTriple& t) {
  long double e = std::exp(static_cast<long double>(t.alpha));
  long double cp = std::cos(static_cast<long double>(t.psi)), sp = std::sin(static_cast<long double>(t.psi));
  long double cf = std::cos(static_cast<long double>(t.phi)), sf = std::sin(static_cast<long double>(t.phi));
  // R_psi diag(e, 1/e) R_phi
  long double m11 = cp * e, m12 = -sp / e, m21 = sp * e, m22 = cp / e;
  return {m11 * cf + m12 * sf, -m11 * sf + m12 * cf, m21 * cf + m22 * sf, -m21 * sf + m22 * cf};
}

long double lnorm(const LMat& m) {
  long double p = std::hypot(m.a + m.d, m.c - m.b), q = std::hypot(m.a - m.d, m.b + m.c);
  return (p + q) / 2;
}

const ConstructionState& construction() {
  static const ConstructionState s = [] {
    ConstructParams p;
    p.lambda = 1000;
    p.l = 1;
    p.qN = 21;
    p.steps = 3;
    return run_construction(init_construction(p));
  }();
  return s;
}

}  // namespace

int main() {
  std::printf("acceptance: golden omega, lambda = 1000, l = 1, q_N = 21\n");

  criterion(1, "decomposition round-trip, 1e5 matrices", 10, [] {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> A(1e-4, 30), U(-kPi, kPi);
    double worst_norm = 0, worst_ang = 0;
    for (int i = 0; i < 100000; ++i) {
      HyperbolicTriple t{U(rng), A(rng), U(rng)};
      Mat2 m = t.reconstruct();
      HyperbolicTriple d = decompose(m);
      worst_norm = std::max(worst_norm, rel_diff(d.reconstruct(), m));
      worst_ang = std::max({worst_ang, angle_err(d.phi, t.phi), angle_err(d.psi, t.psi)});
    }
    return Outcome{worst_norm <= 1e-10 && worst_ang <= 1e-8,
                   fmt("max rel norm err %.2e (<= 1e-10), max angle err %.2e (<= 1e-8)", worst_norm, worst_ang)};
  });

  criterion(2, "norm sandwich N/4 <= |BA|^2 <= N, 1e5 triples", 10, [] {
    std::mt19937_64 rng(102);
    std::uniform_real_distribution<double> A(0.05, 40), T(0, kPi);
    int violations = 0, evaluated = 0;
    double lo_margin = INFINITY, hi_margin = INFINITY;
    for (int i = 0; i < 100000; ++i) {
      double aA = A(rng), aB = A(rng), th = T(rng);
      LMat x = lrecon(HyperbolicTriple{0, aA, 0}), y = lrecon(HyperbolicTriple{0, aB, th});
      double l2 = 2 * static_cast<double>(std::log(lnorm({y.a * x.a + y.b * x.c, y.a * x.b + y.b * x.d,
                                                           y.c * x.a + y.d * x.c, y.c * x.b + y.d * x.d})));
      double logN = log_sandwich_N(aA, aB, th);
      ++evaluated;
      // a few ulps of the logs: the upper bound is attained at theta = 0
      double ulp = 64 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(logN));
      if (l2 > logN + ulp || l2 < logN - std::log(4.0) - ulp) ++violations;
      hi_margin = std::min(hi_margin, logN - l2);
      lo_margin = std::min(lo_margin, l2 - (logN - std::log(4.0)));
    }
    return Outcome{violations == 0 && evaluated == 100000,
                   fmt("%d violations; min log margins: upper %.2e, lower %.2e", violations, hi_margin, lo_margin)};
  });

  criterion(3, "compose vs dense multiply, 1e4 pairs", 30, [] {
    std::mt19937_64 rng(103);
    std::uniform_real_distribution<double> A(1e-3, 150), U(-kPi, kPi);
    double worst_a = 0, worst_ang = 0;
    int n = 0, skipped = 0;
    while (n < 10000) {
      HyperbolicTriple a{U(rng), A(rng), U(rng)}, b{U(rng), A(rng), U(rng)};
      LMat x = lrecon(a), y = lrecon(b);
      Mat2 m{static_cast<double>(y.a * x.a + y.b * x.c), static_cast<double>(y.a * x.b + y.b * x.d),
             static_cast<double>(y.c * x.a + y.d * x.c), static_cast<double>(y.c * x.b + y.d * x.d)};
      HyperbolicTriple D;
      try {
        D = decompose(m);
      } catch (const Error&) {
        ++skipped;
        continue;
      }
      HyperbolicTriple C = compose(b, a);
      worst_a = std::max(worst_a, std::abs(C.alpha - D.alpha) / std::max(1.0, D.alpha));
      worst_ang = std::max({worst_ang, angle_err(C.phi, D.phi), angle_err(C.psi, D.psi)});
      ++n;
    }
    return Outcome{worst_a <= 1e-10 && worst_ang <= 1e-8,
                   fmt("max rel log-norm err %.2e (<= 1e-10), max angle err %.2e (<= 1e-8), %d non-hyperbolic skipped",
                       worst_a, worst_ang, skipped)};
  });

  criterion(4, "rotation shift phi(A R_theta) = phi(A) + theta, 1e4 cases", 0, [] {
    std::mt19937_64 rng(104);
    std::uniform_real_distribution<double> A(0.01, 30), U(-kPi, kPi);
    double worst = 0;
    for (int i = 0; i < 10000; ++i) {
      HyperbolicTriple t{U(rng), A(rng), U(rng)};
      double th = U(rng);
      HyperbolicTriple r = decompose(t.reconstruct() * rotation(th));
      worst = std::max({worst, angle_err(r.phi, t.phi + th), angle_err(r.psi, t.psi)});
    }
    return Outcome{worst <= 1e-10, fmt("max err mod pi %.2e (<= 1e-10)", worst)};
  });

  criterion(5, "return times, q in {13,21,34,55}", 0, [] {
    RotationNumber w = golden();
    bool ok = true;
    std::string d;
    for (std::int64_t q : {13, 21, 34, 55}) {
      ResonanceIntervals I = resonance_intervals(q);
      std::int64_t mf = INT64_MAX, mb = INT64_MAX;
      for (int comp = 0; comp < 2; ++comp)
        for (Real x : arc_grid(I.center(comp), I.half_width, 1000)) {
          mf = std::min(mf, first_return(w, I, x, Direction::Forward).time);
          mb = std::min(mb, first_return(w, I, x, Direction::Backward).time);
        }
      bool good = mf >= q && mb >= q && mf == mb;
      ok = ok && good;
      d += fmt("%sq=%lld min r+ %lld min r- %lld", d.empty() ? "" : "; ", static_cast<long long>(q),
               static_cast<long long>(mf), static_cast<long long>(mb));
    }
    return Outcome{ok, d};
  });

  criterion(6, "construction, 3 steps: flatness, separation, growth", 600, [] {
    const ConstructionState& s = construction();
    bool ok = s.reports.size() == 3;
    std::string d;
    for (const VerifyReport& r : s.reports) {
      double q2 = static_cast<double>(r.q) * static_cast<double>(r.q);
      double sep = std::pow(1 / (20 * q2), 2);
      bool good = r.flatness <= 1e-6 && r.separation_min >= sep && r.growth_min >= r.log_lambda_k;
      ok = ok && good;
      d += fmt("%sq=%lld flat %.1e sep %.2e/%.2e growth %.4f/%.4f", d.empty() ? "" : "; ",
               static_cast<long long>(r.q), r.flatness, r.separation_min, sep, r.growth_min, r.log_lambda_k);
    }
    return Outcome{ok, d};
  });

  criterion(7, "finite-LE floor at n = r_K over the circle", 600, [] {
    const ConstructionState& s = construction();
    std::int64_t rK = s.reports.back().r_min;
    FiniteLeEstimate e = finite_le(s.cocycle(), rK, 4001);
    double floor = 0.85 * std::log(1000.0);
    return Outcome{e.value >= floor, fmt("L_%lld = %.6f (>= %.6f), pointwise min %.4f max %.4f",
                                         static_cast<long long>(rK), e.value, floor, e.log_mu_lower, e.log_mu_upper)};
  });

  criterion(8, "destruction step: decay, flatness, comparability", 1800, [] {
    DestructionState s = init_destruction(construction());
    DestructionState t = destruction_step(s);
    const DecayRow& r = t.decay.at(0);
    bool ok = r.strict_decay && r.mechanism_ok && t.final_report.flatness <= 1e-6 && r.comparable;
    return Outcome{ok, fmt("n %lld -> %lld; log mu_up %.6f -> %.6f (bound %.6f, rho %.4f, delta0 %.2e); "
                           "flatness %.1e; log mu_low %.6f, 2 log mu_low %.4f",
                           static_cast<long long>(r.n_prev), static_cast<long long>(r.n), r.log_mu_upper_prev,
                           r.log_mu_upper, r.log_bound_mechanism, r.rho, t.delta0, t.final_report.flatness,
                           r.log_mu_lower, 2 * r.log_mu_lower)};
  });

  criterion(9, "derivative-bound probes, orders 0 and 1", 0, [] {
    bool ok = true;
    std::string d;
    for (ProbeQuantity q : {ProbeQuantity::Phi, ProbeQuantity::Psi})
      for (int order : {0, 1}) {
        ProbeSweep s = probe_sweep(q, order, 1000, 109);
        ok = ok && s.stable() && s.samples.size() == 1000;
        d += fmt("%s%s/%d C=%.3g max %.3g", d.empty() ? "" : "; ", q == ProbeQuantity::Phi ? "phi" : "psi", order,
                 s.constant, s.check_max);
      }
    return Outcome{ok, d};
  });

  criterion(10, "Schroedinger 6 cos(2 pi x), E = 0: L_2000 >= log 3 - 0.05", 60, [] {
    Cocycle c = schrodinger(golden(), [](Real x) { return 6 * std::cos(kTwoPi * static_cast<double>(x)); }, 0);
    FiniteLeEstimate e = finite_le(c, 2000, 4001);
    double floor = std::log(3.0) - 0.05;
    return Outcome{e.value >= floor, fmt("L_2000 = %.6f (>= %.6f)", e.value, floor)};
  });

  criterion(11, "smooth bump case table and |g^(r)| <= q^(3r), q = 21", 0, [] {
    const std::int64_t q = 21;
    ResonanceIntervals I = resonance_intervals(q);
    AngleProfile g = smooth_bump(I);
    double hw = static_cast<double>(I.half_width);
    int bad = 0;
    for (int i = 0; i < 10000; ++i) {
      double x = (i + 0.5) / 10000;
      double v = g(x);
      double dist = std::min({x, 1 - x, std::abs(x - 0.5)});
      if (dist <= hw / 10 ? v != 1 : dist >= hw ? v != 0 : !(v >= 0 && v <= 1)) ++bad;
    }
    double d1 = 0, d2 = 0;
    for (int i = 0; i < 10000; ++i) {
      double y = hw / 10 + 0.9 * hw * (i + 0.5) / 10000;
      for (double x : {y, 0.5 + y, 1 - y}) {
        std::vector<double> d = g.derivs(x, 2);
        d1 = std::max(d1, std::abs(d[1]));
        d2 = std::max(d2, std::abs(d[2]));
      }
    }
    double b1 = std::pow(21.0, 3), b2 = std::pow(21.0, 6);
    return Outcome{bad == 0 && d1 <= b1 && d2 <= b2,
                   fmt("%d case-table misses; max |g'| %.3e (<= %.3e), max |g''| %.3e (<= %.3e)", bad, d1, b1, d2, b2)};
  });

  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
