#include "cclab/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "cclab/cocycle.hpp"
#include "cclab/construct.hpp"
#include "cclab/destruct.hpp"
#include "cclab/profiles.hpp"
#include "cclab/rotation.hpp"
#include "cclab/sl2.hpp"

namespace cclab {

namespace {

using json = nlohmann::ordered_json;
using detail::num;

struct Common {
  std::string omega = "golden";
  std::string out = ".";
  int threads = 0;
  std::uint64_t seed = 1;
  std::string checkpoint;
};

struct ConstructOpts {
  double lambda = 1000;
  std::string l = "1";
  double a = 0.05;
  std::int64_t qN = 21;
  int steps = 3;
  double eps = 0.1;
  std::string branch = "homotopic";
  int grid = 512;
  int verify_samples = 64;
  bool strict_feasibility = false;
  double qmax = 4e9;
};

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string omega_string(const RotationNumber& w) {
  std::ostringstream os;
  os << std::setprecision(21) << w.value;
  return os.str();
}

std::filesystem::path out_file(const Common& c, const std::string& name) {
  std::filesystem::create_directories(c.out);
  return std::filesystem::path(c.out) / name;
}

std::ofstream open_out(const Common& c, const std::string& name) {
  std::ofstream f(out_file(c, name));
  if (!f) throw Error(ErrorKind::InvalidParams, "cannot write " + out_file(c, name).string());
  return f;
}

int threads_of(const Common& c) { return c.threads > 0 ? c.threads : default_threads(); }

ConstructParams construct_params(const Common& c, const ConstructOpts& o) {
  ConstructParams p;
  p.omega = parse_omega(c.omega);
  p.lambda = o.lambda;
  if (o.l == "inf" || o.l == "infinity") {
    p.l = kSmoothInfinite;
  } else {
    try {
      std::size_t used = 0;
      p.l = std::stoi(o.l, &used);
      if (used != o.l.size()) throw std::invalid_argument(o.l);
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidParams, "--l expects an integer or 'inf'");
    }
  }
  p.a = o.a;
  p.qN = o.qN;
  p.steps = o.steps;
  p.eps = o.eps;
  if (o.branch == "homotopic") p.branch = Branch::Homotopic;
  else if (o.branch == "nonhomotopic") p.branch = Branch::Nonhomotopic;
  else throw Error(ErrorKind::InvalidParams, "--branch expects homotopic or nonhomotopic");
  p.grid = o.grid;
  p.verify_samples = o.verify_samples;
  p.strict_feasibility = o.strict_feasibility;
  p.threads = threads_of(c);
  p.qmax = static_cast<std::int64_t>(o.qmax);
  return p;
}

json params_json(const ConstructParams& p) {
  json j;
  j["omega"] = omega_string(p.omega);
  j["omega_label"] = p.omega.label;
  j["lambda"] = p.lambda;
  j["l"] = p.l == kSmoothInfinite ? json("inf") : json(p.l);
  j["a"] = p.a;
  j["qN"] = p.qN;
  j["steps"] = p.steps;
  j["eps"] = p.eps;
  j["branch"] = p.branch == Branch::Homotopic ? "homotopic" : "nonhomotopic";
  j["grid"] = p.grid;
  j["verify_samples"] = p.verify_samples;
  j["strict_feasibility"] = p.strict_feasibility;
  j["qmax"] = p.qmax;
  return j;
}

json manifest_head(const std::string& command, const Common& c, const std::vector<std::string>& args) {
  json m;
  m["tool"] = "cclab";
  m["version"] = kToolVersion;
  m["command"] = command;
  m["argv"] = args;
  m["timestamp"] = utc_now();
  m["threads"] = threads_of(c);
  m["seed"] = c.seed;
  return m;
}

void write_manifest(const Common& c, const json& m) {
  std::ofstream f = open_out(c, "manifest.json");
  f << m.dump(2) << "\n";
}

void write_report_csv(std::ostream& f, const std::vector<VerifyReport>& reports, const std::vector<Increment>& incs) {
  f << "q,flatness,log_interp_residual,separation_min,separation_bound,growth_min,growth_max,log_lambda_k,r_min,r_max,"
       "log_defect_max,log_cl_norm,flat_ok,sep_ok,growth_ok\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const VerifyReport& r = reports[i];
    Increment inc = i < incs.size() ? incs[i] : Increment{};
    f << r.q << "," << num(r.flatness) << "," << num(r.log_interp_residual) << "," << num(r.separation_min) << ","
      << num(r.separation_bound) << "," << num(r.growth_min) << "," << num(r.growth_max) << "," << num(r.log_lambda_k)
      << "," << r.r_min << "," << r.r_max << "," << num(inc.log_defect_max) << "," << num(inc.log_cl_norm) << ","
      << r.flat_ok << "," << r.sep_ok << "," << r.growth_ok << "\n";
  }
}

json report_json(const VerifyReport& r) {
  json j;
  j["q"] = r.q;
  j["flatness"] = r.flatness;
  j["separation_min"] = r.separation_min;
  j["separation_bound"] = r.separation_bound;
  j["growth_min"] = r.growth_min;
  j["growth_max"] = r.growth_max;
  j["log_lambda_k"] = r.log_lambda_k;
  j["pass"] = r.pass();
  return j;
}

// ------------------------------------------------------------------ subcommands

int cmd_cf(const Common& c, int depth, std::ostream& out, const std::vector<std::string>& args) {
  RotationNumber w = parse_omega(c.omega, std::max(depth, 1), false);
  std::ofstream f = open_out(c, "cf.csv");
  f << "k,a_k,p_k,q_k\n";
  for (std::size_t k = 0; k < w.q.size(); ++k)
    f << k << "," << (k == 0 ? 0 : w.partial_quotients[k - 1]) << "," << w.p[k] << "," << w.q[k]
      << "\n";
  json m = manifest_head("cf", c, args);
  m["parameters"] = {{"omega", omega_string(w)}, {"depth", depth}};
  m["results"] = {{"terminated", w.terminated}, {"bounded_type_M", w.bounded_type_M}, {"convergents", w.q.size()}};
  write_manifest(c, m);
  out << "omega " << omega_string(w) << " convergents " << w.q.size() << " M " << w.bounded_type_M
      << (w.terminated ? " (terminated)" : "") << "\n";
  return kExitOk;
}

int cmd_returns(const Common& c, std::vector<std::int64_t> qs, int samples, std::ostream& out,
                const std::vector<std::string>& args) {
  RotationNumber w = parse_omega(c.omega);
  if (samples < 2) throw Error(ErrorKind::InvalidParams, "--samples must be >= 2");
  std::ofstream f = open_out(c, "returns.csv");
  std::ofstream g = open_out(c, "returns_summary.csv");
  f << "q,component,x,r_plus,r_minus\n";
  g << "q,samples,min_r_plus,min_r_minus,max_r_plus,max_r_minus,min_ge_q,min_equal\n";
  bool all = true;
  json res = json::array();
  for (std::int64_t q : qs) {
    ResonanceIntervals I = resonance_intervals(q);
    std::vector<std::int64_t> rp(2 * samples), rm(2 * samples);
    std::vector<Real> xs(2 * samples);
    for (int comp = 0; comp < 2; ++comp) {
      std::vector<Real> grid = arc_grid(I.center(comp), I.half_width, samples);
      for (int j = 0; j < samples; ++j) xs[comp * samples + j] = grid[j];
    }
    parallel_for(xs.size(), threads_of(c), [&](std::size_t i) {
      rp[i] = first_return(w, I, xs[i], Direction::Forward).time;
      rm[i] = first_return(w, I, xs[i], Direction::Backward).time;
    });
    for (std::size_t i = 0; i < xs.size(); ++i)
      f << q << "," << i / samples << "," << num(static_cast<double>(xs[i])) << "," << rp[i] << "," << rm[i] << "\n";
    auto [pmin, pmax] = std::minmax_element(rp.begin(), rp.end());
    auto [mmin, mmax] = std::minmax_element(rm.begin(), rm.end());
    bool ge = std::min(*pmin, *mmin) >= q;
    bool eq = *pmin == *mmin;
    all = all && ge && eq;
    g << q << "," << xs.size() << "," << *pmin << "," << *mmin << "," << *pmax << "," << *mmax << "," << ge << ","
      << eq << "\n";
    out << "q " << q << ": r+ in [" << *pmin << ", " << *pmax << "], r- in [" << *mmin << ", " << *mmax << "]"
        << (ge && eq ? "" : "  FAIL") << "\n";
    res.push_back({{"q", q}, {"min_r_plus", *pmin}, {"min_r_minus", *mmin}, {"min_ge_q", ge}, {"min_equal", eq}});
  }
  json m = manifest_head("returns", c, args);
  m["parameters"] = {{"omega", omega_string(w)}, {"q", qs}, {"samples_per_component", samples}};
  m["results"] = res;
  m["pass"] = all;
  write_manifest(c, m);
  return all ? kExitOk : kExitInvariant;
}

int cmd_decompose(const std::string& entries, std::ostream& out) {
  std::vector<double> v;
  std::stringstream ss(entries);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      v.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw Error(ErrorKind::ParseError, "bad matrix entry '" + tok + "'");
    }
  }
  if (v.size() != 4) throw Error(ErrorKind::ParseError, "--matrix expects a11,a12,a21,a22");
  Mat2 A{v[0], v[1], v[2], v[3]};
  double det = A.det();
  if (std::abs(det - 1) > 1e-10 * std::max(1.0, A.norm() * A.norm()))
    throw Error(ErrorKind::InvalidParams, "determinant " + num(det) + " is not 1");
  HyperbolicTriple t = decompose(A);
  out << "psi,alpha,phi\n" << num(t.psi) << "," << num(t.alpha) << "," << num(t.phi) << "\n";
  return kExitOk;
}

int cmd_le(const Common& c, const std::string& potential, double energy, std::int64_t n, int grid, std::ostream& out,
           const std::vector<std::string>& args) {
  json m = manifest_head("le", c, args);
  Cocycle cy;
  double floor = kNegInf;
  json params;
  if (!c.checkpoint.empty()) {
    ConstructionState s = load_checkpoint(c.checkpoint);
    cy = s.cocycle();
    if (n <= 0) {
      if (s.reports.empty()) throw Error(ErrorKind::InvalidParams, "checkpoint has no reports to take r_K from");
      n = s.reports.back().r_min;
    }
    floor = (1 - 0.15) * std::log(s.params.lambda);
    params = params_json(s.params);
    params["checkpoint"] = c.checkpoint;
  } else if (!potential.empty()) {
    PotentialSpec ps = parse_potential(potential);
    RotationNumber w = parse_omega(c.omega);
    double A = ps.amplitude;
    std::string fn = ps.fn;
    auto v = [A, fn](Real x) {
      double t = kTwoPi * static_cast<double>(x);
      return fn == "cos" ? A * std::cos(t) : fn == "sin" ? A * std::sin(t) : A;
    };
    cy = schrodinger(w, v, energy);
    // v = 2 lambda cos: Herman's bound log lambda for |lambda| > 1
    if (!fn.empty() && std::abs(A) / 2 > 1) floor = std::log(std::abs(A) / 2) - 0.05;
    params = {{"omega", omega_string(w)}, {"potential", potential}, {"amplitude", A}, {"function", fn},
              {"energy", energy}};
  } else {
    throw Error(ErrorKind::InvalidParams, "le needs --schrodinger or --checkpoint");
  }
  if (n <= 0) throw Error(ErrorKind::InvalidParams, "--n must be positive");
  FiniteLeEstimate e = finite_le(cy, n, grid, std::nullopt, threads_of(c));
  std::ofstream f = open_out(c, "le.csv");
  f << "n,grid,value,log_mu_lower,log_mu_upper,floor,pass\n";
  bool ok = e.value >= floor;
  f << e.n << "," << e.grid_size << "," << num(e.value) << "," << num(e.log_mu_lower) << "," << num(e.log_mu_upper)
    << "," << num(floor) << "," << ok << "\n";
  params["n"] = n;
  params["grid"] = grid;
  m["parameters"] = params;
  m["results"] = {{"value", e.value}, {"log_mu_lower", e.log_mu_lower}, {"log_mu_upper", e.log_mu_upper},
                  {"floor", std::isfinite(floor) ? json(floor) : json(nullptr)}};
  m["pass"] = ok;
  write_manifest(c, m);
  out << "L_" << n << " = " << num(e.value) << " (grid " << grid << ")";
  if (std::isfinite(floor)) out << ", floor " << num(floor) << (ok ? " ok" : " FAIL");
  out << "\n";
  return ok ? kExitOk : kExitInvariant;
}

int cmd_construct(const Common& c, const ConstructOpts& o, std::ostream& out, const std::vector<std::string>& args) {
  ConstructParams p = construct_params(c, o);
  auto t0 = std::chrono::steady_clock::now();
  ConstructionState s = init_construction(p);
  bool all = true;
  while (!s.done()) {
    s = correction_step(s);
    VerifyReport r = verify_step(s, p.verify_samples);
    s.reports.push_back(r);
    all = all && r.pass();
    out << "q " << r.q << ": flatness " << num(r.flatness) << ", separation " << num(r.separation_min) << " >= "
        << num(r.separation_bound) << ", growth " << num(r.growth_min) << " >= " << num(r.log_lambda_k)
        << (r.pass() ? "  ok" : "  FAIL") << "\n";
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  {
    std::ofstream f = open_out(c, "construct.csv");
    write_report_csv(f, s.reports, s.increments);
  }
  {
    std::ofstream f = open_out(c, "schedule.csv");
    f << "q,log_lambda_k\n";
    for (std::size_t k = 0; k < s.schedule.q.size(); ++k) f << s.schedule.q[k] << "," << num(s.schedule.log_lambda[k]) << "\n";
  }
  {
    std::ofstream f = open_out(c, "xi.profile");
    write_profile(f, s.xi);
  }
  std::string ck = c.checkpoint.empty() ? out_file(c, "construct.ckpt").string() : c.checkpoint;
  save_checkpoint(ck, s);
  json m = manifest_head("construct", c, args);
  m["parameters"] = params_json(p);
  json res;
  res["levels"] = s.levels;
  res["log_lambda"] = s.schedule.log_lambda;
  res["tail_sum"] = s.schedule.tail_sum;
  res["feasible"] = s.schedule.feasible();
  res["final_margin"] = s.schedule.final_margin;
  res["reports"] = json::array();
  for (const auto& r : s.reports) res["reports"].push_back(report_json(r));
  res["log_cl_increments"] = json::array();
  for (const auto& i : s.increments)
    res["log_cl_increments"].push_back(std::isfinite(i.log_cl_norm) ? json(i.log_cl_norm) : json(nullptr));
  res["checkpoint"] = ck;
  res["seconds"] = secs;
  m["results"] = res;
  m["pass"] = all;
  write_manifest(c, m);
  if (!s.schedule.feasible())
    out << "note: feasibility of the schedule fails (tail sum " << num(s.schedule.tail_sum) << ", eps "
        << num(s.schedule.eps) << ")\n";
  return all ? kExitOk : kExitInvariant;
}

int cmd_destruct(const Common& c, const ConstructOpts& o, const DestructParams& dp, std::ostream& out,
                 const std::vector<std::string>& args) {
  ConstructionState A;
  if (!c.checkpoint.empty()) {
    A = load_checkpoint(c.checkpoint);
    A.params.threads = threads_of(c);
  } else {
    A = run_construction(init_construction(construct_params(c, o)));
  }
  if (!A.done()) throw Error(ErrorKind::InvalidParams, "construction in the checkpoint is not complete");
  for (const auto& r : A.reports)
    if (!r.pass()) throw Error(ErrorKind::InvalidParams, "construction at q=" + std::to_string(r.q) + " did not verify");
  DestructionState s = init_destruction(A, dp);
  out << "n0 " << s.n << ": log mu in [" << num(s.bounds.log_mu_lower) << ", " << num(s.bounds.log_mu_upper)
      << "], rho " << num(s.ratio.ratio) << ", k1 " << s.k1 << ", delta0 " << num(s.delta0) << "\n";
  json steps = json::array();
  bool all = true;
  std::ofstream lv = open_out(c, "destruct_levels.csv");
  lv << "step,log_nu,";
  {
    std::ostringstream hdr;
    write_report_csv(hdr, {}, {});
    lv << hdr.str();
  }
  while (s.step < dp.steps) {
    s = destruction_step(s);
    const DecayRow& r = s.decay.back();
    bool flat = s.final_report.flat_ok;
    all = all && r.pass() && flat;
    for (std::size_t j = 0; j < s.sub_reports.size(); ++j) {
      std::ostringstream row;
      write_report_csv(row, {s.sub_reports[j]}, {s.sub_increments[j]});
      std::string line = row.str();
      line = line.substr(line.find('\n') + 1);
      lv << s.step << "," << num(s.log_nu[j + 1]) << "," << line;
    }
    out << "step " << s.step << ": n " << r.n_prev << " -> " << r.n << ", c " << num(s.geometry.c) << ", log mu_up "
        << num(r.log_mu_upper_prev) << " -> " << num(r.log_mu_upper) << " (bound " << num(r.log_bound_mechanism)
        << "), flatness " << num(s.final_report.flatness) << ((r.pass() && flat) ? "  ok" : "  FAIL") << "\n";
    json st;
    st["step"] = s.step;
    st["n"] = s.n;
    st["geometry"] = {{"c", s.geometry.c}, {"c_tilde", s.geometry.c_tilde}, {"d", s.geometry.d}, {"b", s.geometry.b},
                      {"height", s.geometry.height}};
    st["log_mu_lower"] = r.log_mu_lower;
    st["log_mu_upper"] = r.log_mu_upper;
    st["log_bound_mechanism"] = r.log_bound_mechanism;
    st["flatness"] = s.final_report.flatness;
    st["platform_residual"] = s.platform_residual;
    st["log_platform_cl"] = s.log_platform_cl;
    st["log_increment_cl"] = s.log_increment_cl;
    st["log_increment_bound"] = s.log_increment_bound;
    st["log_nu"] = s.log_nu;
    st["pass"] = r.pass() && flat;
    steps.push_back(st);
  }
  {
    std::ofstream f = open_out(c, "decay.csv");
    write_decay_csv(f, s.decay);
  }
  {
    std::ofstream f = open_out(c, "theta.profile");
    write_profile(f, s.theta);
  }
  json m = manifest_head("destruct", c, args);
  json pj = params_json(A.params);
  pj["destruct_steps"] = dp.steps;
  pj["delta0"] = s.delta0;
  pj["delta1"] = s.delta1;
  pj["delta2"] = s.delta2;
  pj["k1"] = s.k1;
  pj["M"] = s.M;
  pj["log_mu"] = s.log_mu;
  pj["samples"] = dp.samples;
  pj["ratio_grid"] = dp.ratio_grid;
  pj["platform_nodes"] = dp.platform_nodes;
  pj["sub_grid"] = dp.sub_grid;
  pj["strict"] = dp.strict;
  if (!c.checkpoint.empty()) pj["checkpoint"] = c.checkpoint;
  m["parameters"] = pj;
  m["results"] = steps;
  m["pass"] = all;
  write_manifest(c, m);
  return all ? kExitOk : kExitInvariant;
}

int cmd_probe(const Common& c, const std::string& which, std::vector<int> orders, int points, std::ostream& out,
              const std::vector<std::string>& args) {
  ProbeQuantity q;
  if (which == "phi") q = ProbeQuantity::Phi;
  else if (which == "psi") q = ProbeQuantity::Psi;
  else if (which == "norm") q = ProbeQuantity::Norm;
  else throw Error(ErrorKind::InvalidParams, "--which expects phi, psi or norm");
  if (points < 2) throw Error(ErrorKind::InvalidParams, "--points must be >= 2");
  std::ofstream f = open_out(c, "probe.csv");
  f << "order,alpha_a,alpha_b,theta,gap,measured,bound_ratio\n";
  bool all = true;
  json res = json::array();
  for (int order : orders) {
    ProbeSweep s = probe_sweep(q, order, points, c.seed);
    for (const auto& p : s.samples)
      f << order << "," << num(p.alpha_a) << "," << num(p.alpha_b) << "," << num(p.theta) << "," << num(p.gap) << ","
        << num(p.measured) << "," << num(p.bound_ratio) << "\n";
    all = all && s.stable();
    out << which << " order " << order << ": constant " << num(s.constant) << ", check max " << num(s.check_max)
        << (s.stable() ? "  ok" : "  FAIL") << "\n";
    res.push_back({{"order", order}, {"constant", s.constant}, {"check_max", s.check_max},
                   {"decade_max", s.decade_max}, {"stable", s.stable()}});
  }
  json m = manifest_head("probe", c, args);
  m["parameters"] = {{"which", which}, {"orders", orders}, {"points", points}};
  m["results"] = res;
  m["pass"] = all;
  write_manifest(c, m);
  return all ? kExitOk : kExitInvariant;
}

bool is_config_error(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidParams:
    case ErrorKind::ParseError:
    case ErrorKind::FeasibilityError:
    case ErrorKind::NonIrrational:
    case ErrorKind::OverlapError:
    case ErrorKind::DegreeMismatch:
      return true;
    default:
      return false;
  }
}

}  // namespace

PotentialSpec parse_potential(const std::string& s) {
  PotentialSpec p;
  std::stringstream ss(s);
  std::string tok;
  bool any = false;
  while (std::getline(ss, tok, '*')) {
    any = true;
    if (tok == "cos" || tok == "sin") {
      if (!p.fn.empty()) throw Error(ErrorKind::ParseError, "potential has two functions: " + s);
      p.fn = tok;
      continue;
    }
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      p.amplitude *= v;
    } catch (const std::exception&) {
      throw Error(ErrorKind::ParseError, "bad potential factor '" + tok + "' in '" + s + "'");
    }
  }
  if (!any) throw Error(ErrorKind::ParseError, "empty potential");
  return p;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"cclab: quasi-periodic SL(2,R) cocycle construction and destruction lab"};
  app.set_config("--config", "", "key=value configuration file");
  app.require_subcommand(1);
  Common c;
  app.add_option("--omega", c.omega, "golden, sqrt2m1, or a decimal in (0,1)")->capture_default_str();
  app.add_option("--out", c.out, "output directory")->capture_default_str();
  app.add_option("--threads", c.threads, "worker threads (0: all cores)")->capture_default_str();
  app.add_option("--seed", c.seed, "seed for random sweeps")->capture_default_str();
  app.add_option("--checkpoint", c.checkpoint, "construction checkpoint file");

  int depth = 20;
  auto* cf = app.add_subcommand("cf", "continued fraction and convergents");
  cf->add_option("--depth", depth)->capture_default_str();

  std::vector<std::int64_t> qs{13, 21, 34, 55};
  int rsamples = 1000;
  auto* ret = app.add_subcommand("returns", "first-return times to resonance intervals");
  ret->add_option("--q", qs, "convergent denominators")->delimiter(',')->capture_default_str();
  ret->add_option("--samples", rsamples, "points per component")->capture_default_str();

  std::string matrix;
  auto* dec = app.add_subcommand("decompose", "hyperbolic triple of a 2x2 matrix");
  dec->add_option("--matrix", matrix, "a11,a12,a21,a22")->required();

  std::string potential;
  double energy = 0;
  std::int64_t le_n = 2000;
  int le_grid = 4001;
  auto* le = app.add_subcommand("le", "finite Lyapunov exponent");
  le->add_option("--schrodinger", potential, "potential as a product, e.g. 2*3*cos for 6 cos(2 pi x)");
  le->add_option("--energy", energy)->capture_default_str();
  le->add_option("--n", le_n, "iterates (0 with --checkpoint: r_K)")->capture_default_str();
  le->add_option("--grid", le_grid)->capture_default_str();

  ConstructOpts co;
  auto add_construct = [&](CLI::App* s, bool steps) {
    s->add_option("--lambda", co.lambda)->capture_default_str();
    s->add_option("--l", co.l, "smoothness l, or inf")->capture_default_str();
    s->add_option("--a", co.a, "exponent of the smooth class")->capture_default_str();
    s->add_option("--qN", co.qN)->capture_default_str();
    s->add_option(steps ? "--steps" : "--construct-steps", co.steps)->capture_default_str();
    s->add_option("--eps", co.eps)->capture_default_str();
    s->add_option("--branch", co.branch)->capture_default_str();
    s->add_option("--grid", co.grid, "defect nodes per component")->capture_default_str();
    s->add_option("--verify-samples", co.verify_samples)->capture_default_str();
    s->add_flag("--strict-feasibility", co.strict_feasibility);
    s->add_option("--qmax", co.qmax)->capture_default_str();
  };
  auto* con = app.add_subcommand("construct", "inductive construction with verification");
  add_construct(con, true);

  DestructParams dp;
  bool no_strict = false;
  auto* des = app.add_subcommand("destruct", "platform surgery and decay measurement");
  add_construct(des, false);
  des->add_option("--steps", dp.steps, "destruction steps")->capture_default_str();
  des->add_option("--delta0", dp.delta0, "0: min(1/(100 l^2), M^-k1/10)")->capture_default_str();
  des->add_option("--samples", dp.samples, "growth samples per component")->capture_default_str();
  des->add_option("--ratio-grid", dp.ratio_grid)->capture_default_str();
  des->add_option("--platform-nodes", dp.platform_nodes)->capture_default_str();
  des->add_option("--sub-grid", dp.sub_grid, "0: construction grid")->capture_default_str();
  des->add_flag("--no-strict", no_strict, "report sub-levels below the nu floor instead of failing");

  std::string which = "phi";
  std::vector<int> orders{0, 1};
  int points = 1000;
  auto* pr = app.add_subcommand("probe", "derivative-bound probes of the angle corrections");
  pr->add_option("--which", which)->capture_default_str();
  pr->add_option("--order", orders)->delimiter(',')->capture_default_str();
  pr->add_option("--points", points)->capture_default_str();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  dp.strict = !no_strict;
  try {
    if (cf->parsed()) return cmd_cf(c, depth, out, args);
    if (ret->parsed()) return cmd_returns(c, qs, rsamples, out, args);
    if (dec->parsed()) return cmd_decompose(matrix, out);
    if (le->parsed()) return cmd_le(c, potential, energy, le_n, le_grid, out, args);
    if (con->parsed()) return cmd_construct(c, co, out, args);
    if (des->parsed()) return cmd_destruct(c, co, dp, out, args);
    if (pr->parsed()) return cmd_probe(c, which, orders, points, out, args);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return is_config_error(e.kind()) ? kExitConfig : kExitInvariant;
  } catch (const std::filesystem::filesystem_error& e) {
    err << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace cclab
