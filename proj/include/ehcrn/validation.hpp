#pragma once

// Acceptance suite: solver-vs-oracle accuracy, witness structure, constraint
// residuals, baseline dominance, Monte Carlo trend checks, and numeric
// kernel checks.  Each criterion reports one PASS/FAIL line; statistical
// trend targets quoted from external measurements may downgrade to WARN
// instead of failing when the ordering itself still holds.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ehcrn/baselines.hpp"
#include "ehcrn/harness.hpp"
#include "ehcrn/jotpa.hpp"
#include "ehcrn/model.hpp"
#include "ehcrn/numerics.hpp"
#include "ehcrn/oracle.hpp"
#include "ehcrn/scenarios.hpp"

namespace ehcrn {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  bool warned = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  bool quick = false;  // reduced counts, statistical criteria skipped
  std::uint64_t seed = 20240811;
  int jobs = 0;
};

namespace validation_detail {

inline std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double lap() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

struct WitnessAudit {
  double worst = 0.0;
  long long count = 0;
  std::string worst_tag;

  void add(const SystemParams& sys, const ChannelRealization& chan, const SolveResult& res,
           const std::string& tag) {
    const double r = constraint_residuals(sys, chan, res.allocation).max_relative(sys);
    ++count;
    if (r > worst) {
      worst = r;
      worst_tag = tag;
    }
  }
};

inline void emit(std::ostream& log, const CriterionResult& c) {
  log << (c.passed ? (c.warned ? "[WARN] " : "[PASS] ") : "[FAIL] ") << c.id << ' ' << c.name << ": "
      << c.detail << " [" << fmt(c.seconds, 3) << "s]" << std::endl;
}

struct SuitePair {
  CriterionResult accuracy;
  CriterionResult structure;
};

// Criteria 1 and 2 share one run: solver vs oracle on every small-K cell,
// with structural checks applied to each solver witness.
inline SuitePair oracle_suite(const AcceptanceOptions& opt, WitnessAudit& audit) {
  Stopwatch sw;
  const std::vector<int> ks = opt.quick ? std::vector<int>{1, 2} : std::vector<int>{1, 2, 3};
  const std::vector<double> ips = opt.quick ? std::vector<double>{0.0, 10.0} : std::vector<double>{0.0, 5.0, 10.0};
  const int reals = opt.quick ? 5 : 20;

  double max_rel = 0.0, max_tau_gap = 0.0, max_spread = 0.0;
  std::string worst_rel, worst_struct;
  long long cases = 0;
  for (int s : {1, 2, 3}) {
    for (int kk : ks) {
      const Topology topo = build_topology(scenario_from_int(s), kk);
      const SystemParams base;  // P_t = 40 dB, alpha = 2, xi = 0.8
      const std::uint64_t cell_seed = splitmix64(opt.seed ^ (0x10ull * s + static_cast<std::uint64_t>(kk)));
      for (int i = 0; i < reals; ++i) {
        const ChannelRealization chan = sample_channels(topo, base, SeededRng{cell_seed}.with_realization(i));
        for (double ip : ips) {
          SystemParams sys = base;
          sys.peak_interference = db_to_linear(ip);
          const SolveResult rj = jotpa_solve(sys, chan);
          const SolveResult ro = oracle_solve(sys, chan, OracleMethod::grid);
          ++cases;
          const std::string tag = "S" + std::to_string(s) + " K" + std::to_string(kk) + " Ip" +
                                  fmt(ip, 3) + "dB r" + std::to_string(i);
          audit.add(sys, chan, rj, tag + " solver");
          audit.add(sys, chan, ro, tag + " oracle");

          const double rel = std::abs(rj.r_star - ro.r_star) / std::max(ro.r_star, 1e-6);
          if (rel > max_rel) {
            max_rel = rel;
            worst_rel = tag;
          }

          double tau_sum = 0.0;
          for (double t : rj.allocation.tau) tau_sum += t;
          const double tau_gap = std::abs(tau_sum - sys.frame_duration) / (1e-6 * sys.frame_duration);
          double r_lo = std::numeric_limits<double>::infinity(), r_hi = 0.0;
          for (int h = 0; h < kk; ++h) {
            const double rr = hop_throughput(rj.allocation.tau[h + 1], rj.allocation.e[h], chan.eta[h]);
            r_lo = std::min(r_lo, rr);
            r_hi = std::max(r_hi, rr);
          }
          const double delta = 1e-4 * rate_upper_bound(sys, chan);
          const double allow = std::max(10.0 * delta, 1e-3 * rj.r_star);
          const double spread = (r_hi - r_lo) / std::max(allow, 1e-300);
          if (tau_gap > max_tau_gap || spread > max_spread) worst_struct = tag;
          max_tau_gap = std::max(max_tau_gap, tau_gap);
          max_spread = std::max(max_spread, spread);
        }
      }
    }
  }

  SuitePair out;
  out.accuracy = {1, "oracle-equivalence", max_rel <= 0.02, false,
                  "max rel gap " + fmt(max_rel) + " of limit 0.02 (" + worst_rel + "), " +
                      std::to_string(cases) + " cases",
                  sw.lap()};
  out.structure = {2, "equal-rate-structure", max_tau_gap <= 1.0 && max_spread <= 1.0, false,
                   "worst frame-fill gap " + fmt(max_tau_gap) + "x of 1e-6*T, worst rate spread " +
                       fmt(max_spread) + "x of max(10*tol, 1e-3*R) (" + worst_struct + ")",
                   0.0};
  return out;
}

inline CriterionResult dominance(const AcceptanceOptions& opt, WitnessAudit& audit) {
  Stopwatch sw;
  const int n = opt.quick ? 20 : 100;
  const Topology topo = build_topology(ScenarioId::midpoint_under_primary, 3);
  SystemParams proto;
  proto.peak_interference = db_to_linear(5.0);
  const std::uint64_t s4 = splitmix64(opt.seed ^ 0x4444ull);
  int violations = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  std::string worst;
  for (int i = 0; i < n; ++i) {
    const ChannelRealization chan = sample_channels(topo, proto, SeededRng{s4}.with_realization(i));
    for (double pt : {30.0, 40.0, 50.0}) {
      SystemParams sys = proto;
      sys.pt_power = db_to_linear(pt);
      SystemParams tight = sys;
      tight.bisection_tol = 1e-6;
      const SolveResult rj = jotpa_solve(tight, chan);
      const SolveResult ro = otepa_solve(sys, chan);
      const SolveResult re = etopa_solve(sys, chan);
      const std::string tag = "Pt" + fmt(pt, 3) + "dB r" + std::to_string(i);
      audit.add(tight, chan, rj, tag + " solver");
      audit.add(sys, chan, ro, tag + " equal-power");
      audit.add(sys, chan, re, tag + " equal-time");
      const double margin = std::min(rj.r_star - ro.r_star, rj.r_star - re.r_star);
      if (margin < min_margin) {
        min_margin = margin;
        worst = tag;
      }
      if (rj.r_star < ro.r_star - 1e-6 || rj.r_star < re.r_star - 1e-6) ++violations;
    }
  }
  return {4, "baseline-dominance", violations == 0, false,
          std::to_string(violations) + " violations over " + std::to_string(3 * n) +
              " paired runs, min margin " + fmt(min_margin) + " (" + worst + ")",
          sw.lap()};
}

inline CriterionResult residual_audit(const AcceptanceOptions& opt, WitnessAudit& audit) {
  Stopwatch sw;
  const ExperimentConfig cfg;  // default otepa settings for dispatch
  const std::vector<int> ks = opt.quick ? std::vector<int>{1, 4} : std::vector<int>{1, 2, 4, 6};
  const int reals = opt.quick ? 1 : 3;
  const std::vector<std::string> algs{"jotpa", "otepa", "etopa"};
  for (int s : {1, 2, 3}) {
    for (int kk : ks) {
      const Topology topo = build_topology(scenario_from_int(s), kk);
      const std::uint64_t cell_seed = splitmix64(opt.seed ^ (0x300ull + 0x10ull * s + static_cast<std::uint64_t>(kk)));
      for (int i = 0; i < reals; ++i) {
        for (double ip : {0.0, 10.0}) {
          SystemParams sys;
          sys.peak_interference = db_to_linear(ip);
          const ChannelRealization chan = sample_channels(topo, sys, SeededRng{cell_seed}.with_realization(i));
          for (const std::string& alg : algs) {
            const SolveResult res = harness_detail::dispatch(alg, sys, chan, cfg);
            audit.add(sys, chan, res,
                      alg + " S" + std::to_string(s) + " K" + std::to_string(kk) + " Ip" + fmt(ip, 3) + "dB r" + std::to_string(i));
          }
        }
      }
    }
  }
  // off-default physics
  for (double alpha : {2.5, 4.0}) {
    for (double xi : {0.5, 1.0}) {
      SystemParams sys;
      sys.path_loss_exponent = alpha;
      sys.harvest_efficiency = xi;
      sys.peak_interference = db_to_linear(5.0);
      const Topology topo = build_topology(ScenarioId::midpoint_under_primary, 3);
      const std::uint64_t cell_seed = splitmix64(opt.seed ^ (0x900ull + static_cast<std::uint64_t>(alpha * 4 + xi * 2)));
      for (int i = 0; i < (opt.quick ? 1 : 2); ++i) {
        const ChannelRealization chan = sample_channels(topo, sys, SeededRng{cell_seed}.with_realization(i));
        for (const std::string& alg : algs) {
          const SolveResult res = harness_detail::dispatch(alg, sys, chan, cfg);
          audit.add(sys, chan, res, alg + " alpha" + fmt(alpha, 3) + " xi" + fmt(xi, 3) + " r" + std::to_string(i));
        }
      }
    }
  }
  return {3, "constraint-residuals", audit.worst <= 1e-8, false,
          "worst relative residual " + fmt(audit.worst) + " of limit 1e-8 over " +
              std::to_string(audit.count) + " witnesses (" + audit.worst_tag + ")",
          sw.lap()};
}

inline CriterionResult saturation(const AcceptanceOptions& opt) {
  if (opt.quick) return {5, "interference-saturation", true, false, "skipped in quick mode", 0.0};
  Stopwatch sw;
  ExperimentConfig cfg;
  cfg.scenarios = {2};
  cfg.hops = {2};
  cfg.algorithms = {"jotpa"};
  cfg.ip_db = {-30, -20, -10, 0, 10, 20, 30, 40, 50, 60};
  cfg.realizations = 500;
  cfg.seed = splitmix64(opt.seed ^ 0x5555ull);
  cfg.jobs = opt.jobs;
  const ResultTable t = run_sweep(cfg);
  bool mono = true;
  double worst_dip = 0.0;
  for (std::size_t i = 0; i + 1 < t.rows.size(); ++i) {
    const double dip = t.rows[i].mean_r - t.rows[i + 1].mean_r;
    const double allow = std::max(t.rows[i].ci95, t.rows[i + 1].ci95);
    worst_dip = std::max(worst_dip, dip - allow);
    if (dip > allow) mono = false;
  }
  const double m40 = t.rows[7].mean_r;
  const double m60 = t.rows[9].mean_r;
  const double sat = std::abs(m60 - m40) / std::max(m60, 1e-12);
  return {5, "interference-saturation", mono && sat < 0.02, false,
          std::string("nondecreasing within CI: ") + (mono ? "yes" : "no") + " (worst excess dip " +
              fmt(worst_dip) + "), 40dB vs 60dB gap " + fmt(sat) + " of limit 0.02",
          sw.lap()};
}

inline CriterionResult scenario_ordering(const AcceptanceOptions& opt) {
  if (opt.quick) return {6, "scenario-ordering", true, false, "skipped in quick mode", 0.0};
  Stopwatch sw;
  ExperimentConfig cfg;
  cfg.scenarios = {1, 2, 3};
  cfg.hops = {6};
  cfg.algorithms = {"jotpa"};
  cfg.ip_db = {0.0};
  cfg.realizations = 1000;
  cfg.seed = splitmix64(opt.seed ^ 0x6666ull);
  cfg.jobs = opt.jobs;
  const ResultTable t = run_sweep(cfg);
  const ResultRow &r1 = t.rows[0], &r2 = t.rows[1], &r3 = t.rows[2];
  const double sep13 = (r1.mean_r - r3.mean_r) - (r1.ci95 + r3.ci95);
  const double sep23 = (r2.mean_r - r3.mean_r) - (r2.ci95 + r3.ci95);
  return {6, "scenario-ordering", sep13 > 0.0 && sep23 > 0.0, false,
          "means " + fmt(r1.mean_r) + "/" + fmt(r2.mean_r) + "/" + fmt(r3.mean_r) +
              ", CI-adjusted separations vs S3: " + fmt(sep13) + ", " + fmt(sep23),
          sw.lap()};
}

inline CriterionResult hop_gain_taper(const AcceptanceOptions& opt) {
  if (opt.quick) return {7, "hop-gain-taper", true, false, "skipped in quick mode", 0.0};
  Stopwatch sw;
  ExperimentConfig cfg;
  cfg.scenarios = {2};
  cfg.hops = {3, 4, 5};
  cfg.algorithms = {"jotpa"};
  cfg.realizations = 1000;
  cfg.seed = splitmix64(opt.seed ^ 0x7777ull);
  cfg.jobs = opt.jobs;
  const ResultTable t = run_sweep(cfg);
  const double m3 = t.rows[0].mean_r, m4 = t.rows[1].mean_r, m5 = t.rows[2].mean_r;
  const double g34 = 100.0 * (m4 / m3 - 1.0);
  const double g45 = 100.0 * (m5 / m4 - 1.0);
  const bool ordered = g34 > g45;
  const bool in_band = std::abs(g34 - 23.72) <= 5.0 && std::abs(g45 - 10.86) <= 5.0;
  // approximate CIs for the gain ratios, ignoring pairing
  const double ci34 = 100.0 * (m4 / m3) *
                      std::sqrt(std::pow(t.rows[1].ci95 / m4, 2) + std::pow(t.rows[0].ci95 / m3, 2));
  const double ci45 = 100.0 * (m5 / m4) *
                      std::sqrt(std::pow(t.rows[2].ci95 / m5, 2) + std::pow(t.rows[1].ci95 / m4, 2));
  return {7, "hop-gain-taper", ordered, ordered && !in_band,
          "gain K3->K4 " + fmt(g34) + "% (+-" + fmt(ci34, 3) + "), K4->K5 " + fmt(g45) + "% (+-" +
              fmt(ci45, 3) + "); targets 23.72% / 10.86% within 5pp: " + (in_band ? "yes" : "no"),
          sw.lap()};
}

inline CriterionResult concavity(const AcceptanceOptions& opt) {
  Stopwatch sw;
  const int trials = opt.quick ? 200 : 1000;
  const Topology topo = build_topology(ScenarioId::midpoint_under_primary, 3);
  SystemParams sys;
  sys.peak_interference = db_to_linear(5.0);
  const int kk = topo.hop_count;
  std::mt19937_64 gen(splitmix64(opt.seed ^ 0x8888ull));
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double worst = 0.0;
  const std::uint64_t cseed = splitmix64(opt.seed ^ 0x8889ull);
  for (int t = 0; t < trials; ++t) {
    const ChannelRealization chan = sample_channels(topo, sys, SeededRng{cseed}.with_realization(t));
    auto random_alloc = [&]() {
      Allocation a;
      a.tau.resize(kk + 1);
      double sum = 0.0;
      for (double& v : a.tau) {
        v = -std::log(1.0 - uni(gen) * (1.0 - 1e-12));
        sum += v;
      }
      for (double& v : a.tau) v *= sys.frame_duration / sum;
      a.e = optimal_e_given_tau(sys, chan, a.tau);
      for (double& v : a.e) v *= uni(gen);
      return a;
    };
    const Allocation a = random_alloc();
    const Allocation b = random_alloc();
    const double theta = 0.01 + 0.98 * uni(gen);
    Allocation mid;
    mid.tau.resize(kk + 1);
    mid.e.resize(kk);
    for (int i = 0; i <= kk; ++i) mid.tau[i] = theta * a.tau[i] + (1.0 - theta) * b.tau[i];
    for (int i = 0; i < kk; ++i) mid.e[i] = theta * a.e[i] + (1.0 - theta) * b.e[i];
    const double chord = theta * end_to_end_throughput(sys, chan, a) +
                         (1.0 - theta) * end_to_end_throughput(sys, chan, b);
    const double violation = chord - end_to_end_throughput(sys, chan, mid);
    worst = std::max(worst, violation);
  }
  return {8, "throughput-concavity", worst <= 1e-9, false,
          "max chord-over-midpoint excess " + fmt(worst) + " of limit 1e-9 over " +
              std::to_string(trials) + " pairs",
          sw.lap()};
}

inline CriterionResult numeric_kernels(const AcceptanceOptions& opt) {
  Stopwatch sw;
  std::mt19937_64 gen(splitmix64(opt.seed ^ 0x9999ull));
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  const int nw = opt.quick ? 2000 : 10000;
  double worst_w = 0.0;
  for (int i = 0; i < nw; ++i) {
    double x;
    const double u = uni(gen);
    if (i % 17 == 0) {
      x = -std::exp(-1.0) * (1.0 - 1e-13 * (1.0 + u));  // just inside the branch point
    } else if (i % 2 == 0) {
      x = -std::exp(-1.0) * u;
    } else {
      x = std::exp(std::log(1e-8) + u * std::log(1e16));
    }
    const double w = lambert_w0(x);
    const double resid = std::abs(w * std::exp(w) - x) / std::max(1.0, std::abs(x));
    worst_w = std::max(worst_w, resid);
  }

  double worst_p = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double tau = std::exp(std::log(1e-9) + uni(gen) * std::log(1e10));
    const double e = uni(gen) * 10.0;
    const double eta = std::exp(std::log(1e-6) + uni(gen) * std::log(1e9));
    const double c = std::exp(std::log(1e-6) + uni(gen) * std::log(1e9));
    const double scaled = hop_throughput(c * tau, c * e, eta);
    const double direct = c * hop_throughput(tau, e, eta);
    worst_p = std::max(worst_p, std::abs(scaled - direct) / std::max(1.0, std::abs(direct)));
  }

  bool count_ok = true;
  std::string count_note = "exact";
  struct Case {
    double lo, hi, delta, boundary;
  };
  const Case cases[] = {{0.0, 1.0, 1e-3, 0.6180339887},
                        {0.0, 8.0, 0.5, 3.7},
                        {2.0, 3.0, 1e-6, 2.25},
                        {-5.0, -1.0, 1e-4, -2.5}};
  for (const Case& c : cases) {
    const BisectionResult br = bisection([&](double x) { return x <= c.boundary; }, c.lo, c.hi, c.delta);
    const int expected = static_cast<int>(std::ceil(std::log2((c.hi - c.lo) / c.delta)));
    if (br.iterations != expected || std::abs(br.value - c.boundary) > c.delta) {
      count_ok = false;
      count_note = "mismatch at [" + fmt(c.lo, 3) + "," + fmt(c.hi, 3) + "] delta " + fmt(c.delta, 3) +
                   ": got " + std::to_string(br.iterations) + " expected " + std::to_string(expected);
    }
  }
  const BisectionResult trivial = bisection([](double) { return true; }, 0.0, 1.0, 1e-3);
  if (trivial.iterations != 0 || trivial.value != 1.0) {
    count_ok = false;
    count_note = "saturated-endpoint shortcut broken";
  }

  const bool pass = worst_w <= 1e-12 && worst_p <= 1e-12 && count_ok;
  return {9, "numeric-kernels", pass, false,
          "Lambert residual " + fmt(worst_w) + ", scaling identity dev " + fmt(worst_p) +
              " (limits 1e-12), bisection count " + count_note,
          sw.lap()};
}

inline CriterionResult utilization(const AcceptanceOptions& opt) {
  Stopwatch sw;
  ExperimentConfig cfg;
  cfg.scenarios = {2};
  cfg.hops = {6};
  cfg.algorithms = {"jotpa"};
  cfg.ip_db = {0.0, 10.0};
  cfg.realizations = opt.quick ? 80 : 500;
  cfg.seed = splitmix64(opt.seed ^ 0xaaaaull);
  cfg.jobs = opt.jobs;
  const ResultTable t = run_sweep(cfg);
  const double u0 = t.rows[0].utilization;
  const double u10 = t.rows[1].utilization;
  return {10, "energy-utilization", u10 >= 0.95 && u0 <= 0.5, false,
          "mean utilization " + fmt(u10) + " at 10dB (need >= 0.95), " + fmt(u0) +
              " at 0dB (need <= 0.5)",
          sw.lap()};
}

}  // namespace validation_detail

inline std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt, std::ostream& log) {
  using namespace validation_detail;
  std::vector<CriterionResult> out;
  WitnessAudit audit;

  SuitePair sp = oracle_suite(opt, audit);
  emit(log, sp.accuracy);
  emit(log, sp.structure);

  CriterionResult c4 = dominance(opt, audit);
  CriterionResult c3 = residual_audit(opt, audit);
  emit(log, c3);
  emit(log, c4);

  out.push_back(sp.accuracy);
  out.push_back(sp.structure);
  out.push_back(c3);
  out.push_back(c4);
  auto step = [&](CriterionResult c) {
    emit(log, c);
    out.push_back(std::move(c));
  };
  step(saturation(opt));
  step(scenario_ordering(opt));
  step(hop_gain_taper(opt));
  step(concavity(opt));
  step(numeric_kernels(opt));
  step(utilization(opt));
  return out;
}

inline bool acceptance_passed(const std::vector<CriterionResult>& results) {
  for (const CriterionResult& c : results) {
    if (!c.passed) return false;
  }
  return true;
}

}  // namespace ehcrn
