// Acceptance gate: runs every benchmark criterion at its stated tolerance
// and prints one verdict line per criterion.  --quick shrinks the sample
// counts for smoke runs; tolerances never change.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "ehcrn/baselines.hpp"
#include "ehcrn/harness.hpp"
#include "ehcrn/jotpa.hpp"
#include "ehcrn/model.hpp"
#include "ehcrn/numerics.hpp"
#include "ehcrn/oracle.hpp"
#include "ehcrn/scenarios.hpp"

using namespace ehcrn;

namespace {

struct Verdict {
  bool pass = true;
  bool warn = false;
  std::string detail;
};

struct Options {
  bool quick = false;
  std::uint64_t seed = 20240811;
  int jobs = 0;
};

// The Monte Carlo trend criteria compare means against thresholds calibrated
// to the full sample counts; running them smaller would misread noise as a
// verdict, so quick mode reports them as skipped.
Verdict quick_skip() {
  Verdict v;
  v.detail = "skipped in quick mode (thresholds calibrated to full sample counts)";
  return v;
}

double now_s() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

void report(int id, const char* name, const Verdict& v, double t_start) {
  std::printf("criterion %2d [%s]: %s  %s  (%.1fs)\n", id, name,
              v.pass ? (v.warn ? "WARN" : "PASS") : "FAIL", v.detail.c_str(), now_s() - t_start);
  std::fflush(stdout);
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

// Shared run over the criterion-1 grid; feeds criteria 1, 2, and 3.
struct EquivalenceStats {
  double max_rel_gap = 0.0;
  long long gap_violations = 0;
  double max_time_residual = 0.0;
  long long spread_violations = 0;
  double worst_spread_excess = 0.0;
  double max_constraint_residual = 0.0;
  long long constraint_violations = 0;
  long long instances = 0;
};

EquivalenceStats run_equivalence_suite(const Options& opt) {
  EquivalenceStats st;
  const long long n = opt.quick ? 4 : 20;
  for (int scenario = 1; scenario <= 3; ++scenario) {
    for (int k = 1; k <= 3; ++k) {
      const Topology topo = build_topology(scenario_from_int(scenario), k);
      for (double ip : {0.0, 5.0, 10.0}) {
        SystemParams sys;
        sys.pt_power = db_to_linear(40.0);
        sys.peak_interference = db_to_linear(ip);
        for (long long i = 0; i < n; ++i) {
          const ChannelRealization chan =
              sample_channels(topo, sys, SeededRng{opt.seed}.with_realization(i));
          const SolveResult jt = jotpa_solve(sys, chan);
          const SolveResult orc = oracle_solve(sys, chan, OracleMethod::grid);
          ++st.instances;

          const double gap = std::abs(jt.r_star - orc.r_star) / std::max(orc.r_star, 1e-6);
          st.max_rel_gap = std::max(st.max_rel_gap, gap);
          if (gap > 0.02) ++st.gap_violations;

          double tau_sum = 0.0;
          for (double t : jt.allocation.tau) tau_sum += t;
          st.max_time_residual = std::max(st.max_time_residual, std::abs(tau_sum - 1.0));

          double lo_rate = std::numeric_limits<double>::infinity(), hi_rate = 0.0;
          for (int h = 0; h < k; ++h) {
            const double r = hop_throughput(jt.allocation.tau[h + 1], jt.allocation.e[h], chan.eta[h]);
            lo_rate = std::min(lo_rate, r);
            hi_rate = std::max(hi_rate, r);
          }
          const double delta = 1e-4 * std::max(rate_upper_bound(sys, chan), 1e-12);
          const double spread_limit = std::max(10.0 * delta, 1e-3 * jt.r_star);
          const double spread = hi_rate - lo_rate;
          if (spread > spread_limit) {
            ++st.spread_violations;
            st.worst_spread_excess = std::max(st.worst_spread_excess, spread - spread_limit);
          }

          for (const Allocation* alloc : {&jt.allocation, &orc.allocation}) {
            const double res = constraint_residuals(sys, chan, *alloc).max_relative(sys);
            st.max_constraint_residual = std::max(st.max_constraint_residual, res);
            if (res > 1e-8) ++st.constraint_violations;
          }
        }
      }
    }
  }
  return st;
}

struct DominanceStats {
  long long violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  double max_constraint_residual = 0.0;
  long long constraint_violations = 0;
  long long instances = 0;
};

DominanceStats run_dominance_suite(const Options& opt) {
  DominanceStats st;
  const long long n = opt.quick ? 20 : 100;
  const Topology topo = build_topology(scenario_from_int(2), 3);
  for (double pt : {30.0, 40.0, 50.0}) {
    SystemParams sys;
    sys.pt_power = db_to_linear(pt);
    sys.peak_interference = db_to_linear(5.0);
    sys.bisection_tol = 2.5e-7;  // resolve well inside the 1e-6 comparison margin
    for (long long i = 0; i < n; ++i) {
      const ChannelRealization chan =
          sample_channels(topo, sys, SeededRng{opt.seed}.with_realization(i));
      const SolveResult jt = jotpa_solve(sys, chan);
      const SolveResult ot = otepa_solve(sys, chan);
      const SolveResult et = etopa_solve(sys, chan);
      ++st.instances;
      const double margin = std::min(jt.r_star - ot.r_star, jt.r_star - et.r_star);
      st.worst_margin = std::min(st.worst_margin, margin);
      if (margin < -1e-6) ++st.violations;
      for (const Allocation* alloc : {&jt.allocation, &ot.allocation, &et.allocation}) {
        const double res = constraint_residuals(sys, chan, *alloc).max_relative(sys);
        st.max_constraint_residual = std::max(st.max_constraint_residual, res);
        if (res > 1e-8) ++st.constraint_violations;
      }
    }
  }
  return st;
}

ExperimentConfig sweep_base(const Options& opt, long long n) {
  ExperimentConfig cfg;
  cfg.seed = opt.seed;
  cfg.jobs = opt.jobs;
  cfg.realizations = n;
  return cfg;
}

Verdict criterion_saturation(const Options& opt) {
  if (opt.quick) return quick_skip();
  ExperimentConfig cfg = sweep_base(opt, 500);
  cfg.scenarios = {2};
  cfg.hops = {2};
  cfg.algorithms = {"jotpa"};
  cfg.ip_db = {-30, -20, -10, 0, 10, 20, 30, 40, 50, 60};
  const ResultTable table = run_sweep(cfg);

  Verdict v;
  double worst_drop = 0.0;
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    const ResultRow& a = table.rows[i - 1];
    const ResultRow& b = table.rows[i];
    const double allowed = a.ci95 + b.ci95;
    if (b.mean_r < a.mean_r - allowed) {
      v.pass = false;
      worst_drop = std::max(worst_drop, a.mean_r - b.mean_r);
    }
  }
  const double m40 = table.rows[7].mean_r;
  const double m60 = table.rows[9].mean_r;
  const double sat = std::abs(m60 - m40) / std::max(m60, 1e-12);
  if (!(sat < 0.02)) v.pass = false;
  v.detail = fmt("monotone within CI%s, mean(40dB)=%.4f vs mean(60dB)=%.4f, sat gap %.3f%% (limit 2%%)",
                 worst_drop > 0.0 ? " VIOLATED" : "", m40, m60, 100.0 * sat);
  return v;
}

Verdict criterion_scenarios(const Options& opt) {
  if (opt.quick) return quick_skip();
  ExperimentConfig cfg = sweep_base(opt, 1000);
  cfg.scenarios = {1, 2, 3};
  cfg.hops = {6};
  cfg.algorithms = {"jotpa"};
  cfg.ip_db = {0.0};
  const ResultTable table = run_sweep(cfg);
  const ResultRow& s1 = table.rows[0];
  const ResultRow& s2 = table.rows[1];
  const ResultRow& s3 = table.rows[2];
  Verdict v;
  const bool first = s1.mean_r - s3.mean_r > s1.ci95 + s3.ci95;
  const bool second = s2.mean_r - s3.mean_r > s2.ci95 + s3.ci95;
  v.pass = first && second;
  v.detail = fmt("mean S1=%.4f+/-%.4f S2=%.4f+/-%.4f S3=%.4f+/-%.4f", s1.mean_r, s1.ci95, s2.mean_r,
                 s2.ci95, s3.mean_r, s3.ci95);
  return v;
}

Verdict criterion_hop_gains(const Options& opt) {
  if (opt.quick) return quick_skip();
  ExperimentConfig cfg = sweep_base(opt, 1000);
  cfg.scenarios = {2};
  cfg.hops = {3, 4, 5};
  cfg.algorithms = {"jotpa"};
  const ResultTable table = run_sweep(cfg);
  const double m3 = table.rows[0].mean_r;
  const double m4 = table.rows[1].mean_r;
  const double m5 = table.rows[2].mean_r;
  const double g34 = (m4 - m3) / m3;
  const double g45 = (m5 - m4) / m4;
  Verdict v;
  v.pass = g34 > g45;
  const bool in_band = std::abs(g34 - 0.2372) <= 0.05 && std::abs(g45 - 0.1086) <= 0.05;
  if (v.pass && !in_band) v.warn = true;
  v.detail = fmt("gain K3->K4 %.2f%% (ref 23.72) K4->K5 %.2f%% (ref 10.86), ci %.4f/%.4f/%.4f%s",
                 100.0 * g34, 100.0 * g45, table.rows[0].ci95, table.rows[1].ci95, table.rows[2].ci95,
                 v.warn ? ", outside the 5pp reference band" : "");
  return v;
}

Verdict criterion_concavity(const Options& opt) {
  const long long n = opt.quick ? 200 : 1000;
  std::mt19937_64 gen(opt.seed ^ 0xC01Du);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Verdict v;
  long long violations = 0;
  double worst = 0.0;
  for (long long i = 0; i < n; ++i) {
    const double theta = 0.01 + 0.98 * unit(gen);
    double mins[3] = {0.0, 0.0, 0.0};  // {a, b, mid} bottleneck over three hops
    mins[0] = mins[1] = mins[2] = std::numeric_limits<double>::infinity();
    for (int h = 0; h < 3; ++h) {
      const double eta = std::pow(10.0, -1.0 + 3.0 * unit(gen));
      const double ta = 1e-6 + unit(gen);
      const double tb = 1e-6 + unit(gen);
      const double ea = 10.0 * unit(gen);
      const double eb = 10.0 * unit(gen);
      const double fa = hop_throughput(ta, ea, eta);
      const double fb = hop_throughput(tb, eb, eta);
      const double fm = hop_throughput(theta * ta + (1.0 - theta) * tb,
                                       theta * ea + (1.0 - theta) * eb, eta);
      const double chord = theta * fa + (1.0 - theta) * fb;
      if (fm < chord - 1e-9) {
        ++violations;
        worst = std::max(worst, chord - fm);
      }
      mins[0] = std::min(mins[0], fa);
      mins[1] = std::min(mins[1], fb);
      mins[2] = std::min(mins[2], fm);
    }
    const double chord_min = theta * mins[0] + (1.0 - theta) * mins[1];
    if (mins[2] < chord_min - 1e-9) {
      ++violations;
      worst = std::max(worst, chord_min - mins[2]);
    }
  }
  v.pass = violations == 0;
  v.detail = fmt("%lld midpoint violations over %lld draws (worst excess %.2e)", violations, 4 * n, worst);
  return v;
}

Verdict criterion_numerics(const Options& opt) {
  Verdict v;
  constexpr double kInvE = 0.36787944117144233;

  double worst_w = 0.0;
  long long samples = 0;
  const auto check_w = [&](double x) {
    const double w = lambert_w0(x);
    const double resid = std::abs(w * std::exp(w) - x) / std::max(std::abs(x), 1e-300);
    worst_w = std::max(worst_w, resid);
    ++samples;
  };
  for (int i = 0; i < 5000; ++i) check_w(std::pow(10.0, -8.0 + 16.0 * i / 4999.0));
  for (int i = 0; i < 5000; ++i) check_w(-kInvE * (i + 1) / 5001.0);
  for (int j = 6; j <= 14; ++j) check_w(-kInvE * (1.0 - std::pow(10.0, -j)));
  if (worst_w > 1e-12) v.pass = false;

  std::mt19937_64 gen(opt.seed ^ 0x9e37u);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_scale = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const double tau = 1e-4 + unit(gen);
    const double e = 5.0 * unit(gen);
    const double eta = std::pow(10.0, -1.0 + 3.0 * unit(gen));
    const double c = std::pow(10.0, -2.0 + 4.0 * unit(gen));
    const double lhs = hop_throughput(c * tau, c * e, eta);
    const double rhs = c * hop_throughput(tau, e, eta);
    worst_scale = std::max(worst_scale, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
  }
  if (worst_scale > 1e-12) v.pass = false;

  long long count_checked = 0, count_bad = 0;
  const auto check_count = [&](double lo, double hi, double delta, double root) {
    const double ratio = (hi - lo) / delta;
    const double lg = std::log2(ratio);
    if (std::abs(lg - std::round(lg)) < 1e-9 && std::abs(lg - std::round(lg)) != 0.0) return;
    const BisectionResult br = bisection([&](double x) { return x <= root; }, lo, hi, delta);
    ++count_checked;
    const int expected = ratio <= 1.0 ? 0 : static_cast<int>(std::ceil(lg));
    if (br.iterations != expected) ++count_bad;
  };
  check_count(0.0, 1.0, 1e-3, 0.6180339887498949);
  check_count(0.0, 8.0, 0.5, 3.7);
  check_count(2.0, 3.0, 1e-6, 2.25);
  check_count(-5.0, -1.0, 1e-4, -2.5);
  for (int i = 0; i < 200; ++i) {
    const double lo = -5.0 + 10.0 * unit(gen);
    const double hi = lo + 0.1 + 10.0 * unit(gen);
    const double delta = std::pow(10.0, -7.0 + 5.0 * unit(gen));
    check_count(lo, hi, delta, lo + (hi - lo) * unit(gen));
  }
  if (count_bad > 0) v.pass = false;

  v.detail = fmt("lambert max rel resid %.2e over %lld pts, scaling max %.2e, %lld/%lld exact counts",
                 worst_w, samples, worst_scale, count_checked - count_bad, count_checked);
  return v;
}

Verdict criterion_energy_ledger(const Options& opt) {
  if (opt.quick) return quick_skip();
  ExperimentConfig cfg = sweep_base(opt, 500);
  cfg.scenarios = {2};
  cfg.hops = {6};
  cfg.algorithms = {"jotpa"};
  cfg.ip_db = {10.0, 0.0};
  const ResultTable table = run_sweep(cfg);
  const double util_loose = table.rows[0].utilization;
  const double util_tight = table.rows[1].utilization;
  Verdict v;
  v.pass = util_loose >= 0.95 && util_tight <= 0.5;
  v.detail = fmt("utilization %.3f at 10dB (need >= 0.95), %.3f at 0dB (need <= 0.5)", util_loose,
                 util_tight);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--quick") {
      opt.quick = true;
    } else if (arg == "--seed" && i + 1 < argc) {
      opt.seed = std::strtoull(argv[++i], nullptr, 10);
    } else if (arg == "--jobs" && i + 1 < argc) {
      opt.jobs = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--quick] [--seed <u64>] [--jobs <n>]\n", argv[0]);
      return 2;
    }
  }
  if (opt.quick) std::printf("quick mode: reduced sample counts, tolerances unchanged\n");

  bool all_pass = true;
  double t = now_s();

  const EquivalenceStats eq = run_equivalence_suite(opt);
  {
    Verdict v;
    v.pass = eq.gap_violations == 0;
    v.detail = fmt("max rel gap %.3f%% over %lld instances (limit 2%%)", 100.0 * eq.max_rel_gap,
                   eq.instances);
    report(1, "oracle equivalence", v, t);
    all_pass = all_pass && v.pass;
  }
  {
    Verdict v;
    v.pass = eq.max_time_residual <= 1e-6 && eq.spread_violations == 0;
    v.detail = fmt("max |sum tau - T| %.1e (limit 1e-6), %lld spread violations (worst excess %.1e)",
                   eq.max_time_residual, eq.spread_violations, eq.worst_spread_excess);
    report(2, "frame use and equal throughput", v, t);
    all_pass = all_pass && v.pass;
  }

  const double t4 = now_s();
  const DominanceStats dom = run_dominance_suite(opt);
  {
    Verdict v;
    v.pass = eq.constraint_violations == 0 && dom.constraint_violations == 0;
    v.detail = fmt("max relative residual %.1e over %lld witnesses (limit 1e-8)",
                   std::max(eq.max_constraint_residual, dom.max_constraint_residual),
                   2 * eq.instances + 3 * dom.instances);
    report(3, "constraint validity", v, t);
    all_pass = all_pass && v.pass;
  }
  {
    Verdict v;
    v.pass = dom.violations == 0;
    v.detail = fmt("%lld violations over %lld paired instances, worst margin %.2e (limit -1e-6)",
                   dom.violations, dom.instances, dom.worst_margin);
    report(4, "dominance over restricted baselines", v, t4);
    all_pass = all_pass && v.pass;
  }

  t = now_s();
  const Verdict v5 = criterion_saturation(opt);
  report(5, "interference cap saturation", v5, t);
  all_pass = all_pass && v5.pass;

  t = now_s();
  const Verdict v6 = criterion_scenarios(opt);
  report(6, "scenario ordering", v6, t);
  all_pass = all_pass && v6.pass;

  t = now_s();
  const Verdict v7 = criterion_hop_gains(opt);
  report(7, "diminishing hop gains", v7, t);
  all_pass = all_pass && v7.pass;

  t = now_s();
  const Verdict v8 = criterion_concavity(opt);
  report(8, "throughput concavity", v8, t);
  all_pass = all_pass && v8.pass;

  t = now_s();
  const Verdict v9 = criterion_numerics(opt);
  report(9, "numerical kernels", v9, t);
  all_pass = all_pass && v9.pass;

  t = now_s();
  const Verdict v10 = criterion_energy_ledger(opt);
  report(10, "energy ledger regimes", v10, t);
  all_pass = all_pass && v10.pass;

  std::printf("acceptance: %s\n", all_pass ? "PASS" : "FAIL");
  return all_pass ? 0 : 1;
}
