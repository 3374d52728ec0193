#pragma once

// Monte Carlo experiment runner: Cartesian sweeps over (scenario, hops,
// algorithm, P_t, I_p, alpha, xi), paired channel realizations across
// algorithms, deterministic aggregation, and CSV/JSON export.  Figure
// recipes reproduce the benchmark experiment grids from defaults.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "ehcrn/baselines.hpp"
#include "ehcrn/jotpa.hpp"
#include "ehcrn/model.hpp"
#include "ehcrn/oracle.hpp"
#include "ehcrn/scenarios.hpp"

namespace ehcrn {

// dB values at or below this sentinel mean "exactly zero power" so configs
// can express hard-off cases that have no finite dB representation.
inline constexpr double kDbZeroSentinel = -900.0;

inline double db_field_to_linear(double x_db) {
  return x_db <= kDbZeroSentinel ? 0.0 : db_to_linear(x_db);
}

struct ExperimentConfig {
  std::vector<int> scenarios{2};
  std::vector<int> hops{3};
  std::vector<std::string> algorithms{"jotpa"};
  std::vector<double> pt_db{40.0};
  std::vector<double> ip_db{5.0};
  std::vector<double> alpha{2.0};
  std::vector<double> xi{0.8};
  long long realizations = 500;
  std::uint64_t seed = 20240811;
  std::string out;
  std::string format = "csv";
  int jobs = 0;  // 0 = hardware concurrency
  bool dump_realizations = false;
  bool energy_detail = false;

  // Solver overrides; zero/negative means the library default.
  double bisection_tol = 0.0;
  double fixed_point_tol = 0.0;
  int max_iter = 0;
  double tau_floor_scale = 0.0;
  std::string otepa_power_mode = "search";
  double otepa_fixed_power_db = 0.0;

  void validate() const {
    if (realizations < 1) throw std::invalid_argument("config: realizations must be >= 1");
    if (scenarios.empty() || hops.empty() || algorithms.empty() || pt_db.empty() || ip_db.empty() ||
        alpha.empty() || xi.empty()) {
      throw std::invalid_argument("config: sweep lists must be nonempty");
    }
    for (double v : pt_db) {
      if (!std::isfinite(v)) throw std::invalid_argument("config: pt_db must be finite");
    }
    for (double v : ip_db) {
      if (!std::isfinite(v)) throw std::invalid_argument("config: ip_db must be finite");
    }
    for (int s : scenarios) scenario_from_int(s);
    for (int k : hops) {
      if (k < 1) throw std::invalid_argument("config: hops must be >= 1");
    }
    for (const std::string& a : algorithms) {
      if (a != "jotpa" && a != "otepa" && a != "etopa" && a != "oracle") {
        throw std::invalid_argument("config: unknown algorithm '" + a + "'");
      }
    }
    if (format != "csv" && format != "json") throw std::invalid_argument("config: format must be csv or json");
    if (otepa_power_mode != "search" && otepa_power_mode != "fixed") {
      throw std::invalid_argument("config: otepa_power_mode must be search or fixed");
    }
  }

  SystemParams system_params(double pt_db_value, double ip_db_value, double alpha_value,
                             double xi_value) const {
    SystemParams sys;
    sys.pt_power = db_field_to_linear(pt_db_value);
    sys.peak_interference = db_field_to_linear(ip_db_value);
    sys.path_loss_exponent = alpha_value;
    sys.harvest_efficiency = xi_value;
    if (bisection_tol > 0.0) sys.bisection_tol = bisection_tol;
    if (fixed_point_tol > 0.0) sys.fixed_point_tol = fixed_point_tol;
    if (max_iter > 0) sys.max_iter = max_iter;
    if (tau_floor_scale > 0.0) sys.tau_floor_scale = tau_floor_scale;
    return sys;
  }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{{"scenarios", c.scenarios},
                     {"hops", c.hops},
                     {"algorithms", c.algorithms},
                     {"pt_db", c.pt_db},
                     {"ip_db", c.ip_db},
                     {"alpha", c.alpha},
                     {"xi", c.xi},
                     {"realizations", c.realizations},
                     {"seed", c.seed},
                     {"out", c.out},
                     {"format", c.format},
                     {"jobs", c.jobs},
                     {"dump_realizations", c.dump_realizations},
                     {"energy_detail", c.energy_detail},
                     {"bisection_tol", c.bisection_tol},
                     {"fixed_point_tol", c.fixed_point_tol},
                     {"max_iter", c.max_iter},
                     {"tau_floor_scale", c.tau_floor_scale},
                     {"otepa_power_mode", c.otepa_power_mode},
                     {"otepa_fixed_power_db", c.otepa_fixed_power_db}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  static const char* known[] = {"scenarios",     "hops",          "algorithms",
                                "pt_db",         "ip_db",         "alpha",
                                "xi",            "realizations",  "seed",
                                "out",           "format",        "jobs",
                                "dump_realizations", "energy_detail", "bisection_tol",
                                "fixed_point_tol",   "max_iter",      "tau_floor_scale",
                                "otepa_power_mode",  "otepa_fixed_power_db"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* name : known) ok = ok || it.key() == name;
    if (!ok) throw std::invalid_argument("config: unknown key '" + it.key() + "'");
  }
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("scenarios", c.scenarios);
  get("hops", c.hops);
  get("algorithms", c.algorithms);
  get("pt_db", c.pt_db);
  get("ip_db", c.ip_db);
  get("alpha", c.alpha);
  get("xi", c.xi);
  get("realizations", c.realizations);
  get("seed", c.seed);
  get("out", c.out);
  get("format", c.format);
  get("jobs", c.jobs);
  get("dump_realizations", c.dump_realizations);
  get("energy_detail", c.energy_detail);
  get("bisection_tol", c.bisection_tol);
  get("fixed_point_tol", c.fixed_point_tol);
  get("max_iter", c.max_iter);
  get("tau_floor_scale", c.tau_floor_scale);
  get("otepa_power_mode", c.otepa_power_mode);
  get("otepa_fixed_power_db", c.otepa_fixed_power_db);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  ExperimentConfig c = j.get<ExperimentConfig>();
  c.validate();
  return c;
}

struct ResultRow {
  int scenario = 0;
  int hops = 0;
  std::string algorithm;
  double pt_db = 0.0;
  double ip_db = 0.0;
  double alpha = 0.0;
  double xi = 0.0;
  long long n = 0;
  double mean_r = 0.0;
  double std_r = 0.0;
  double ci95 = 0.0;
  double utilization = 0.0;
  long long failures = 0;
  std::uint64_t digest = 0;  // order-sensitive hash of consumed realizations

  std::vector<double> samples;  // per-realization rates, kept for dumps
  // Per-SU means when energy detail is requested (index = SU number - 1).
  std::vector<double> mean_harvested;
  std::vector<double> mean_allocated;
  std::vector<double> mean_tau;
};

struct ResultTable {
  std::vector<ResultRow> rows;
};

namespace harness_detail {

// Pairwise summation keeps the aggregation order-independent and lets the
// dumped samples reproduce the reported statistics exactly.
inline double pairwise_sum(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
  const std::size_t n = hi - lo;
  if (n == 0) return 0.0;
  if (n == 1) return v[lo];
  if (n == 2) return v[lo] + v[lo + 1];
  const std::size_t mid = lo + n / 2;
  return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

inline double pairwise_mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : pairwise_sum(v, 0, v.size()) / static_cast<double>(v.size());
}

inline double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mean) * (v[i] - mean);
  return std::sqrt(pairwise_sum(sq, 0, sq.size()) / static_cast<double>(v.size() - 1));
}

struct Sample {
  double rate = 0.0;
  double utilization = 0.0;
  bool converged = true;
  std::uint64_t digest = 0;
  std::vector<double> harvested;
  std::vector<double> allocated;
  std::vector<double> tau;
};

inline SolveResult dispatch(const std::string& algorithm, const SystemParams& sys,
                            const ChannelRealization& chan, const ExperimentConfig& cfg) {
  if (algorithm == "jotpa") return jotpa_solve(sys, chan);
  if (algorithm == "otepa") {
    if (cfg.otepa_power_mode == "fixed") {
      return otepa_solve(sys, chan, OtepaPowerMode::fixed, db_field_to_linear(cfg.otepa_fixed_power_db));
    }
    return otepa_solve(sys, chan);
  }
  if (algorithm == "etopa") return etopa_solve(sys, chan);
  if (algorithm == "oracle") {
    return oracle_solve(sys, chan,
                        chan.hops() <= 3 ? OracleMethod::grid : OracleMethod::projected_subgradient);
  }
  throw std::invalid_argument("unknown algorithm: " + algorithm);
}

inline Sample run_one(const std::string& algorithm, const SystemParams& sys, const Topology& topo,
                      const ExperimentConfig& cfg, std::uint64_t realization) {
  const ChannelRealization chan = sample_channels(topo, sys, SeededRng{cfg.seed}.with_realization(realization));
  const SolveResult res = dispatch(algorithm, sys, chan, cfg);
  Sample s;
  s.rate = res.r_star;
  s.converged = res.diagnostics.converged;
  s.digest = realization_digest(chan);
  const int k = chan.hops();
  double spent = 0.0, harvested = 0.0;
  for (int h = 0; h < k; ++h) {
    spent += res.allocation.e[h];
    harvested += res.harvested[h];
  }
  s.utilization = harvested > 0.0 ? std::min(spent / harvested, 1.0) : 0.0;
  if (cfg.energy_detail) {
    s.harvested.assign(res.harvested.begin(), res.harvested.begin() + k);
    s.allocated = res.allocation.e;
    s.tau.assign(res.allocation.tau.begin() + 1, res.allocation.tau.end());
  }
  return s;
}

}  // namespace harness_detail

/// Runs the full Cartesian sweep.  Realizations are paired: every algorithm
/// at a given sweep point consumes the identical channel draws, keyed only
/// by (seed, realization index), never by algorithm or loop order.
inline ResultTable run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  ResultTable table;
  for (int scenario : cfg.scenarios) {
    for (int k : cfg.hops) {
      const Topology topo = build_topology(scenario_from_int(scenario), k);
      for (double pt : cfg.pt_db) {
        for (double ip : cfg.ip_db) {
          for (double al : cfg.alpha) {
            for (double x : cfg.xi) {
              const SystemParams sys = cfg.system_params(pt, ip, al, x);
              for (const std::string& algorithm : cfg.algorithms) {
                const long long n = cfg.realizations;
                std::vector<harness_detail::Sample> samples(n);
                int jobs = cfg.jobs > 0 ? cfg.jobs
                                        : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
                jobs = static_cast<int>(std::min<long long>(jobs, n));
                if (jobs <= 1) {
                  for (long long i = 0; i < n; ++i) {
                    samples[i] = harness_detail::run_one(algorithm, sys, topo, cfg, i);
                  }
                } else {
                  std::vector<std::thread> pool;
                  for (int t = 0; t < jobs; ++t) {
                    pool.emplace_back([&, t]() {
                      for (long long i = t; i < n; i += jobs) {
                        samples[i] = harness_detail::run_one(algorithm, sys, topo, cfg, i);
                      }
                    });
                  }
                  for (std::thread& th : pool) th.join();
                }

                ResultRow row;
                row.scenario = scenario;
                row.hops = k;
                row.algorithm = algorithm;
                row.pt_db = pt;
                row.ip_db = ip;
                row.alpha = al;
                row.xi = x;
                row.n = n;
                row.samples.resize(n);
                std::vector<double> utils(n);
                std::uint64_t digest = 0x9e3779b97f4a7c15ULL;
                for (long long i = 0; i < n; ++i) {
                  row.samples[i] = samples[i].rate;
                  utils[i] = samples[i].utilization;
                  if (!samples[i].converged) ++row.failures;
                  digest = splitmix64(digest ^ samples[i].digest);
                }
                row.digest = digest;
                row.mean_r = harness_detail::pairwise_mean(row.samples);
                row.std_r = harness_detail::sample_std(row.samples, row.mean_r);
                row.ci95 = n > 1 ? 1.96 * row.std_r / std::sqrt(static_cast<double>(n)) : 0.0;
                row.utilization = harness_detail::pairwise_mean(utils);
                if (cfg.energy_detail) {
                  row.mean_harvested.assign(k, 0.0);
                  row.mean_allocated.assign(k, 0.0);
                  row.mean_tau.assign(k, 0.0);
                  std::vector<double> scratch(n);
                  for (int h = 0; h < k; ++h) {
                    for (long long i = 0; i < n; ++i) scratch[i] = samples[i].harvested[h];
                    row.mean_harvested[h] = harness_detail::pairwise_mean(scratch);
                    for (long long i = 0; i < n; ++i) scratch[i] = samples[i].allocated[h];
                    row.mean_allocated[h] = harness_detail::pairwise_mean(scratch);
                    for (long long i = 0; i < n; ++i) scratch[i] = samples[i].tau[h];
                    row.mean_tau[h] = harness_detail::pairwise_mean(scratch);
                  }
                }
                table.rows.push_back(std::move(row));
              }
            }
          }
        }
      }
    }
  }
  return table;
}

struct EnergyRow {
  int su = 0;  // 1-based transmitting SU index
  double harvested = 0.0;
  double allocated_e = 0.0;
  double allocated_tau = 0.0;
};

/// Per-SU energy ledger of one solve; allocated never exceeds harvested for
/// any feasible witness.
inline std::vector<EnergyRow> energy_report(const SystemParams& sys, const ChannelRealization& chan,
                                            const SolveResult& result) {
  const int k = chan.hops();
  std::vector<EnergyRow> rows(k);
  for (int h = 0; h < k; ++h) {
    rows[h].su = h + 1;
    rows[h].harvested = static_cast<int>(result.harvested.size()) == k + 1
                            ? result.harvested[h]
                            : harvested_energy(sys, chan, result.allocation.tau, h + 1);
    rows[h].allocated_e = result.allocation.e[h];
    rows[h].allocated_tau = result.allocation.tau[h + 1];
  }
  return rows;
}

namespace harness_detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace harness_detail

/// Fixed-order CSV: scenario,K,algorithm,pt_db,ip_db,alpha,xi,n,mean_r,
/// std_r,ci95,utilization.  Energy detail, when present, goes to a
/// companion schema via write_energy_csv.
inline void write_csv(const ResultTable& table, std::ostream& os) {
  os << "scenario,K,algorithm,pt_db,ip_db,alpha,xi,n,mean_r,std_r,ci95,utilization\n";
  for (const ResultRow& r : table.rows) {
    os << r.scenario << ',' << r.hops << ',' << r.algorithm << ',' << harness_detail::format_double(r.pt_db)
       << ',' << harness_detail::format_double(r.ip_db) << ',' << harness_detail::format_double(r.alpha)
       << ',' << harness_detail::format_double(r.xi) << ',' << r.n << ','
       << harness_detail::format_double(r.mean_r) << ',' << harness_detail::format_double(r.std_r) << ','
       << harness_detail::format_double(r.ci95) << ',' << harness_detail::format_double(r.utilization)
       << '\n';
  }
}

inline void write_energy_csv(const ResultTable& table, std::ostream& os) {
  os << "scenario,K,algorithm,pt_db,ip_db,alpha,xi,n,su,harvested,allocated_e,allocated_tau\n";
  for (const ResultRow& r : table.rows) {
    for (std::size_t h = 0; h < r.mean_harvested.size(); ++h) {
      os << r.scenario << ',' << r.hops << ',' << r.algorithm << ','
         << harness_detail::format_double(r.pt_db) << ',' << harness_detail::format_double(r.ip_db) << ','
         << harness_detail::format_double(r.alpha) << ',' << harness_detail::format_double(r.xi) << ','
         << r.n << ',' << (h + 1) << ',' << harness_detail::format_double(r.mean_harvested[h]) << ','
         << harness_detail::format_double(r.mean_allocated[h]) << ','
         << harness_detail::format_double(r.mean_tau[h]) << '\n';
    }
  }
}

inline nlohmann::json table_to_json(const ResultTable& table, bool dump_samples) {
  nlohmann::json rows = nlohmann::json::array();
  for (const ResultRow& r : table.rows) {
    nlohmann::json jr{{"scenario", r.scenario},
                      {"K", r.hops},
                      {"algorithm", r.algorithm},
                      {"pt_db", r.pt_db},
                      {"ip_db", r.ip_db},
                      {"alpha", r.alpha},
                      {"xi", r.xi},
                      {"n", r.n},
                      {"mean_r", r.mean_r},
                      {"std_r", r.std_r},
                      {"ci95", r.ci95},
                      {"utilization", r.utilization},
                      {"failures", r.failures},
                      {"realization_digest", r.digest}};
    if (!r.mean_harvested.empty()) {
      jr["mean_harvested"] = r.mean_harvested;
      jr["mean_allocated"] = r.mean_allocated;
      jr["mean_tau"] = r.mean_tau;
    }
    if (dump_samples) jr["samples"] = r.samples;
    rows.push_back(std::move(jr));
  }
  return nlohmann::json{{"rows", rows}};
}

/// Named experiment grids matching the benchmark figures.
inline ExperimentConfig figure_recipe(const std::string& id) {
  ExperimentConfig c;
  c.realizations = 500;
  if (id == "fig3" || id == "fig5") {
    c.scenarios = {1, 2, 3};
    c.hops = {1, 2, 3, 4, 5, 6};
    c.algorithms = {"jotpa"};
    c.ip_db = {id == "fig3" ? 10.0 : 0.0};
  } else if (id == "fig4" || id == "fig6") {
    c.scenarios = {1, 2, 3};
    c.hops = {6};
    c.algorithms = {"jotpa"};
    c.ip_db = {id == "fig4" ? 10.0 : 0.0};
    c.energy_detail = true;
  } else if (id == "fig7") {
    c.scenarios = {2};
    c.hops = {2, 4, 6};
    c.algorithms = {"jotpa"};
    c.ip_db = {-30, -20, -10, 0, 10, 20, 30, 40, 50, 60};
  } else if (id == "fig8") {
    c.scenarios = {2};
    c.hops = {3};
    c.algorithms = {"jotpa", "otepa", "etopa"};
    c.pt_db = {10, 20, 30, 40, 50, 60};
    c.xi = {0.5, 0.8};
  } else if (id == "fig9") {
    c.scenarios = {2};
    c.hops = {3};
    c.algorithms = {"jotpa", "otepa", "etopa"};
    c.energy_detail = true;
  } else if (id == "fig10") {
    c.scenarios = {2};
    c.hops = {3, 4, 5};
    c.algorithms = {"jotpa", "otepa", "etopa"};
    c.alpha = {2.0, 2.5, 3.0, 3.5, 4.0};
  } else {
    throw std::invalid_argument("unknown figure id: " + id +
                                " (expected fig3..fig10)");
  }
  return c;
}

}  // namespace ehcrn
