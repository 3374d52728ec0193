// Command line front end: single solves, Monte Carlo sweeps, named figure
// experiments, and the acceptance suite.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ehcrn/harness.hpp"
#include "ehcrn/validation.hpp"

namespace {

using namespace ehcrn;

void write_output(const ResultTable& table, const ExperimentConfig& cfg) {
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!cfg.out.empty()) {
    file.open(cfg.out);
    if (!file) throw std::runtime_error("cannot open output file: " + cfg.out);
    os = &file;
  }
  if (cfg.format == "json") {
    *os << table_to_json(table, cfg.dump_realizations).dump(2) << '\n';
    return;
  }
  write_csv(table, *os);
  if (cfg.energy_detail) {
    if (cfg.out.empty()) {
      *os << '\n';
      write_energy_csv(table, *os);
    } else {
      std::ofstream efile(cfg.out + ".energy.csv");
      if (!efile) throw std::runtime_error("cannot open output file: " + cfg.out + ".energy.csv");
      write_energy_csv(table, efile);
    }
  }
  if (!cfg.out.empty()) {
    std::cout << "wrote " << table.rows.size() << " rows to " << cfg.out << '\n';
  }
}

void print_solve_text(const std::string& algorithm, const SystemParams& sys,
                      const ChannelRealization& chan, const SolveResult& res) {
  const int k = chan.hops();
  std::cout << algorithm << ": R* = " << res.r_star << " bits/Hz"
            << "  (upper bound " << res.diagnostics.upper_bound << ", gap " << res.diagnostics.dual_gap
            << ", " << res.diagnostics.bisection_iterations << " outer steps, "
            << res.diagnostics.dual_evaluations << " dual evals, "
            << (res.diagnostics.converged ? "converged" : "NOT converged") << ")\n";
  std::cout << "  node   tau           e             power         harvested\n";
  char line[160];
  std::snprintf(line, sizeof(line), "  %-6d %-13.6g %-13s %-13s %-13s\n", 0, res.allocation.tau[0], "-",
                "-", "-");
  std::cout << line;
  for (int h = 0; h < k; ++h) {
    std::snprintf(line, sizeof(line), "  %-6d %-13.6g %-13.6g %-13.6g %-13.6g\n", h + 1,
                  res.allocation.tau[h + 1], res.allocation.e[h], res.allocation.power(h + 1),
                  res.harvested[h]);
    std::cout << line;
  }
  const double resid = constraint_residuals(sys, chan, res.allocation).max_relative(sys);
  std::cout << "  max relative constraint residual: " << resid << "\n";
}

int run_solve(const ExperimentConfig& cfg, std::uint64_t realization) {
  const int scenario = cfg.scenarios.front();
  const int k = cfg.hops.front();
  const SystemParams sys = cfg.system_params(cfg.pt_db.front(), cfg.ip_db.front(), cfg.alpha.front(),
                                             cfg.xi.front());
  const Topology topo = build_topology(scenario_from_int(scenario), k);
  const ChannelRealization chan =
      sample_channels(topo, sys, SeededRng{cfg.seed}.with_realization(realization));

  nlohmann::json jout = nlohmann::json::object();
  for (const std::string& algorithm : cfg.algorithms) {
    const SolveResult res = harness_detail::dispatch(algorithm, sys, chan, cfg);
    if (cfg.format == "json") {
      jout[algorithm] = {
          {"r_star", res.r_star},
          {"tau", res.allocation.tau},
          {"e", res.allocation.e},
          {"harvested", res.harvested},
          {"residual", constraint_residuals(sys, chan, res.allocation).max_relative(sys)},
          {"upper_bound", res.diagnostics.upper_bound},
          {"dual_gap", res.diagnostics.dual_gap},
          {"bisection_iterations", res.diagnostics.bisection_iterations},
          {"dual_evaluations", res.diagnostics.dual_evaluations},
          {"converged", res.diagnostics.converged},
      };
    } else {
      print_solve_text(algorithm, sys, chan, res);
    }
  }
  if (cfg.format == "json") {
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!cfg.out.empty()) {
      file.open(cfg.out);
      if (!file) throw std::runtime_error("cannot open output file: " + cfg.out);
      os = &file;
    }
    *os << jout.dump(2) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Max-min end-to-end throughput solvers and Monte Carlo harness for "
               "RF-energy-harvesting multi-hop underlay secondary networks"};
  app.require_subcommand(1);

  std::string config_path, out_path, format;
  std::uint64_t seed = 0;
  long long realizations = 0;
  int jobs = -1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON experiment config file")
        ->envname("EHCRN_CONFIG")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_path, "output path (default: stdout)")->envname("EHCRN_OUT");
    sub->add_option("--format", format, "csv or json")
        ->envname("EHCRN_FORMAT")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", seed, "base RNG seed")->envname("EHCRN_SEED");
    sub->add_option("--realizations", realizations, "Monte Carlo realizations per sweep point")
        ->envname("EHCRN_REALIZATIONS")
        ->check(CLI::PositiveNumber);
    sub->add_option("--jobs", jobs, "worker threads (0 = hardware)")->envname("EHCRN_JOBS");
  };

  // solve
  CLI::App* solve = app.add_subcommand("solve", "solve one channel realization and print the allocation");
  add_common(solve);
  int s_scenario = 0, s_hops = 0;
  double s_pt = std::numeric_limits<double>::quiet_NaN(), s_ip = std::numeric_limits<double>::quiet_NaN();
  double s_alpha = std::numeric_limits<double>::quiet_NaN(), s_xi = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t s_realization = 0;
  std::vector<std::string> s_algorithms;
  solve->add_option("--scenario", s_scenario, "scenario id 1..3");
  solve->add_option("-K,--hops", s_hops, "number of hops");
  solve->add_option("--pt-db", s_pt, "primary transmit power, dB");
  solve->add_option("--ip-db", s_ip, "peak interference cap, dB (<= -900 means zero)");
  solve->add_option("--alpha", s_alpha, "path loss exponent");
  solve->add_option("--xi", s_xi, "energy harvesting efficiency");
  solve->add_option("--realization", s_realization, "realization index within the seed stream");
  solve->add_option("--algorithm", s_algorithms, "jotpa|otepa|etopa|oracle (repeatable)");

  // sweep
  CLI::App* sweep = app.add_subcommand("sweep", "run the Monte Carlo sweep from a config");
  add_common(sweep);

  // figure
  CLI::App* figure = app.add_subcommand("figure", "run a named benchmark experiment grid");
  std::string figure_id;
  figure->add_option("id", figure_id, "fig3..fig10")->required();
  add_common(figure);

  // validate
  CLI::App* validate = app.add_subcommand("validate", "run the acceptance suite");
  bool quick = false;
  validate->add_flag("--quick", quick, "reduced-size smoke variant");
  validate->add_option("--seed", seed, "base RNG seed")->envname("EHCRN_SEED");
  validate->add_option("--jobs", jobs, "worker threads (0 = hardware)")->envname("EHCRN_JOBS");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) {
      AcceptanceOptions opt;
      opt.quick = quick;
      if (seed != 0) opt.seed = seed;
      if (jobs >= 0) opt.jobs = jobs;
      const std::vector<CriterionResult> results = run_acceptance(opt, std::cout);
      std::cout << (acceptance_passed(results) ? "acceptance: PASS" : "acceptance: FAIL") << std::endl;
      return acceptance_passed(results) ? 0 : 1;
    }

    ExperimentConfig cfg;
    if (figure->parsed()) cfg = figure_recipe(figure_id);
    if (!config_path.empty()) cfg = load_config(config_path);
    if (!out_path.empty()) cfg.out = out_path;
    if (!format.empty()) cfg.format = format;
    if (seed != 0) cfg.seed = seed;
    if (realizations > 0) cfg.realizations = realizations;
    if (jobs >= 0) cfg.jobs = jobs;

    if (solve->parsed()) {
      if (s_scenario > 0) cfg.scenarios = {s_scenario};
      if (s_hops > 0) cfg.hops = {s_hops};
      if (!std::isnan(s_pt)) cfg.pt_db = {s_pt};
      if (!std::isnan(s_ip)) cfg.ip_db = {s_ip};
      if (!std::isnan(s_alpha)) cfg.alpha = {s_alpha};
      if (!std::isnan(s_xi)) cfg.xi = {s_xi};
      if (!s_algorithms.empty()) cfg.algorithms = s_algorithms;
      cfg.validate();
      return run_solve(cfg, s_realization);
    }

    cfg.validate();
    const ResultTable table = run_sweep(cfg);
    write_output(table, cfg);
    return 0;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 2;
  }
}
