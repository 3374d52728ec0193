#pragma once

// Core domain types for time/energy allocation in an RF-powered multi-hop
// underlay network, plus the closed-form arithmetic every solver shares:
// harvested energy, per-hop and end-to-end throughput, constraint residuals.
//
// Conventions.  All powers are linear and normalized by the receiver noise
// power, so eta[h] = g_data[h] / noise_power is dimensionless; dB appears
// only at the configuration boundary.  A frame of length T is split into
// K+1 slots: tau[0] is the initial harvest-only slot and tau[h+1] is the
// transmit slot of hop h+1.  Per-hop vectors (e, gains, eta) have K entries
// indexed h = hop-1.  Node h transmits during slot h+1 using energy it
// harvested over all earlier slots.

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace ehcrn {

inline constexpr double kLn2 = 0.6931471805599453;

/// 10^(x/10); dB values refer to power ratios throughout.
inline double db_to_linear(double x_db) { return std::pow(10.0, x_db / 10.0); }

inline double linear_to_db(double x) {
  if (!(x > 0.0)) throw std::domain_error("linear_to_db: value must be positive");
  return 10.0 * std::log10(x);
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Static system parameters.  Solver knobs live here too so a single struct
// travels through the harness; validate() is called at every solver entry.
struct SystemParams {
  double frame_duration = 1.0;      // T, seconds
  double pt_power = 1e4;            // primary transmitter power (linear, 40 dB)
  double peak_interference = 1.0;   // I_p cap at the primary receiver (linear)
  double harvest_efficiency = 0.8;  // xi in (0, 1]
  double noise_power = 1.0;         // sigma^2 at every secondary receiver
  double path_loss_exponent = 2.0;  // alpha
  double reference_distance = 1.0;  // d0

  // Solver controls.
  double tau_floor_scale = 1e-6;  // minimum transmit slot, relative to T
  double bisection_tol = 0.0;     // outer search tolerance; 0 = 1e-4 * R_max
  double fixed_point_tol = 1e-9;  // inner alternation convergence threshold
  int max_iter = 10000;           // inner alternation iteration cap

  double tau_floor() const { return tau_floor_scale * frame_duration; }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string("SystemParams: ") + name + " must be positive and finite");
      }
    };
    positive(frame_duration, "frame_duration");
    positive(pt_power, "pt_power");
    positive(noise_power, "noise_power");
    positive(reference_distance, "reference_distance");
    if (!(peak_interference >= 0.0) || !std::isfinite(peak_interference)) {
      throw std::invalid_argument("SystemParams: peak_interference must be nonnegative and finite");
    }
    if (!(harvest_efficiency > 0.0) || !(harvest_efficiency <= 1.0)) {
      throw std::invalid_argument("SystemParams: harvest_efficiency must lie in (0, 1]");
    }
    if (!(path_loss_exponent > 0.0) || !std::isfinite(path_loss_exponent)) {
      throw std::invalid_argument("SystemParams: path_loss_exponent must be positive");
    }
    if (!(tau_floor_scale > 0.0) || !(tau_floor_scale < 0.1)) {
      throw std::invalid_argument("SystemParams: tau_floor_scale must lie in (0, 0.1)");
    }
    if (!(bisection_tol >= 0.0) || !(fixed_point_tol > 0.0) || max_iter < 1) {
      throw std::invalid_argument("SystemParams: bad solver tolerances");
    }
  }
};

// Node placement: primary transmitter/receiver plus K+1 secondary nodes
// (source, K-1 relays, destination).  Hop h runs from node[h-1] to node[h].
struct Topology {
  int hop_count = 0;
  Vec2 primary_tx;
  Vec2 primary_rx;
  std::vector<Vec2> secondary;  // hop_count + 1 nodes, source first

  void validate() const {
    if (hop_count < 1) throw std::invalid_argument("Topology: need at least one hop");
    if (static_cast<int>(secondary.size()) != hop_count + 1) {
      throw std::invalid_argument("Topology: secondary node count must be hop_count + 1");
    }
  }
};

/// Distance-dependent power gain |h|^2 * (d/d0)^(-alpha).  Distances below
/// d0 are clamped to d0 so the near-field does not blow up the model.
inline double channel_gain(double fading_power, double dist, double d0, double alpha) {
  if (!(fading_power >= 0.0)) throw std::domain_error("channel_gain: fading power must be nonnegative");
  if (!(d0 > 0.0)) throw std::domain_error("channel_gain: reference distance must be positive");
  const double d = std::max(dist, d0);
  return fading_power * std::pow(d / d0, -alpha);
}

// One fading block.  g_energy[h] is the gain from the primary transmitter to
// the node that transmits hop h+1 (the source for h = 0); the destination
// also harvests but never spends, so its gain is kept only for reporting as
// g_energy[K].  g_interference[h] and g_data[h] belong to hop h+1's
// transmitter; eta[h] = g_data[h] / noise_power.
struct ChannelRealization {
  std::vector<double> g_energy;        // K+1 entries
  std::vector<double> g_interference;  // K entries
  std::vector<double> g_data;          // K entries
  std::vector<double> eta;             // K entries

  int hops() const { return static_cast<int>(g_data.size()); }

  static ChannelRealization from_gains(const SystemParams& sys, std::vector<double> g_e,
                                       std::vector<double> g_i, std::vector<double> g_d) {
    ChannelRealization chan;
    chan.g_energy = std::move(g_e);
    chan.g_interference = std::move(g_i);
    chan.g_data = std::move(g_d);
    chan.eta.resize(chan.g_data.size());
    for (std::size_t h = 0; h < chan.g_data.size(); ++h) chan.eta[h] = chan.g_data[h] / sys.noise_power;
    chan.validate();
    return chan;
  }

  void validate() const {
    const std::size_t k = g_data.size();
    if (k == 0) throw std::invalid_argument("ChannelRealization: no hops");
    if (g_energy.size() != k + 1 || g_interference.size() != k || eta.size() != k) {
      throw std::invalid_argument("ChannelRealization: vector lengths disagree");
    }
    auto check = [](const std::vector<double>& v, const char* name) {
      for (double g : v) {
        if (!(g >= 0.0) || !std::isfinite(g)) {
          throw std::invalid_argument(std::string("ChannelRealization: ") + name + " entries must be nonnegative and finite");
        }
      }
    };
    check(g_energy, "g_energy");
    check(g_interference, "g_interference");
    check(g_data, "g_data");
    check(eta, "eta");
  }
};

// A candidate operating point: slot lengths tau (K+1) and per-hop transmit
// energies e (K).  Transmit power of hop h+1 is e[h] / tau[h+1].
struct Allocation {
  std::vector<double> tau;
  std::vector<double> e;

  int hops() const { return static_cast<int>(e.size()); }

  /// Transmit power of hop `hop` (1-based), zero for an empty slot.
  double power(int hop) const {
    const double t = tau.at(static_cast<std::size_t>(hop));
    if (t <= 0.0) return 0.0;
    return e.at(static_cast<std::size_t>(hop) - 1) / t;
  }
};

/// Energy available to the transmitter of hop `hop` (1-based) once its slot
/// starts: xi * P_t * g_energy[hop-1] * (tau[0] + ... + tau[hop-1]).  Hop
/// K+1 addresses the destination's ledger entry.
inline double harvested_energy(const SystemParams& sys, const ChannelRealization& chan,
                               const std::vector<double>& tau, int hop) {
  const int k = chan.hops();
  if (static_cast<int>(tau.size()) != k + 1) throw std::invalid_argument("harvested_energy: tau must have K+1 slots");
  if (hop < 1 || hop > k + 1) throw std::out_of_range("harvested_energy: hop index out of range");
  double window = 0.0;
  for (int i = 0; i < hop; ++i) window += tau[i];
  return sys.harvest_efficiency * sys.pt_power * chan.g_energy[hop - 1] * window;
}

/// Throughput of one hop over the frame: tau * log2(1 + (e/tau) * eta).
/// Continuously extended by 0 at tau = 0 with e = 0; positive energy in a
/// zero-length slot is rejected.
inline double hop_throughput(double tau, double e, double eta) {
  if (!(tau >= 0.0) || !(e >= 0.0) || !(eta >= 0.0)) {
    throw std::domain_error("hop_throughput: arguments must be nonnegative");
  }
  if (tau == 0.0) {
    if (e > 0.0) throw std::domain_error("hop_throughput: positive energy requires positive slot time");
    return 0.0;
  }
  return tau * std::log2(1.0 + e * eta / tau);
}

/// Bottleneck rate min_h R_h of a decode-and-forward chain.
inline double end_to_end_throughput(const SystemParams& sys, const ChannelRealization& chan,
                                    const Allocation& alloc) {
  (void)sys;
  const int k = chan.hops();
  if (alloc.hops() != k || static_cast<int>(alloc.tau.size()) != k + 1) {
    throw std::invalid_argument("end_to_end_throughput: allocation size mismatch");
  }
  double r = std::numeric_limits<double>::infinity();
  for (int h = 0; h < k; ++h) {
    r = std::min(r, hop_throughput(alloc.tau[h + 1], alloc.e[h], chan.eta[h]));
  }
  return r;
}

// Signed constraint violations, one entry per constraint; a value <= 0 means
// satisfied.  Slot bounds are reported against [0, T]; solvers keep transmit
// slots strictly inside via the tau floor.
struct ConstraintResiduals {
  std::vector<double> energy_causality;  // e[h] - harvested_energy(hop h+1)
  std::vector<double> interference;      // e[h] * g_I[h] - I_p * tau[h+1]
  double time_budget = 0.0;              // sum(tau) - T
  std::vector<double> slot_lower;        // -tau[i]
  std::vector<double> slot_upper;        // tau[i] - T

  /// Worst violation, each entry divided by its natural scale.
  double max_relative(const SystemParams& sys) const {
    double worst = -std::numeric_limits<double>::infinity();
    const double t = sys.frame_duration;
    for (std::size_t h = 0; h < energy_causality.size(); ++h) {
      const double scale = std::max({1e-300, sys.harvest_efficiency * sys.pt_power * t, 1.0});
      worst = std::max(worst, energy_causality[h] / scale);
    }
    for (std::size_t h = 0; h < interference.size(); ++h) {
      const double scale = std::max({1e-300, sys.peak_interference * t, 1.0});
      worst = std::max(worst, interference[h] / scale);
    }
    worst = std::max(worst, time_budget / t);
    for (double v : slot_lower) worst = std::max(worst, v / t);
    for (double v : slot_upper) worst = std::max(worst, v / t);
    return worst;
  }

  bool feasible(const SystemParams& sys, double tol) const { return max_relative(sys) <= tol; }
};

inline ConstraintResiduals constraint_residuals(const SystemParams& sys, const ChannelRealization& chan,
                                                const Allocation& alloc) {
  const int k = chan.hops();
  if (alloc.hops() != k || static_cast<int>(alloc.tau.size()) != k + 1) {
    throw std::invalid_argument("constraint_residuals: allocation size mismatch");
  }
  ConstraintResiduals res;
  res.energy_causality.resize(k);
  res.interference.resize(k);
  double total = 0.0;
  for (double t : alloc.tau) total += t;
  res.time_budget = total - sys.frame_duration;
  for (int h = 0; h < k; ++h) {
    res.energy_causality[h] = alloc.e[h] - harvested_energy(sys, chan, alloc.tau, h + 1);
    res.interference[h] = alloc.e[h] * chan.g_interference[h] - sys.peak_interference * alloc.tau[h + 1];
  }
  res.slot_lower.resize(k + 1);
  res.slot_upper.resize(k + 1);
  for (int i = 0; i <= k; ++i) {
    res.slot_lower[i] = -alloc.tau[i];
    res.slot_upper[i] = alloc.tau[i] - sys.frame_duration;
  }
  return res;
}

// Per-solve bookkeeping carried out of every solver for diagnostics and the
// validation harness.
struct SolverDiagnostics {
  int bisection_iterations = 0;
  long long dual_evaluations = 0;   // inner weighted-problem oracle calls
  long long lambda_iterations = 0;  // outer weight-search cuts
  double dual_gap = 0.0;            // (upper bound - achieved) / max(achieved, eps)
  double upper_bound = 0.0;         // best certified bound on the objective
  bool converged = true;
  std::vector<double> feasible_rates;    // outer search queries answered feasible
  std::vector<double> infeasible_rates;  // outer search queries answered infeasible
};

struct SolveResult {
  Allocation allocation;
  double r_star = 0.0;
  std::vector<double> harvested;  // energy available to each of the K+1 nodes
  SolverDiagnostics diagnostics;
};

/// Loose but valid bottleneck-rate bound: every hop alone is limited by a
/// full-frame slot fed by a full-frame harvest under both caps.
inline double rate_upper_bound(const SystemParams& sys, const ChannelRealization& chan) {
  const int k = chan.hops();
  const double t_total = sys.frame_duration;
  double bound = std::numeric_limits<double>::infinity();
  for (int h = 0; h < k; ++h) {
    const double budget = sys.harvest_efficiency * sys.pt_power * chan.g_energy[h] * t_total;
    const double cap = chan.g_interference[h] > 0.0
                           ? sys.peak_interference * t_total / chan.g_interference[h]
                           : std::numeric_limits<double>::infinity();
    const double e_max = std::min(budget, cap);
    bound = std::min(bound, t_total * std::log2(1.0 + chan.eta[h] * e_max / t_total));
  }
  return bound;
}

/// Fills result.harvested and recomputes r_star from the stored allocation.
inline void finalize_result(const SystemParams& sys, const ChannelRealization& chan, SolveResult& result) {
  const int k = chan.hops();
  result.harvested.resize(k + 1);
  for (int hop = 1; hop <= k + 1; ++hop) {
    result.harvested[hop - 1] = harvested_energy(sys, chan, result.allocation.tau, hop);
  }
  result.r_star = end_to_end_throughput(sys, chan, result.allocation);
}

}  // namespace ehcrn
