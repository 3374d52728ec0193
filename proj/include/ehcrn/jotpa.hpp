#pragma once

// Joint time and power allocation maximizing the bottleneck throughput.
//
// Nesting, outermost first: a bisection on the target rate R; a feasibility
// test that searches hop weights lambda on the unit simplex; for fixed
// weights, a minimization over energy-causality prices mu by the ellipsoid
// method; and for fixed prices, closed-form per-hop updates built on the
// Lambert W function.
//
// For each hop the priced problem reduces to a single per-time score.  With
// c_k the cumulative price of the energy a unit of earlier time feeds to
// hops up to k, the stationary SNR z*_k solves
//     ln(1+z) - z/(1+z) = ln2 * c_k / lambda_k,
// whose solution is z* = -(1+w)/w with w = W0(-exp(-ln2*c_k/lambda_k - 1)).
// The admissible SNR is capped by the price-optimal level and by the
// interference limit; comparing the capped score h_k against zero tells
// whether the priced problem wants the hop to run.  Evaluating the relaxed
// objective at that per-hop optimum gives a value convex in mu whose
// minimum over prices equals the weighted optimum, so every evaluation is
// a certified upper bound; feasible witnesses are recovered separately by
// a projected fixed-point alternation and provide certified lower bounds.
// The rate bisection squeezes both bounds.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "ehcrn/baselines.hpp"

#include "ehcrn/model.hpp"
#include "ehcrn/numerics.hpp"

namespace ehcrn {

inline constexpr double kMuFloor = 1e-12;
inline constexpr double kLambdaFloor = 1e-10;

// Multipliers of the weighted problem: lambda weighs the per-hop rates, mu
// prices the energy-causality constraints.  The time-budget multiplier is
// analytically eliminated (the harvest slot's stationarity pins it), so it
// is never stored.
struct DualState {
  std::vector<double> lambda;
  std::vector<double> mu;

  /// Lambert-W arguments implied by the multipliers, one per hop.
  std::vector<double> psi(const SystemParams& sys, const ChannelRealization& chan) const;
};

/// Lambert-W argument of hop `hop` (1-based):
/// -exp(-(ln2/lambda_k) * xi * P_t * sum_{j<=hop} mu_j g_E,j - 1), always in
/// [-1/e, 0).
inline double psi_value(double lambda_k, const std::vector<double>& mu, const SystemParams& sys,
                        const ChannelRealization& chan, int hop) {
  if (!(lambda_k > 0.0)) throw std::domain_error("psi_value: degenerate weight, lambda must be positive");
  if (hop < 1 || hop > chan.hops()) throw std::out_of_range("psi_value: hop out of range");
  double c = 0.0;
  for (int j = 0; j < hop; ++j) c += std::max(mu[j], 0.0) * chan.g_energy[j];
  c *= sys.harvest_efficiency * sys.pt_power;
  return -std::exp(-kLn2 * c / lambda_k - 1.0);
}

inline std::vector<double> DualState::psi(const SystemParams& sys, const ChannelRealization& chan) const {
  std::vector<double> out(chan.hops());
  for (int h = 1; h <= chan.hops(); ++h) {
    out[h - 1] = psi_value(std::max(lambda[h - 1], kLambdaFloor), mu, sys, chan, h);
  }
  return out;
}

namespace jotpa_detail {

inline std::vector<double> normalize_weights(std::vector<double> lambda) {
  double sum = 0.0;
  for (double& l : lambda) {
    l = std::max(l, kLambdaFloor);
    sum += l;
  }
  for (double& l : lambda) l /= sum;
  return lambda;
}

// Closed-form quantities of one hop under fixed multipliers.
struct HopTerms {
  double c_cum = 0.0;   // cumulative harvest price through this hop
  double w = -1.0;      // W0 of the hop's Lambert argument
  double z_star = 0.0;  // stationary SNR of the time/energy tradeoff
  double z_cap = 0.0;   // admissible SNR after price and interference caps
  double score = 0.0;   // net value per unit of transmit time at z_cap
};

inline std::vector<HopTerms> hop_terms(const std::vector<double>& lambda, const std::vector<double>& mu,
                                       const SystemParams& sys, const ChannelRealization& chan) {
  const int k = chan.hops();
  const double harvest_rate = sys.harvest_efficiency * sys.pt_power;
  std::vector<HopTerms> terms(k);
  double c = 0.0;
  for (int h = 0; h < k; ++h) {
    const double mu_h = std::max(mu[h], kMuFloor);
    const double lam = std::max(lambda[h], kLambdaFloor);
    c += mu_h * chan.g_energy[h] * harvest_rate;
    HopTerms& t = terms[h];
    t.c_cum = c;
    const double a = kLn2 * c / lam;
    t.w = lambert_w0(-std::exp(-a - 1.0));
    const double wp1 = 1.0 + t.w;
    t.z_star = t.w < 0.0 ? -wp1 / t.w : std::numeric_limits<double>::infinity();
    const double eta = chan.eta[h];
    if (eta <= 0.0) {
      t.z_cap = 0.0;
      t.score = -c;
      continue;
    }
    const double z_price = std::max(lam * eta / (kLn2 * mu_h) - 1.0, 0.0);
    const double gi = chan.g_interference[h];
    const double z_int = gi > 0.0 ? sys.peak_interference * eta / gi : std::numeric_limits<double>::infinity();
    t.z_cap = std::min(z_price, z_int);
    t.score = lam * std::log2(1.0 + t.z_cap) - mu_h * t.z_cap / eta - c;
  }
  return terms;
}

// Value, certificate and subgradient of the priced relaxation at its exact
// per-hop maximizer.  `subgradient` keeps the energy-minus-budget
// orientation; the price minimization therefore descends along its
// negation.
struct RelaxedPoint {
  double value = 0.0;
  double certificate = 0.0;  // tighter bound honoring a nonnegative harvest slot
  std::vector<double> subgradient;
  std::vector<double> tau;  // maximizer; tau[0] may be negative here
  std::vector<double> e;
};

inline RelaxedPoint relaxed_point(const std::vector<HopTerms>& terms, const std::vector<double>& lambda,
                                  const std::vector<double>& mu, const SystemParams& sys,
                                  const ChannelRealization& chan) {
  const int k = chan.hops();
  const double t_total = sys.frame_duration;
  RelaxedPoint out;
  out.tau.assign(k + 1, 0.0);
  out.e.assign(k, 0.0);
  out.subgradient.assign(k, 0.0);
  double active_sum = 0.0;
  double best_score = 0.0;
  for (int h = 0; h < k; ++h) {
    if (terms[h].score > 0.0) {
      out.tau[h + 1] = t_total;
      active_sum += t_total;
      if (chan.eta[h] > 0.0) out.e[h] = terms[h].z_cap * t_total / chan.eta[h];
    }
    best_score = std::max(best_score, terms[h].score);
  }
  out.tau[0] = t_total - active_sum;
  const double omega = terms.empty() ? 0.0 : terms.back().c_cum;
  out.certificate = t_total * (omega + best_score);

  double value = 0.0;
  double window = out.tau[0];
  for (int h = 0; h < k; ++h) {
    const double lam = std::max(lambda[h], kLambdaFloor);
    const double slot = out.tau[h + 1];
    if (slot > 0.0 && chan.eta[h] > 0.0) {
      value += lam * slot * std::log2(1.0 + out.e[h] * chan.eta[h] / slot);
    }
    const double budget = sys.harvest_efficiency * sys.pt_power * chan.g_energy[h] * window;
    const double mu_h = std::max(mu[h], kMuFloor);
    value += mu_h * (budget - out.e[h]);
    out.subgradient[h] = out.e[h] - budget;
    window += slot;
  }
  out.value = value;
  return out;
}

}  // namespace jotpa_detail

/// Slot lengths from energies under fixed multipliers:
/// tau_k = -e_k eta_k W0(psi_k)/(W0(psi_k)+1), with the harvest slot taking
/// the remaining frame time.  Transmit slots are clamped to
/// [tau_floor, T] and scaled back proportionally if their sum would leave
/// the harvest slot below the floor.
inline std::vector<double> tau_from_e(const std::vector<double>& e, const DualState& dual,
                                      const SystemParams& sys, const ChannelRealization& chan) {
  const int k = chan.hops();
  if (static_cast<int>(e.size()) != k) throw std::invalid_argument("tau_from_e: energy vector size mismatch");
  const double t_total = sys.frame_duration;
  const double floor_t = sys.tau_floor();
  const std::vector<jotpa_detail::HopTerms> terms = jotpa_detail::hop_terms(dual.lambda, dual.mu, sys, chan);
  std::vector<double> tau(k + 1, 0.0);
  double sum = 0.0;
  for (int h = 0; h < k; ++h) {
    const double wp1 = 1.0 + terms[h].w;
    if (wp1 <= 1e-14) {
      if (e[h] > 0.0) {
        throw std::domain_error("tau_from_e: Lambert argument at the branch point (prices vanish); clamp mu first");
      }
      tau[h + 1] = floor_t;
    } else {
      const double raw = -e[h] * chan.eta[h] * terms[h].w / wp1;
      tau[h + 1] = std::clamp(raw, floor_t, t_total);
    }
    sum += tau[h + 1];
  }
  if (sum > t_total - floor_t) {
    const double scale = (t_total - floor_t) / sum;
    double pool = 0.0;
    sum = 0.0;
    for (int h = 0; h < k; ++h) {
      tau[h + 1] = std::max(tau[h + 1] * scale, floor_t);
      pool += tau[h + 1] - floor_t;
      sum += tau[h + 1];
    }
    // Flooring after the scale can still overshoot; shave the excess off
    // the non-floored slots so the harvest slot keeps its floor exactly.
    double excess = sum - (t_total - floor_t);
    if (excess > 0.0 && pool > 0.0) {
      const double shave = std::min(1.0, excess / pool);
      sum = 0.0;
      for (int h = 0; h < k; ++h) {
        tau[h + 1] = floor_t + (tau[h + 1] - floor_t) * (1.0 - shave);
        sum += tau[h + 1];
      }
    }
  }
  tau[0] = std::max(t_total - sum, 0.0);
  return tau;
}

/// Energies from slot lengths under fixed multipliers: the price-optimal
/// level (lambda_k tau_k/(ln2 mu_k) - tau_k/eta_k)+, capped by the
/// interference limit I_p tau_k/g_I,k and by the harvested-energy budget.
inline std::vector<double> e_from_tau(const std::vector<double>& tau, const DualState& dual,
                                      const SystemParams& sys, const ChannelRealization& chan) {
  const int k = chan.hops();
  if (static_cast<int>(tau.size()) != k + 1) throw std::invalid_argument("e_from_tau: tau must have K+1 slots");
  std::vector<double> e(k, 0.0);
  double window = tau[0];
  for (int h = 0; h < k; ++h) {
    const double slot = tau[h + 1];
    const double eta = chan.eta[h];
    if (eta > 0.0 && slot > 0.0) {
      const double lam = std::max(dual.lambda[h], kLambdaFloor);
      const double mu_h = std::max(dual.mu[h], kMuFloor);
      const double unclamped = std::max(slot * (lam / (kLn2 * mu_h) - 1.0 / eta), 0.0);
      const double gi = chan.g_interference[h];
      const double cap_int = gi > 0.0 ? sys.peak_interference * slot / gi : std::numeric_limits<double>::infinity();
      const double budget = sys.harvest_efficiency * sys.pt_power * chan.g_energy[h] * window;
      e[h] = std::min(unclamped, std::min(cap_int, budget));
    }
    window += slot;
  }
  return e;
}

struct InnerResult {
  Allocation allocation;
  bool converged = false;
  int iterations = 0;
};

/// Alternates tau_from_e and e_from_tau from a uniform warm start.  Both
/// maps fix only the energy-to-time ratio of each hop; the frame-time
/// renormalization and the budget caps pin the absolute scale, so every
/// iterate is primal-feasible.  Stops when the largest relative change
/// drops below fixed_point_tol.
inline InnerResult inner_allocation(const DualState& dual, const SystemParams& sys,
                                    const ChannelRealization& chan, int iteration_cap = 0) {
  const int k = chan.hops();
  const int cap = iteration_cap > 0 ? std::min(iteration_cap, sys.max_iter) : sys.max_iter;
  InnerResult out;
  std::vector<double> tau(k + 1, sys.frame_duration / (k + 1));
  std::vector<double> e = e_from_tau(tau, dual, sys, chan);
  double e_scale = 1e-300;
  for (int h = 0; h < k; ++h) {
    e_scale = std::max(e_scale, sys.harvest_efficiency * sys.pt_power * chan.g_energy[h] * sys.frame_duration);
  }
  for (int it = 0; it < cap; ++it) {
    std::vector<double> tau_next = tau_from_e(e, dual, sys, chan);
    std::vector<double> e_next = e_from_tau(tau_next, dual, sys, chan);
    double change = 0.0;
    for (int i = 0; i <= k; ++i) change = std::max(change, std::abs(tau_next[i] - tau[i]) / sys.frame_duration);
    for (int h = 0; h < k; ++h) change = std::max(change, std::abs(e_next[h] - e[h]) / e_scale);
    tau.swap(tau_next);
    e.swap(e_next);
    out.iterations = it + 1;
    if (change <= sys.fixed_point_tol) {
      out.converged = true;
      break;
    }
  }
  out.allocation.tau = std::move(tau);
  out.allocation.e = std::move(e);
  return out;
}

// One evaluation of the priced relaxation.  `value` and `subgradient` come
// from the exact relaxed maximizer, so `value` is convex in mu and upper
// bounds the weighted optimum pointwise; `witness` is the feasible pair
// from the projected alternation at the same prices, whose budget gap is
// reported separately.
struct DualEvaluation {
  double value = 0.0;
  std::vector<double> subgradient;
  double certificate = 0.0;
  Allocation tau_e;  // relaxed maximizer (harvest slot may be negative)
  Allocation witness;
  std::vector<double> witness_budget_gap;
  bool witness_converged = false;
};

inline DualEvaluation dual_value_mu(const std::vector<double>& mu, const std::vector<double>& lambda,
                                    const SystemParams& sys, const ChannelRealization& chan,
                                    bool recover_witness = true) {
  for (double m : mu) {
    if (!(m >= 0.0)) throw std::domain_error("dual_value_mu: prices must be nonnegative");
  }
  const std::vector<double> lam = jotpa_detail::normalize_weights(lambda);
  const std::vector<jotpa_detail::HopTerms> terms = jotpa_detail::hop_terms(lam, mu, sys, chan);
  const jotpa_detail::RelaxedPoint rp = jotpa_detail::relaxed_point(terms, lam, mu, sys, chan);
  DualEvaluation out;
  out.value = rp.value;
  out.subgradient = rp.subgradient;
  out.certificate = rp.certificate;
  out.tau_e.tau = rp.tau;
  out.tau_e.e = rp.e;
  if (recover_witness) {
    DualState dual{lam, mu};
    InnerResult inner = inner_allocation(dual, sys, chan);
    out.witness_converged = inner.converged;
    out.witness = std::move(inner.allocation);
    out.witness_budget_gap.resize(chan.hops());
    double window = out.witness.tau[0];
    for (int h = 0; h < chan.hops(); ++h) {
      const double budget = sys.harvest_efficiency * sys.pt_power * chan.g_energy[h] * window;
      out.witness_budget_gap[h] = out.witness.e[h] - budget;
      window += out.witness.tau[h + 1];
    }
  }
  return out;
}

namespace jotpa_detail {

struct Knobs {
  double value_tol = 0.0;        // ellipsoid certificate target, absolute
  long long mu_iter_cap = 0;     // 0 = ellipsoid default
  int witness_iter_cap = 300;    // alternation sweeps per recovery
  int balance_sweeps = 40;       // rate-equalization sweeps per line-search point
  double radius_scale = 1.0;     // widens the heuristic search radius
};

// Feasible allocation aimed at the bottleneck rate.  Energies spend up to
// the harvest/interference limit; transmit slots are balanced toward equal
// per-hop throughputs by a damped proportional reallocation, with a
// golden-section line search on the harvest slot.
struct BalancedWitness {
  Allocation allocation;
  std::vector<double> rates;
  double min_rate = -1.0;
};

inline BalancedWitness balance_witness(const SystemParams& sys, const ChannelRealization& chan,
                                       const std::vector<double>& seed_tau, int sweeps) {
  const int k = chan.hops();
  const double t_total = sys.frame_duration;
  const double floor_t = sys.tau_floor();
  BalancedWitness best;
  const double tau0_lo = floor_t;
  const double tau0_hi = t_total - k * floor_t;
  if (!(tau0_hi > tau0_lo) || sweeps < 1) return best;

  std::vector<double> tau(k + 1, 0.0), e(k, 0.0), rates(k, 0.0), share(k, 0.0);

  auto project = [&](double active) {
    double sum = 0.0;
    for (int h = 0; h < k; ++h) {
      tau[h + 1] = std::max(tau[h + 1], floor_t);
      sum += tau[h + 1];
    }
    const double pool = sum - k * floor_t;
    const double room = active - k * floor_t;
    for (int h = 0; h < k; ++h) {
      tau[h + 1] = pool > 0.0 ? floor_t + (tau[h + 1] - floor_t) * room / pool : active / k;
    }
  };

  auto evaluate = [&](double tau0) {
    const double active = t_total - tau0;
    tau[0] = tau0;
    for (int h = 0; h < k; ++h) tau[h + 1] = seed_tau[h + 1];
    project(active);
    double min_rate = 0.0;
    for (int sweep = 0; sweep < sweeps; ++sweep) {
      double window = tau[0];
      min_rate = std::numeric_limits<double>::infinity();
      for (int h = 0; h < k; ++h) {
        const double slot = tau[h + 1];
        const double budget = sys.harvest_efficiency * sys.pt_power * chan.g_energy[h] * window;
        const double gi = chan.g_interference[h];
        const double cap = gi > 0.0 ? sys.peak_interference * slot / gi
                                    : std::numeric_limits<double>::infinity();
        e[h] = std::min(budget, cap);
        rates[h] = chan.eta[h] > 0.0 ? slot * std::log2(1.0 + e[h] * chan.eta[h] / slot) : 0.0;
        min_rate = std::min(min_rate, rates[h]);
        window += slot;
      }
      if (sweep + 1 == sweeps || min_rate <= 0.0) break;
      double wsum = 0.0;
      for (int h = 0; h < k; ++h) {
        share[h] = tau[h + 1] / rates[h];
        wsum += share[h];
      }
      if (!(wsum > 0.0) || !std::isfinite(wsum)) break;
      double change = 0.0;
      for (int h = 0; h < k; ++h) {
        const double target = active * share[h] / wsum;
        const double next = 0.5 * (tau[h + 1] + target);
        change = std::max(change, std::abs(next - tau[h + 1]));
        tau[h + 1] = next;
      }
      project(active);
      if (change <= 1e-12 * t_total) sweep = std::max(sweep, sweeps - 2);
    }
    if (min_rate > best.min_rate) {
      best.min_rate = min_rate;
      best.allocation.tau = tau;
      best.allocation.e = e;
      best.rates = rates;
    }
    return min_rate;
  };

  evaluate(tau0_lo);
  evaluate(tau0_hi);
  if (static_cast<int>(seed_tau.size()) == k + 1) {
    // At the seed's own harvest slot the first sweep keeps its transmit
    // split and raises every energy to the limit, so the result never
    // falls below the seed witness.
    evaluate(std::clamp(seed_tau[0], tau0_lo, tau0_hi));
  }
  constexpr double kGolden = 0.6180339887498949;
  double a = tau0_lo, b = tau0_hi;
  double c = b - kGolden * (b - a);
  double d = a + kGolden * (b - a);
  double fc = evaluate(c);
  double fd = evaluate(d);
  for (int it = 0; it < 22; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGolden * (b - a);
      fc = evaluate(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGolden * (b - a);
      fd = evaluate(d);
    }
  }
  return best;
}

// Equal-rate construction.  At a fixed harvest slot the common rate is
// bisected; for each candidate the chain is grown forward, giving every hop
// the smallest transmit slot that reaches the rate under the greedy energy
// rule e = min(window budget, cap).  Minimal slots put each hop exactly at
// the common rate, and the greedy rule spends the full budget wherever the
// cap is loose, so the witness keeps the equal-throughput shape without
// discarding harvest.  Spare frame time returns to the harvest slot, which
// only loosens the energy constraints.
inline BalancedWitness equal_rate_witness(const SystemParams& sys, const ChannelRealization& chan,
                                          double tau0_seed) {
  const int k = chan.hops();
  const double t_total = sys.frame_duration;
  const double floor_t = sys.tau_floor();
  BalancedWitness best;
  const double tau0_lo = floor_t;
  const double tau0_hi = t_total - k * floor_t;
  const double r_cap = rate_upper_bound(sys, chan);
  if (!(tau0_hi > tau0_lo) || !(r_cap > 0.0)) return best;

  std::vector<double> tau(k + 1, 0.0), e(k, 0.0), rates(k, 0.0);

  auto greedy_energy = [&](int h, double slot, double window) {
    const double budget = sys.harvest_efficiency * sys.pt_power * chan.g_energy[h] * window;
    const double gi = chan.g_interference[h];
    const double cap = gi > 0.0 ? sys.peak_interference * slot / gi
                                : std::numeric_limits<double>::infinity();
    return std::min(budget, cap);
  };
  auto hop_rate = [&](int h, double slot, double window) {
    if (!(chan.eta[h] > 0.0)) return 0.0;
    const double eh = greedy_energy(h, slot, window);
    return slot * std::log2(1.0 + eh * chan.eta[h] / slot);
  };

  auto build = [&](double tau0, double target) -> bool {
    double window = tau0;
    double spare = t_total - tau0 - k * floor_t;
    for (int h = 0; h < k; ++h) {
      double slot = floor_t;
      if (hop_rate(h, slot, window) < target) {
        double hi = floor_t + spare;
        if (hop_rate(h, hi, window) < target) return false;
        double lo = slot;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          (hop_rate(h, mid, window) >= target ? hi : lo) = mid;
        }
        slot = hi;
      }
      spare -= slot - floor_t;
      tau[h + 1] = slot;
      e[h] = greedy_energy(h, slot, window);
      rates[h] = hop_rate(h, slot, window);
      window += slot;
    }
    return true;
  };

  auto evaluate = [&](double tau0) {
    double lo_r = 0.0, hi_r = r_cap;
    for (int it = 0; it < 50; ++it) {
      const double mid = 0.5 * (lo_r + hi_r);
      (build(tau0, mid) ? lo_r : hi_r) = mid;
    }
    if (!build(tau0, lo_r)) return -1.0;
    double min_rate = std::numeric_limits<double>::infinity();
    for (int h = 0; h < k; ++h) min_rate = std::min(min_rate, rates[h]);
    if (min_rate > best.min_rate) {
      double used = 0.0;
      for (int h = 0; h < k; ++h) used += tau[h + 1];
      tau[0] = t_total - used;
      best.min_rate = min_rate;
      best.allocation.tau = tau;
      best.allocation.e = e;
      best.rates = rates;
    }
    return min_rate;
  };

  evaluate(tau0_lo);
  evaluate(tau0_hi);
  if (tau0_seed > 0.0) evaluate(std::clamp(tau0_seed, tau0_lo, tau0_hi));
  constexpr double kGolden = 0.6180339887498949;
  double a = tau0_lo, b = tau0_hi;
  double c = b - kGolden * (b - a);
  double d = a + kGolden * (b - a);
  double fc = evaluate(c);
  double fd = evaluate(d);
  for (int it = 0; it < 28; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGolden * (b - a);
      fc = evaluate(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGolden * (b - a);
      fd = evaluate(d);
    }
  }
  return best;
}

struct WeightedSolution {
  Allocation allocation;             // best witness by weighted value
  std::vector<double> per_hop_rate;  // throughputs of that witness
  double weighted_value = 0.0;       // sum lambda_k R_k at the witness
  Allocation bottleneck_allocation;  // best witness by min-hop rate
  std::vector<double> bottleneck_rates;
  double min_hop = -1.0;
  double upper_bound = 0.0;          // certified bound on the weighted optimum
  std::vector<double> mu;            // best prices found
  long long evaluations = 0;
  bool converged = true;
};

// Minimizes the priced relaxation over mu and recovers a feasible witness.
// Every query yields a certified upper bound on the weighted optimum (and
// hence on the max-min rate, for any simplex weights), so a poorly warmed
// search degrades tightness but never correctness.
inline WeightedSolution solve_weighted(const std::vector<double>& lambda_in, const SystemParams& sys,
                                       const ChannelRealization& chan, const Knobs& knobs,
                                       const std::vector<double>* mu_hint = nullptr) {
  const int k = chan.hops();
  const std::vector<double> lam = normalize_weights(lambda_in);

  // Heuristic price scale: the level at which the price-optimal SNR meets a
  // mid-frame harvest budget.
  std::vector<double> budgets(k);
  for (int h = 0; h < k; ++h) {
    budgets[h] = sys.harvest_efficiency * sys.pt_power * chan.g_energy[h] * sys.frame_duration *
                 (h + 1.0) / (k + 1.0);
  }
  std::vector<double> sorted_budgets = budgets;
  std::sort(sorted_budgets.begin(), sorted_budgets.end());
  const double median_budget = sorted_budgets[k / 2];
  std::vector<double> center(k);
  double center_norm = 0.0;
  for (int h = 0; h < k; ++h) {
    const double eta = std::max(chan.eta[h], 1e-30);
    center[h] = lam[h] * eta / (kLn2 * (1.0 + median_budget * eta));
    center_norm += center[h] * center[h];
  }
  center_norm = std::sqrt(center_norm);
  double radius = 1e3 * std::max(center_norm, 1e-30) * knobs.radius_scale;
  if (mu_hint && !mu_hint->empty()) {
    double hint_norm = 0.0;
    for (double m : *mu_hint) hint_norm += m * m;
    hint_norm = std::sqrt(hint_norm);
    if (hint_norm > 0.0) {
      center = *mu_hint;
      radius = std::max(20.0 * hint_norm, 0.05 * radius) * knobs.radius_scale;
    }
  }

  WeightedSolution out;
  out.upper_bound = std::numeric_limits<double>::infinity();
  std::vector<double> best_mu = center;
  double best_value = std::numeric_limits<double>::infinity();
  std::vector<double> clipped(k);

  auto oracle = [&](const std::vector<double>& mu) -> EllipsoidCut {
    for (int h = 0; h < k; ++h) {
      if (mu[h] < 0.0) {
        EllipsoidCut cut;
        cut.feasibility_cut = true;
        cut.subgradient.assign(k, 0.0);
        cut.subgradient[h] = -1.0;
        return cut;
      }
    }
    for (int h = 0; h < k; ++h) clipped[h] = std::max(mu[h], kMuFloor);
    const std::vector<HopTerms> terms = hop_terms(lam, clipped, sys, chan);
    const RelaxedPoint rp = relaxed_point(terms, lam, clipped, sys, chan);
    ++out.evaluations;
    out.upper_bound = std::min(out.upper_bound, rp.certificate);
    if (rp.value < best_value) {
      best_value = rp.value;
      best_mu = clipped;
    }
    EllipsoidCut cut;
    cut.value = rp.value;
    // Descend on the relaxation: its subgradient is the negated
    // energy-minus-budget vector.
    cut.subgradient.resize(k);
    for (int h = 0; h < k; ++h) cut.subgradient[h] = -rp.subgradient[h];
    return cut;
  };

  const double tol = knobs.value_tol > 0.0 ? knobs.value_tol : 1e-7;
  EllipsoidResult er = ellipsoid_optimize(oracle, center, radius, tol, knobs.mu_iter_cap);
  out.converged = er.certified && er.failure.empty();
  out.mu = best_mu;

  // Witness recovery at the best prices and at slight downscalings, which
  // land on the budget-binding side of the critical price surface.
  const double scales[] = {1.0, 0.997, 1.003, 0.96};
  double best_weighted = -1.0;
  for (double s : scales) {
    std::vector<double> mu_try(k);
    for (int h = 0; h < k; ++h) mu_try[h] = std::max(best_mu[h] * s, kMuFloor);
    DualState dual{lam, mu_try};
    InnerResult inner = inner_allocation(dual, sys, chan, knobs.witness_iter_cap);
    double weighted = 0.0;
    double min_rate = std::numeric_limits<double>::infinity();
    bool ok = true;
    std::vector<double> rates(k);
    for (int h = 0; h < k; ++h) {
      rates[h] = hop_throughput(inner.allocation.tau[h + 1], inner.allocation.e[h], chan.eta[h]);
      if (!std::isfinite(rates[h])) ok = false;
      weighted += lam[h] * rates[h];
      min_rate = std::min(min_rate, rates[h]);
    }
    if (!ok) continue;
    if (min_rate > out.min_hop) {
      out.min_hop = min_rate;
      out.bottleneck_allocation = inner.allocation;
      out.bottleneck_rates = rates;
    }
    if (weighted > best_weighted) {
      best_weighted = weighted;
      out.allocation = std::move(inner.allocation);
      out.per_hop_rate = std::move(rates);
      out.weighted_value = weighted;
    }
  }

  // The alternation equalizes prices, so in cap-limited regimes its fixed
  // points sit at the slot clamps; the balanced candidate covers the
  // bottleneck use of the witness there.
  const std::vector<double> seed = out.bottleneck_allocation.tau.empty()
                                       ? std::vector<double>(k + 1, sys.frame_duration / (k + 1))
                                       : out.bottleneck_allocation.tau;
  const BalancedWitness bal = balance_witness(sys, chan, seed, knobs.balance_sweeps);
  if (bal.min_rate >= 0.0) {
    double weighted = 0.0;
    for (int h = 0; h < k; ++h) weighted += lam[h] * bal.rates[h];
    if (weighted > best_weighted) {
      best_weighted = weighted;
      out.allocation = bal.allocation;
      out.per_hop_rate = bal.rates;
      out.weighted_value = weighted;
    }
    // Ties go to the balanced witness so returned allocations keep the
    // equal-throughput structure.
    if (bal.min_rate >= out.min_hop * (1.0 - 1e-12)) {
      out.min_hop = bal.min_rate;
      out.bottleneck_allocation = bal.allocation;
      out.bottleneck_rates = bal.rates;
    }
  }
  return out;
}

}  // namespace jotpa_detail

// One weight-space evaluation against a rate target.  `value` is the
// weighted shortfall sum_k lambda_k (R - R_k) at the recovered witness,
// using the raw (unnormalized) weights; `certified_gap` replaces the
// witness rates by the certified bound on the weighted optimum, so a
// positive certified_gap proves the target unachievable while a positive
// `value` alone does not.
struct LambdaEvaluation {
  double value = 0.0;
  std::vector<double> subgradient;  // R_k - R per hop
  double certified_gap = 0.0;
  Allocation witness;
  bool converged = true;
};

inline LambdaEvaluation dual_value_lambda(const std::vector<double>& lambda, double rate,
                                          const SystemParams& sys, const ChannelRealization& chan) {
  if (static_cast<int>(lambda.size()) != chan.hops()) {
    throw std::invalid_argument("dual_value_lambda: weight vector size mismatch");
  }
  for (double l : lambda) {
    if (!(l >= 0.0)) throw std::domain_error("dual_value_lambda: weights must be nonnegative");
  }
  jotpa_detail::Knobs knobs;
  knobs.value_tol = 1e-5 * std::max(1.0, rate_upper_bound(sys, chan));
  knobs.witness_iter_cap = 3000;
  knobs.balance_sweeps = 120;
  const jotpa_detail::WeightedSolution sw = jotpa_detail::solve_weighted(lambda, sys, chan, knobs);
  const bool balanced = !sw.bottleneck_rates.empty();
  const std::vector<double>& rates = balanced ? sw.bottleneck_rates : sw.per_hop_rate;
  LambdaEvaluation out;
  out.converged = sw.converged;
  out.witness = balanced ? sw.bottleneck_allocation : sw.allocation;
  out.subgradient.resize(chan.hops());
  double raw_sum = 0.0;
  for (int h = 0; h < chan.hops(); ++h) {
    out.subgradient[h] = rates[h] - rate;
    out.value -= lambda[h] * out.subgradient[h];
    raw_sum += lambda[h];
  }
  out.certified_gap = raw_sum > 0.0 ? raw_sum * (rate - sw.upper_bound) : 0.0;
  return out;
}

struct FeasibilityOutcome {
  bool feasible = false;
  Allocation witness;                // populated when feasible
  double dual_value = 0.0;           // best certified G at termination
  std::vector<double> lambda_star;   // weights at termination
  bool converged = true;             // false: conservative infeasible
};

namespace jotpa_detail {

// Shared state of the weight search.  The ellipsoid lives in the reduced
// coordinates x = (lambda_1..lambda_{K-1}), lambda_K = 1 - sum x; in these
// coordinates the objective cuts are independent of the rate target, so one
// search serves every bisection step.
struct LambdaSearch {
  int hops = 0;
  EllipsoidState ell{std::vector<double>{0.5}, 1.0};
  bool has_ellipsoid = false;
  std::vector<double> mu_hint;
  double upper_bound = std::numeric_limits<double>::infinity();  // min over queries, bounds the max-min rate
  double best_min_hop = -1.0;
  Allocation best_witness;
  std::vector<double> best_lambda;
  long long lambda_iterations = 0;
  long long evaluations = 0;
  int escalations = 0;

  explicit LambdaSearch(int k) : hops(k) {
    if (k >= 2) {
      ell = EllipsoidState(std::vector<double>(k - 1, 1.0 / k), 1.3);
      has_ellipsoid = true;
    }
    best_lambda.assign(k, 1.0 / k);
  }

  std::vector<double> lambda_at(const std::vector<double>& x) const {
    std::vector<double> lam(hops);
    double sum = 0.0;
    for (int j = 0; j + 1 < hops; ++j) {
      lam[j] = x[j];
      sum += x[j];
    }
    lam[hops - 1] = 1.0 - sum;
    return normalize_weights(std::move(lam));
  }

  void absorb(const std::vector<double>& lam, const WeightedSolution& sw) {
    ++lambda_iterations;
    evaluations += sw.evaluations;
    upper_bound = std::min(upper_bound, sw.upper_bound);
    mu_hint = sw.mu;
    if (sw.min_hop > best_min_hop) {
      best_min_hop = sw.min_hop;
      best_witness = sw.bottleneck_allocation;
      best_lambda = lam;
    }
  }
};

enum class RateDecision { feasible, infeasible, exhausted };

// Advances the weight search until the target rate is proven achievable (a
// witness reaches R - delta_R) or unachievable (some weights certify an
// optimum below R).  Escalates solver precision before giving up.
inline RateDecision resolve_rate(LambdaSearch& st, double rate, double delta_r, const SystemParams& sys,
                                 const ChannelRealization& chan, double base_tol) {
  const int k = st.hops;
  long long budget = 60 + 50LL * k;
  Knobs knobs;
  knobs.value_tol = base_tol;
  for (int round = 0; round < 3; ++round) {
    for (long long step = 0; step < budget; ++step) {
      if (st.best_min_hop >= rate - delta_r) return RateDecision::feasible;
      if (st.upper_bound < rate) return RateDecision::infeasible;
      if (!st.has_ellipsoid) break;
      const std::vector<double>& x = st.ell.center();
      EllipsoidCut cut;
      cut.subgradient.assign(k - 1, 0.0);
      double sum = 0.0;
      int negative = -1;
      for (int j = 0; j + 1 < k; ++j) {
        sum += x[j];
        if (x[j] < 0.0 && negative < 0) negative = j;
      }
      if (negative >= 0) {
        cut.feasibility_cut = true;
        cut.subgradient[negative] = -1.0;
      } else if (sum > 1.0) {
        cut.feasibility_cut = true;
        cut.subgradient.assign(k - 1, 1.0);
      } else {
        const std::vector<double> lam = st.lambda_at(x);
        const WeightedSolution sw =
            solve_weighted(lam, sys, chan, knobs, st.mu_hint.empty() ? nullptr : &st.mu_hint);
        st.absorb(lam, sw);
        if (st.best_min_hop >= rate - delta_r) return RateDecision::feasible;
        if (st.upper_bound < rate) return RateDecision::infeasible;
        // Reduced form of the per-hop rate-minus-target gradient: the
        // target cancels, so cuts are shared across rate queries.
        double gnorm = 0.0;
        for (int j = 0; j + 1 < k; ++j) {
          cut.subgradient[j] = sw.per_hop_rate[j] - sw.per_hop_rate[k - 1];
          gnorm += std::abs(cut.subgradient[j]);
        }
        if (gnorm == 0.0) break;  // equalized rates: the weights cannot improve
      }
      st.ell.apply_cut(cut.subgradient);
      if (st.ell.degenerate()) break;
    }
    // Precision escalation at the most promising weights.
    ++st.escalations;
    Knobs tight;
    tight.value_tol = base_tol * std::pow(0.04, round + 1);
    tight.witness_iter_cap = round == 2 ? sys.max_iter : 3000;
    tight.balance_sweeps = 60 * (round + 2);
    tight.radius_scale = 1.0 + round;
    const WeightedSolution sw = solve_weighted(st.best_lambda, sys, chan, tight,
                                               st.mu_hint.empty() ? nullptr : &st.mu_hint);
    st.absorb(st.best_lambda, sw);
    if (st.best_min_hop >= rate - delta_r) return RateDecision::feasible;
    if (st.upper_bound < rate) return RateDecision::infeasible;
    budget = 30 + 20LL * k;
  }
  return RateDecision::exhausted;
}

}  // namespace jotpa_detail

/// Decides whether every hop can sustain the target rate simultaneously,
/// searching hop weights on the simplex.  Feasible verdicts carry a
/// constructive witness; infeasible verdicts rest on a certified weighted
/// bound below the target.
inline FeasibilityOutcome feasibility_check(double rate, const SystemParams& sys,
                                            const ChannelRealization& chan) {
  sys.validate();
  chan.validate();
  if (!(rate >= 0.0)) throw std::domain_error("feasibility_check: rate must be nonnegative");
  const double r_max = rate_upper_bound(sys, chan);
  const double delta = sys.bisection_tol > 0.0 ? sys.bisection_tol : 1e-4 * std::max(r_max, 1e-12);
  jotpa_detail::LambdaSearch st(chan.hops());
  FeasibilityOutcome out;
  if (rate == 0.0) {
    out.feasible = true;
    out.witness.tau.assign(chan.hops() + 1, 0.0);
    out.witness.tau[0] = sys.frame_duration;
    out.witness.e.assign(chan.hops(), 0.0);
    out.lambda_star.assign(chan.hops(), 1.0 / chan.hops());
    return out;
  }
  const jotpa_detail::RateDecision d =
      jotpa_detail::resolve_rate(st, rate, 0.5 * delta, sys, chan, 0.25 * delta);
  out.lambda_star = st.best_lambda;
  out.dual_value = rate - st.upper_bound;
  if (d == jotpa_detail::RateDecision::feasible) {
    out.feasible = true;
    out.witness = st.best_witness;
  } else {
    out.converged = d != jotpa_detail::RateDecision::exhausted;
  }
  return out;
}

/// Full solve: bisection on the rate target over [0, rate_upper_bound],
/// sharing one weight search across all steps; both the certified upper
/// bound and the best witness tighten the bracket as they improve.
inline SolveResult jotpa_solve(const SystemParams& sys, const ChannelRealization& chan) {
  sys.validate();
  chan.validate();
  const int k = chan.hops();
  SolveResult result;
  result.allocation.tau.assign(k + 1, 0.0);
  result.allocation.tau[0] = sys.frame_duration;
  result.allocation.e.assign(k, 0.0);

  const double r_max = rate_upper_bound(sys, chan);
  if (!(r_max > 0.0)) {
    finalize_result(sys, chan, result);
    return result;
  }
  const double delta = sys.bisection_tol > 0.0 ? sys.bisection_tol : 1e-4 * r_max;
  const double delta_r = 0.5 * delta;
  const double base_tol = 0.25 * delta;

  jotpa_detail::LambdaSearch st(k);

  // Primal incumbents: the rate equalizer on a uniform frame split plus the
  // two structured profiles (common transmit power with fitted slots, equal
  // slots with greedy power).  Warm starts cost little and pin the bracket to
  // the best restricted policy before the dual search refines it.
  {
    const jotpa_detail::BalancedWitness bw = jotpa_detail::balance_witness(
        sys, chan, std::vector<double>(k + 1, sys.frame_duration / (k + 1)), 240);
    if (bw.min_rate > st.best_min_hop) {
      st.best_min_hop = bw.min_rate;
      st.best_witness = bw.allocation;
    }
    const SolveResult warm_power = otepa_solve(sys, chan);
    const SolveResult warm_slots = etopa_solve(sys, chan);
    for (const SolveResult* warm : {&warm_power, &warm_slots}) {
      if (warm->r_star > st.best_min_hop &&
          static_cast<int>(warm->allocation.e.size()) == k) {
        st.best_min_hop = warm->r_star;
        st.best_witness = warm->allocation;
      }
    }
    const jotpa_detail::BalancedWitness fw =
        jotpa_detail::equal_rate_witness(sys, chan, sys.frame_duration / (k + 1));
    if (fw.min_rate > st.best_min_hop) {
      st.best_min_hop = fw.min_rate;
      st.best_witness = fw.allocation;
    }
  }

  double lo = std::min(std::max(st.best_min_hop, 0.0), r_max);
  double hi = r_max;
  while (hi - lo > delta && result.diagnostics.bisection_iterations < 80) {
    const double mid = 0.5 * (lo + hi);
    const jotpa_detail::RateDecision d = jotpa_detail::resolve_rate(st, mid, delta_r, sys, chan, base_tol);
    ++result.diagnostics.bisection_iterations;
    if (d == jotpa_detail::RateDecision::feasible) {
      result.diagnostics.feasible_rates.push_back(mid);
      lo = std::max(mid, std::min(st.best_min_hop, hi));
    } else {
      result.diagnostics.infeasible_rates.push_back(mid);
      hi = mid;
      if (d == jotpa_detail::RateDecision::exhausted) result.diagnostics.converged = false;
    }
    hi = std::min(hi, std::max(st.upper_bound, lo));
  }

  // Final high-precision witness recovery at the best weights.
  jotpa_detail::Knobs polish;
  polish.value_tol = 0.02 * base_tol;
  polish.witness_iter_cap = sys.max_iter;
  polish.balance_sweeps = 240;
  polish.radius_scale = 2.0;
  const jotpa_detail::WeightedSolution sw = jotpa_detail::solve_weighted(
      st.best_lambda, sys, chan, polish, st.mu_hint.empty() ? nullptr : &st.mu_hint);
  st.absorb(st.best_lambda, sw);

  if (st.best_min_hop > 0.0) result.allocation = st.best_witness;

  // Swap in the equal-rate reconstruction when it gives up nothing: same
  // bottleneck rate, greedy energy profile instead of an uneven incumbent.
  if (st.best_min_hop > 0.0 && !st.best_witness.tau.empty()) {
    const jotpa_detail::BalancedWitness fw =
        jotpa_detail::equal_rate_witness(sys, chan, st.best_witness.tau[0]);
    if (fw.min_rate >= st.best_min_hop * (1.0 - 1e-12)) {
      result.allocation = fw.allocation;
    }
  }

  // Canonical witness: hops above the bottleneck release the energy they do
  // not need, so every hop carries the bottleneck rate and no constraint
  // tightens.
  if (static_cast<int>(result.allocation.e.size()) == k &&
      static_cast<int>(result.allocation.tau.size()) == k + 1) {
    double r_min = std::numeric_limits<double>::infinity();
    for (int h = 0; h < k; ++h) {
      r_min = std::min(r_min, hop_throughput(result.allocation.tau[h + 1],
                                             result.allocation.e[h], chan.eta[h]));
    }
    if (r_min > 0.0 && std::isfinite(r_min)) {
      for (int h = 0; h < k; ++h) {
        const double tau = result.allocation.tau[h + 1];
        if (tau <= 0.0 || chan.eta[h] <= 0.0) continue;
        const double needed = tau * (std::exp2(r_min / tau) - 1.0) / chan.eta[h];
        if (needed < result.allocation.e[h]) result.allocation.e[h] = needed;
      }
    }
  }

  result.diagnostics.lambda_iterations = st.lambda_iterations;
  result.diagnostics.dual_evaluations = st.evaluations;
  result.diagnostics.upper_bound = std::min(st.upper_bound, r_max);
  finalize_result(sys, chan, result);
  result.diagnostics.dual_gap =
      (result.diagnostics.upper_bound - result.r_star) / std::max(result.r_star, 1e-12);
  return result;
}

}  // namespace ehcrn
