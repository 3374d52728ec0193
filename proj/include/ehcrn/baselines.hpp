#pragma once

// Comparison algorithms.  OTEPA keeps the optimal time allocation but
// forces every hop to the same transmit power, found by a scalar search;
// ETOPA splits the frame evenly and lets each hop push power to the tighter
// of its interference and energy caps.  Both optimize over subsets of the
// joint feasible set, so the joint solver dominates them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ehcrn/model.hpp"
#include "ehcrn/numerics.hpp"

namespace ehcrn {

enum class OtepaPowerMode {
  search,  // golden-section over the common power level
  fixed,   // exogenous level supplied by the caller
};

namespace baseline_detail {

// Best bottleneck rate for a fixed common power: each hop needs slot time
// R / log2(1+P eta), the harvest slot must cover the earliest energy
// deficit, and the frame must fit everything.  Monotone in R, so a rate
// bisection is exact.
struct EqualPowerPlan {
  double rate = 0.0;
  std::vector<double> tau;
  bool feasible = false;
};

inline EqualPowerPlan equal_power_plan(double power, const SystemParams& sys,
                                       const ChannelRealization& chan, double rate_tol) {
  const int k = chan.hops();
  const double t_total = sys.frame_duration;
  EqualPowerPlan plan;
  plan.tau.assign(k + 1, 0.0);
  plan.tau[0] = t_total;
  if (!(power > 0.0)) return plan;

  std::vector<double> unit_rate(k);
  double rate_cap = std::numeric_limits<double>::infinity();
  for (int h = 0; h < k; ++h) {
    unit_rate[h] = std::log2(1.0 + power * chan.eta[h]);
    rate_cap = std::min(rate_cap, t_total * unit_rate[h]);
  }
  if (!(rate_cap > 0.0)) return plan;

  std::vector<double> slots(k);
  const auto achievable = [&](double rate) {
    double transmit_sum = 0.0;
    double harvest_needed = 0.0;
    double earlier = 0.0;
    for (int h = 0; h < k; ++h) {
      slots[h] = rate / unit_rate[h];
      const double supply_rate = sys.harvest_efficiency * sys.pt_power * chan.g_energy[h];
      if (supply_rate > 0.0) {
        harvest_needed = std::max(harvest_needed, power * slots[h] / supply_rate - earlier);
      } else if (power * slots[h] > 0.0) {
        return false;
      }
      transmit_sum += slots[h];
      earlier += slots[h];
    }
    return std::max(harvest_needed, 0.0) + transmit_sum <= t_total;
  };

  if (!achievable(0.0)) return plan;
  const BisectionResult br = bisection(achievable, 0.0, rate_cap, rate_tol);
  plan.feasible = true;
  plan.rate = br.value;
  achievable(br.value);
  double transmit_sum = 0.0;
  for (int h = 0; h < k; ++h) {
    plan.tau[h + 1] = slots[h];
    transmit_sum += slots[h];
  }
  plan.tau[0] = t_total - transmit_sum;  // all slack harvests
  return plan;
}

}  // namespace baseline_detail

/// Equal transmit power, optimal time.  In `search` mode the common power
/// is maximized over [0, min_k I_p/g_I,k] by golden-section on the (in
/// practice unimodal) rate curve; `fixed` mode evaluates the given level.
inline SolveResult otepa_solve(const SystemParams& sys, const ChannelRealization& chan,
                               OtepaPowerMode mode = OtepaPowerMode::search,
                               double fixed_power = 0.0) {
  sys.validate();
  chan.validate();
  const int k = chan.hops();
  SolveResult result;
  result.allocation.tau.assign(k + 1, 0.0);
  result.allocation.tau[0] = sys.frame_duration;
  result.allocation.e.assign(k, 0.0);

  double power_cap = std::numeric_limits<double>::infinity();
  for (int h = 0; h < k; ++h) {
    if (chan.g_interference[h] > 0.0) {
      power_cap = std::min(power_cap, sys.peak_interference / chan.g_interference[h]);
    }
  }
  if (!std::isfinite(power_cap)) {
    // No interference coupling at all: bound power by draining a full-frame
    // harvest through the shortest admissible slot.
    double budget = 0.0;
    for (int h = 0; h < k; ++h) {
      budget = std::max(budget, sys.harvest_efficiency * sys.pt_power * chan.g_energy[h]);
    }
    power_cap = budget * sys.frame_duration / sys.tau_floor();
  }

  const double rate_tol = 1e-7 * std::max(rate_upper_bound(sys, chan), 1e-12);
  const auto rate_at = [&](double power) {
    return baseline_detail::equal_power_plan(power, sys, chan, rate_tol).rate;
  };

  double best_power = 0.0;
  if (mode == OtepaPowerMode::fixed) {
    best_power = std::clamp(fixed_power, 0.0, power_cap);
  } else if (power_cap > 0.0) {
    constexpr double kInvPhi = 0.6180339887498949;
    double a = 0.0, b = power_cap;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = rate_at(c), fd = rate_at(d);
    for (int it = 0; it < 60 && b - a > 1e-10 * power_cap; ++it) {
      if (fc >= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - kInvPhi * (b - a);
        fc = rate_at(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + kInvPhi * (b - a);
        fd = rate_at(d);
      }
    }
    best_power = fc >= fd ? c : d;
    if (rate_at(power_cap) >= std::max(fc, fd)) best_power = power_cap;  // saturated caps
  }

  const baseline_detail::EqualPowerPlan plan =
      baseline_detail::equal_power_plan(best_power, sys, chan, rate_tol);
  if (plan.feasible && plan.rate > 0.0) {
    result.allocation.tau = plan.tau;
    for (int h = 0; h < k; ++h) result.allocation.e[h] = best_power * plan.tau[h + 1];
  }
  finalize_result(sys, chan, result);
  return result;
}

/// Equal time, per-hop maximal power under both caps: tau_k = T/(K+1),
/// P_k = min(I_p/g_I,k, harvested/tau_k).  Throughput is increasing in
/// power, so maximal is optimal for this time split.
inline SolveResult etopa_solve(const SystemParams& sys, const ChannelRealization& chan) {
  sys.validate();
  chan.validate();
  const int k = chan.hops();
  SolveResult result;
  result.allocation.tau.assign(k + 1, sys.frame_duration / (k + 1));
  result.allocation.e.assign(k, 0.0);
  for (int h = 0; h < k; ++h) {
    const double slot = result.allocation.tau[h + 1];
    const double harvested = harvested_energy(sys, chan, result.allocation.tau, h + 1);
    const double cap_int = chan.g_interference[h] > 0.0
                               ? sys.peak_interference * slot / chan.g_interference[h]
                               : std::numeric_limits<double>::infinity();
    result.allocation.e[h] = std::min(harvested, cap_int);
  }
  finalize_result(sys, chan, result);
  return result;
}

}  // namespace ehcrn
