#pragma once

// Validation oracle.  For a fixed slot vector the best transmit energies
// are closed-form (spend up to the tighter of the harvest budget and the
// interference cap), which collapses the problem to maximizing a concave
// bottleneck objective over the time simplex.  Two independent searches are
// provided: dense lattice enumeration with local refinement, and projected
// supergradient ascent.  Both avoid the dual machinery of the main solver
// on purpose.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "ehcrn/model.hpp"

namespace ehcrn {

/// Per-hop energies maximizing throughput for fixed tau: throughput is
/// nondecreasing in energy, so each hop spends min(harvest budget,
/// interference cap).  Zero-length slots get zero energy.
inline std::vector<double> optimal_e_given_tau(const SystemParams& sys, const ChannelRealization& chan,
                                               const std::vector<double>& tau) {
  const int k = chan.hops();
  if (static_cast<int>(tau.size()) != k + 1) throw std::invalid_argument("optimal_e_given_tau: tau must have K+1 slots");
  std::vector<double> e(k);
  double window = tau[0];
  for (int h = 0; h < k; ++h) {
    const double slot = tau[h + 1];
    if (slot <= 0.0) {
      e[h] = 0.0;
    } else {
      const double budget = sys.harvest_efficiency * sys.pt_power * chan.g_energy[h] * window;
      const double cap = chan.g_interference[h] > 0.0
                             ? sys.peak_interference * slot / chan.g_interference[h]
                             : std::numeric_limits<double>::infinity();
      e[h] = std::min(budget, cap);
    }
    window += slot;
  }
  return e;
}

/// Bottleneck throughput after optimizing energies out: concave in tau (a
/// minimum of concave perspective compositions with affine budgets).
inline double reduced_objective(const SystemParams& sys, const ChannelRealization& chan,
                                const std::vector<double>& tau) {
  const int k = chan.hops();
  const std::vector<double> e = optimal_e_given_tau(sys, chan, tau);
  double r = std::numeric_limits<double>::infinity();
  for (int h = 0; h < k; ++h) r = std::min(r, hop_throughput(tau[h + 1], e[h], chan.eta[h]));
  return r;
}

enum class OracleMethod { grid, projected_subgradient };

namespace oracle_detail {

// Fast evaluation used inside the lattice loops; mirrors reduced_objective
// without reallocating.
inline double reduced_value(const SystemParams& sys, const ChannelRealization& chan,
                            const std::vector<double>& tau) {
  const int k = chan.hops();
  double window = tau[0];
  double r = std::numeric_limits<double>::infinity();
  for (int h = 0; h < k; ++h) {
    const double slot = tau[h + 1];
    double rh = 0.0;
    if (slot > 0.0) {
      const double budget = sys.harvest_efficiency * sys.pt_power * chan.g_energy[h] * window;
      const double cap = chan.g_interference[h] > 0.0
                             ? sys.peak_interference * slot / chan.g_interference[h]
                             : std::numeric_limits<double>::infinity();
      const double e = std::min(budget, cap);
      rh = slot * std::log2(1.0 + e * chan.eta[h] / slot);
    }
    r = std::min(r, rh);
    if (r == 0.0) return 0.0;
    window += slot;
  }
  return r;
}

// Enumerates transmit-slot vectors on a lattice of the given spacing inside
// a box, keeping the total within the frame; tau[0] absorbs the remainder.
inline void search_box(const SystemParams& sys, const ChannelRealization& chan,
                       const std::vector<double>& lo, const std::vector<double>& hi, double spacing,
                       std::vector<double>& tau, double& best, std::vector<double>& best_tau,
                       long long& evals) {
  const int k = chan.hops();
  const double t_total = sys.frame_duration;
  std::vector<int> steps(k), offset(k);
  for (int h = 0; h < k; ++h) {
    offset[h] = static_cast<int>(std::ceil(std::max(0.0, lo[h]) / spacing - 1e-9));
    steps[h] = static_cast<int>(std::floor(std::min(t_total, hi[h]) / spacing + 1e-9));
  }
  std::function<void(int, double)> recurse = [&](int h, double used) {
    if (h == k) {
      tau[0] = t_total - used;
      if (tau[0] < 0.0) tau[0] = 0.0;
      const double v = reduced_value(sys, chan, tau);
      ++evals;
      if (v > best) {
        best = v;
        best_tau = tau;
      }
      return;
    }
    for (int s = offset[h]; s <= steps[h]; ++s) {
      const double slot = s * spacing;
      if (used + slot > t_total * (1.0 + 1e-12)) break;
      tau[h + 1] = std::min(slot, t_total - used);
      recurse(h + 1, used + tau[h + 1]);
    }
  };
  recurse(0, 0.0);
}

inline double lattice_points(int resolution, int dims) {
  // C(resolution + dims, dims), as a rough enumeration cost estimate.
  double c = 1.0;
  for (int i = 1; i <= dims; ++i) c *= static_cast<double>(resolution + i) / i;
  return c;
}

}  // namespace oracle_detail

/// Reference solver.  `resolution` is the lattice divisions per dimension
/// for the grid (0 picks 200 for K <= 2, 60 for K = 3, then shrinks to keep
/// the enumeration bounded) or the iteration budget divided by 100 for the
/// supergradient method (0 picks 4000 iterations).
inline SolveResult oracle_solve(const SystemParams& sys, const ChannelRealization& chan,
                                OracleMethod method, int resolution = 0) {
  sys.validate();
  chan.validate();
  const int k = chan.hops();
  const double t_total = sys.frame_duration;
  SolveResult result;
  result.allocation.tau.assign(k + 1, 0.0);
  result.allocation.tau[0] = t_total;
  result.allocation.e.assign(k, 0.0);

  long long evals = 0;
  std::vector<double> best_tau = result.allocation.tau;
  double best = oracle_detail::reduced_value(sys, chan, best_tau);

  if (method == OracleMethod::grid) {
    int res = resolution;
    if (res <= 0) res = k <= 2 ? 200 : 60;
    while (res > 10 && oracle_detail::lattice_points(res, k) > 2.5e6) res /= 2;
    result.diagnostics.converged = res >= 10;  // coarser grids are advisory only

    std::vector<double> tau(k + 1, 0.0);
    std::vector<double> lo(k, 0.0), hi(k, t_total);
    double spacing = t_total / res;
    oracle_detail::search_box(sys, chan, lo, hi, spacing, tau, best, best_tau, evals);
    // One local refinement pass at 10x density around the incumbent.
    for (int h = 0; h < k; ++h) {
      lo[h] = best_tau[h + 1] - spacing;
      hi[h] = best_tau[h + 1] + spacing;
    }
    spacing /= 10.0;
    oracle_detail::search_box(sys, chan, lo, hi, spacing, tau, best, best_tau, evals);
  } else {
    const long long iters = resolution > 0 ? 100LL * resolution : 4000;
    std::vector<double> tau(k + 1, t_total / (k + 1));
    std::vector<double> grad(k + 1), work(k + 1);
    const double v0 = oracle_detail::reduced_value(sys, chan, tau);
    ++evals;
    if (v0 > best) {
      best = v0;
      best_tau = tau;
    }
    for (long long it = 1; it <= iters; ++it) {
      // Supergradient of the bottleneck hop, through the active energy cap.
      const std::vector<double> e = optimal_e_given_tau(sys, chan, tau);
      int b = 0;
      double rb = std::numeric_limits<double>::infinity();
      for (int h = 0; h < k; ++h) {
        const double rh = hop_throughput(tau[h + 1], e[h], chan.eta[h]);
        if (rh < rb) {
          rb = rh;
          b = h;
        }
      }
      std::fill(grad.begin(), grad.end(), 0.0);
      const double slot = tau[b + 1];
      if (slot <= 0.0) {
        grad[b + 1] = 1.0;  // grow a collapsed bottleneck slot
      } else {
        double window = 0.0;
        for (int i = 0; i <= b; ++i) window += tau[i];
        const double budget = sys.harvest_efficiency * sys.pt_power * chan.g_energy[b] * window;
        const double cap = chan.g_interference[b] > 0.0
                               ? sys.peak_interference * slot / chan.g_interference[b]
                               : std::numeric_limits<double>::infinity();
        const double z = std::min(budget, cap) * chan.eta[b] / slot;
        const double dr_de = chan.eta[b] / ((1.0 + z) * kLn2);
        if (budget <= cap) {
          const double de = sys.harvest_efficiency * sys.pt_power * chan.g_energy[b];
          for (int i = 0; i <= b; ++i) grad[i] = dr_de * de;
          grad[b + 1] = std::log2(1.0 + z) - z / ((1.0 + z) * kLn2);
        } else {
          grad[b + 1] = std::log2(1.0 + z);
        }
      }
      double gnorm = 0.0;
      for (double g : grad) gnorm += g * g;
      gnorm = std::sqrt(gnorm);
      if (gnorm == 0.0) break;
      const double step = 0.25 * t_total / (gnorm * std::sqrt(static_cast<double>(it)));
      for (int i = 0; i <= k; ++i) work[i] = tau[i] + step * grad[i];
      // Euclidean projection onto { tau >= 0, sum = T }.
      std::vector<double> sorted = work;
      std::sort(sorted.begin(), sorted.end(), std::greater<double>());
      double cum = 0.0, cum_rho = sorted[0];
      int rho = 1;
      for (int j = 0; j < k + 1; ++j) {
        cum += sorted[j];
        if (sorted[j] - (cum - t_total) / (j + 1) > 0.0) {
          rho = j + 1;
          cum_rho = cum;
        }
      }
      const double theta = (cum_rho - t_total) / rho;
      for (int i = 0; i <= k; ++i) tau[i] = std::max(0.0, work[i] - theta);
      const double v = oracle_detail::reduced_value(sys, chan, tau);
      ++evals;
      if (v > best) {
        best = v;
        best_tau = tau;
      }
    }
  }

  result.allocation.tau = best_tau;
  result.allocation.e = optimal_e_given_tau(sys, chan, best_tau);
  result.diagnostics.dual_evaluations = evals;
  finalize_result(sys, chan, result);
  return result;
}

}  // namespace ehcrn
