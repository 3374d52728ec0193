#pragma once

// Benchmark geometries and deterministic channel sampling.  Fading is
// Rayleigh (unit-mean exponential power) drawn from a counter-based
// generator keyed by (seed, realization, link kind, link index), so any
// realization can be regenerated in isolation and the stream does not
// depend on sampling order or thread count.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ehcrn/model.hpp"

namespace ehcrn {

enum class ScenarioId : int {
  both_ends_near_primary = 1,  // chain from (0,0) to (20,0)
  midpoint_under_primary = 2,  // chain from (-10,0) to (10,0)
  chain_leaving_primary = 3,   // chain from (-20,0) to (0,0)
};

inline ScenarioId scenario_from_int(int id) {
  if (id < 1 || id > 3) throw std::invalid_argument("scenario id must be 1, 2 or 3");
  return static_cast<ScenarioId>(id);
}

/// Primary pair fixed at (0, 10) and (0, -10); K+1 secondary nodes equally
/// spaced on the segment picked by the scenario.
inline Topology build_topology(ScenarioId scenario, int hop_count) {
  if (hop_count < 1) throw std::invalid_argument("build_topology: need at least one hop");
  Topology topo;
  topo.hop_count = hop_count;
  topo.primary_tx = {0.0, 10.0};
  topo.primary_rx = {0.0, -10.0};
  Vec2 src, dst;
  switch (scenario) {
    case ScenarioId::both_ends_near_primary: src = {0.0, 0.0}; dst = {20.0, 0.0}; break;
    case ScenarioId::midpoint_under_primary: src = {-10.0, 0.0}; dst = {10.0, 0.0}; break;
    case ScenarioId::chain_leaving_primary: src = {-20.0, 0.0}; dst = {0.0, 0.0}; break;
    default: throw std::invalid_argument("build_topology: unknown scenario");
  }
  topo.secondary.resize(hop_count + 1);
  for (int i = 0; i <= hop_count; ++i) {
    const double f = static_cast<double>(i) / hop_count;
    topo.secondary[i] = {src.x + f * (dst.x - src.x), src.y + f * (dst.y - src.y)};
  }
  topo.validate();
  return topo;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum class LinkKind : std::uint32_t { energy = 0, interference = 1, data = 2 };

// Value-type generator: copies are cheap and draws are pure functions of
// the key tuple.
struct SeededRng {
  std::uint64_t seed = 0;
  std::uint64_t realization = 0;

  SeededRng with_realization(std::uint64_t index) const { return {seed, index}; }

  std::uint64_t word(LinkKind kind, std::uint32_t index) const {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ realization);
    h = splitmix64(h ^ ((static_cast<std::uint64_t>(kind) << 32) | index));
    return h;
  }

  /// Uniform draw in [0, 1) with 53 significant bits.
  double uniform(LinkKind kind, std::uint32_t index) const {
    return static_cast<double>(word(kind, index) >> 11) * 0x1.0p-53;
  }

  /// Unit-mean exponential via inversion; log1p keeps small draws exact.
  double exponential(LinkKind kind, std::uint32_t index) const {
    return -std::log1p(-uniform(kind, index));
  }
};

/// One fading block over the given geometry.  Energy links run from the
/// primary transmitter to every secondary node, interference links from
/// each hop transmitter to the primary receiver, data links along the
/// chain.
inline ChannelRealization sample_channels(const Topology& topo, const SystemParams& sys,
                                          const SeededRng& rng) {
  topo.validate();
  sys.validate();
  const int k = topo.hop_count;
  std::vector<double> g_e(k + 1), g_i(k), g_d(k);
  for (int i = 0; i <= k; ++i) {
    const double d = distance(topo.primary_tx, topo.secondary[i]);
    g_e[i] = channel_gain(rng.exponential(LinkKind::energy, i), d, sys.reference_distance, sys.path_loss_exponent);
  }
  for (int h = 0; h < k; ++h) {
    const double di = distance(topo.secondary[h], topo.primary_rx);
    g_i[h] = channel_gain(rng.exponential(LinkKind::interference, h), di, sys.reference_distance, sys.path_loss_exponent);
    const double dd = distance(topo.secondary[h], topo.secondary[h + 1]);
    g_d[h] = channel_gain(rng.exponential(LinkKind::data, h), dd, sys.reference_distance, sys.path_loss_exponent);
  }
  return ChannelRealization::from_gains(sys, std::move(g_e), std::move(g_i), std::move(g_d));
}

/// Order-sensitive digest of the drawn gains, for pairing checks across
/// runs.
inline std::uint64_t realization_digest(const ChannelRealization& chan) {
  std::uint64_t h = 0x2545f4914f6cdd1dULL;
  auto mix = [&h](const std::vector<double>& v) {
    for (double g : v) {
      std::uint64_t bits;
      static_assert(sizeof(bits) == sizeof(g));
      __builtin_memcpy(&bits, &g, sizeof(bits));
      h = splitmix64(h ^ bits);
    }
  };
  mix(chan.g_energy);
  mix(chan.g_interference);
  mix(chan.g_data);
  return h;
}

}  // namespace ehcrn
