#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>

#include "ehcrn/model.hpp"

using namespace ehcrn;
using Catch::Approx;

namespace {

SystemParams small_system() {
  SystemParams sys;
  sys.pt_power = 10.0;
  sys.harvest_efficiency = 0.8;
  sys.peak_interference = 1.0;
  return sys;
}

ChannelRealization two_hop_channel(const SystemParams& sys) {
  return ChannelRealization::from_gains(sys, {1.0, 0.5, 2.0}, {1.0, 1.0}, {1.0, 1.0});
}

}  // namespace

TEST_CASE("decibel conversions") {
  REQUIRE(db_to_linear(0.0) == Approx(1.0));
  REQUIRE(db_to_linear(10.0) == Approx(10.0));
  REQUIRE(db_to_linear(40.0) == Approx(1e4));
  REQUIRE(db_to_linear(-10.0) == Approx(0.1));
  REQUIRE(linear_to_db(100.0) == Approx(20.0));
  REQUIRE(linear_to_db(db_to_linear(7.3)) == Approx(7.3).epsilon(1e-12));
  REQUIRE_THROWS_AS(linear_to_db(0.0), std::domain_error);
  REQUIRE_THROWS_AS(linear_to_db(-1.0), std::domain_error);
}

TEST_CASE("planar distance") {
  REQUIRE(distance({0.0, 0.0}, {3.0, 4.0}) == Approx(5.0));
  REQUIRE(distance({-1.0, 2.0}, {-1.0, 2.0}) == Approx(0.0));
}

TEST_CASE("system parameter validation") {
  SystemParams sys;
  REQUIRE_NOTHROW(sys.validate());
  REQUIRE(sys.tau_floor() == Approx(1e-6));

  SECTION("harvest efficiency bounds") {
    sys.harvest_efficiency = 0.0;
    REQUIRE_THROWS_AS(sys.validate(), std::invalid_argument);
    sys.harvest_efficiency = 1.2;
    REQUIRE_THROWS_AS(sys.validate(), std::invalid_argument);
    sys.harvest_efficiency = 1.0;
    REQUIRE_NOTHROW(sys.validate());
  }
  SECTION("interference cap may be zero but not negative") {
    sys.peak_interference = 0.0;
    REQUIRE_NOTHROW(sys.validate());
    sys.peak_interference = -1.0;
    REQUIRE_THROWS_AS(sys.validate(), std::invalid_argument);
  }
  SECTION("frame and floor") {
    sys.frame_duration = 0.0;
    REQUIRE_THROWS_AS(sys.validate(), std::invalid_argument);
    sys.frame_duration = 2.0;
    sys.tau_floor_scale = 0.2;
    REQUIRE_THROWS_AS(sys.validate(), std::invalid_argument);
    sys.tau_floor_scale = 1e-5;
    REQUIRE_NOTHROW(sys.validate());
    REQUIRE(sys.tau_floor() == Approx(2e-5));
  }
  SECTION("solver tolerances") {
    sys.fixed_point_tol = 0.0;
    REQUIRE_THROWS_AS(sys.validate(), std::invalid_argument);
    sys.fixed_point_tol = 1e-9;
    sys.max_iter = 0;
    REQUIRE_THROWS_AS(sys.validate(), std::invalid_argument);
  }
}

TEST_CASE("path loss gain") {
  REQUIRE(channel_gain(1.0, 5.0, 1.0, 2.0) == Approx(1.0 / 25.0));
  REQUIRE(channel_gain(2.0, 10.0, 1.0, 3.0) == Approx(2e-3));
  REQUIRE(channel_gain(0.0, 5.0, 1.0, 2.0) == 0.0);
  SECTION("near field clamps to the reference distance") {
    REQUIRE(channel_gain(2.0, 0.5, 1.0, 2.0) == Approx(2.0));
    REQUIRE(channel_gain(2.0, 0.0, 1.0, 2.0) == Approx(2.0));
  }
  REQUIRE_THROWS_AS(channel_gain(-1.0, 5.0, 1.0, 2.0), std::domain_error);
  REQUIRE_THROWS_AS(channel_gain(1.0, 5.0, 0.0, 2.0), std::domain_error);
}

TEST_CASE("topology validation") {
  Topology topo;
  topo.hop_count = 2;
  topo.secondary = {{0, 0}, {1, 0}};
  REQUIRE_THROWS_AS(topo.validate(), std::invalid_argument);
  topo.secondary.push_back({2, 0});
  REQUIRE_NOTHROW(topo.validate());
  topo.hop_count = 0;
  REQUIRE_THROWS_AS(topo.validate(), std::invalid_argument);
}

TEST_CASE("channel realization construction") {
  SystemParams sys;
  sys.noise_power = 4.0;
  const ChannelRealization chan = ChannelRealization::from_gains(sys, {1.0, 2.0}, {0.5}, {2.0});
  REQUIRE(chan.hops() == 1);
  REQUIRE(chan.eta[0] == Approx(0.5));

  REQUIRE_THROWS_AS(ChannelRealization::from_gains(sys, {1.0}, {0.5}, {2.0}), std::invalid_argument);
  REQUIRE_THROWS_AS(ChannelRealization::from_gains(sys, {1.0, 2.0}, {-0.5}, {2.0}), std::invalid_argument);
  REQUIRE_THROWS_AS(ChannelRealization::from_gains(sys, {}, {}, {}), std::invalid_argument);
}

TEST_CASE("harvested energy window") {
  const SystemParams sys = small_system();
  const ChannelRealization chan = two_hop_channel(sys);
  const std::vector<double> tau{0.2, 0.3, 0.5};

  REQUIRE(harvested_energy(sys, chan, tau, 1) == Approx(0.8 * 10.0 * 1.0 * 0.2));
  REQUIRE(harvested_energy(sys, chan, tau, 2) == Approx(2.0));  // 0.8 * 10 * 0.5 * (0.2 + 0.3)
  REQUIRE(harvested_energy(sys, chan, tau, 3) == Approx(0.8 * 10.0 * 2.0 * 1.0));

  REQUIRE_THROWS_AS(harvested_energy(sys, chan, tau, 0), std::out_of_range);
  REQUIRE_THROWS_AS(harvested_energy(sys, chan, tau, 4), std::out_of_range);
  REQUIRE_THROWS_AS(harvested_energy(sys, chan, {0.2, 0.8}, 1), std::invalid_argument);
}

TEST_CASE("hop throughput") {
  REQUIRE(hop_throughput(0.5, 1.5, 1.0) == Approx(1.0));  // 0.5 * log2(4)
  REQUIRE(hop_throughput(1.0, 3.0, 1.0) == Approx(2.0));
  REQUIRE(hop_throughput(0.0, 0.0, 5.0) == 0.0);
  REQUIRE(hop_throughput(0.7, 0.0, 5.0) == 0.0);
  REQUIRE_THROWS_AS(hop_throughput(0.0, 0.1, 1.0), std::domain_error);
  REQUIRE_THROWS_AS(hop_throughput(-0.1, 0.0, 1.0), std::domain_error);
  REQUIRE_THROWS_AS(hop_throughput(0.5, -1.0, 1.0), std::domain_error);

  SECTION("perspective scaling") {
    const double base = hop_throughput(0.3, 0.7, 2.5);
    REQUIRE(hop_throughput(0.6, 1.4, 2.5) == Approx(2.0 * base).epsilon(1e-14));
  }
}

TEST_CASE("end to end throughput is the bottleneck") {
  const SystemParams sys = small_system();
  const ChannelRealization chan = two_hop_channel(sys);
  Allocation alloc;
  alloc.tau = {0.2, 0.3, 0.5};
  alloc.e = {0.9, 1.5};
  const double r1 = hop_throughput(0.3, 0.9, chan.eta[0]);
  const double r2 = hop_throughput(0.5, 1.5, chan.eta[1]);
  REQUIRE(end_to_end_throughput(sys, chan, alloc) == Approx(std::min(r1, r2)));

  alloc.e = {0.9};
  REQUIRE_THROWS_AS(end_to_end_throughput(sys, chan, alloc), std::invalid_argument);
}

TEST_CASE("allocation power accessor") {
  Allocation alloc;
  alloc.tau = {0.5, 0.25, 0.25};
  alloc.e = {1.0, 0.5};
  REQUIRE(alloc.power(1) == Approx(4.0));
  REQUIRE(alloc.power(2) == Approx(2.0));
  alloc.tau = {1.0, 0.0, 0.0};
  alloc.e = {0.0, 0.0};
  REQUIRE(alloc.power(1) == 0.0);
}

TEST_CASE("constraint residuals") {
  SystemParams sys;
  const ChannelRealization chan = ChannelRealization::from_gains(sys, {1.0, 1.0}, {1.0}, {1.0});
  Allocation alloc;
  alloc.tau = {0.5, 0.5};
  alloc.e = {0.5};

  SECTION("feasible point") {
    const ConstraintResiduals res = constraint_residuals(sys, chan, alloc);
    REQUIRE(res.energy_causality[0] < 0.0);
    REQUIRE(res.interference[0] == Approx(0.0).margin(1e-15));
    REQUIRE(res.time_budget == Approx(0.0).margin(1e-15));
    REQUIRE(res.max_relative(sys) <= 1e-12);
    REQUIRE(res.feasible(sys, 1e-8));
  }
  SECTION("interference violation") {
    alloc.e = {0.6};
    const ConstraintResiduals res = constraint_residuals(sys, chan, alloc);
    REQUIRE(res.interference[0] == Approx(0.1));
    REQUIRE(res.max_relative(sys) >= 0.09);
    REQUIRE_FALSE(res.feasible(sys, 1e-8));
  }
  SECTION("time budget violation") {
    alloc.tau = {0.6, 0.6};
    const ConstraintResiduals res = constraint_residuals(sys, chan, alloc);
    REQUIRE(res.time_budget == Approx(0.2));
    REQUIRE(res.max_relative(sys) >= 0.2 - 1e-12);
  }
  SECTION("energy causality violation") {
    SystemParams weak = sys;
    weak.pt_power = 1e-3;
    const ConstraintResiduals res = constraint_residuals(weak, chan, alloc);
    REQUIRE(res.energy_causality[0] > 0.0);
    REQUIRE_FALSE(res.feasible(weak, 1e-8));
  }
}

TEST_CASE("rate upper bound") {
  SystemParams sys;
  sys.pt_power = 10.0;
  sys.harvest_efficiency = 0.5;
  sys.peak_interference = 1.0;

  SECTION("interference limited") {
    const ChannelRealization chan = ChannelRealization::from_gains(sys, {1.0, 1.0}, {2.0}, {1.0});
    REQUIRE(rate_upper_bound(sys, chan) == Approx(std::log2(1.5)));
  }
  SECTION("harvest limited when no interference coupling") {
    const ChannelRealization chan = ChannelRealization::from_gains(sys, {1.0, 1.0}, {0.0}, {1.0});
    REQUIRE(rate_upper_bound(sys, chan) == Approx(std::log2(6.0)));
  }
  SECTION("bottleneck across hops") {
    const ChannelRealization chan =
        ChannelRealization::from_gains(sys, {1.0, 1.0, 1.0}, {2.0, 4.0}, {1.0, 1.0});
    REQUIRE(rate_upper_bound(sys, chan) == Approx(std::log2(1.25)));
  }
  SECTION("dead data link kills the bound") {
    const ChannelRealization chan = ChannelRealization::from_gains(sys, {1.0, 1.0}, {2.0}, {0.0});
    REQUIRE(rate_upper_bound(sys, chan) == 0.0);
  }
}

TEST_CASE("finalize result fills the ledger") {
  const SystemParams sys = small_system();
  const ChannelRealization chan = two_hop_channel(sys);
  SolveResult result;
  result.allocation.tau = {0.2, 0.3, 0.5};
  result.allocation.e = {0.9, 1.5};
  finalize_result(sys, chan, result);
  REQUIRE(result.harvested.size() == 3);
  REQUIRE(result.harvested[1] == Approx(2.0));
  REQUIRE(result.r_star == Approx(end_to_end_throughput(sys, chan, result.allocation)));
}
