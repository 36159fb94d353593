#include <catch_amalgamated.hpp>

#include "irsplan/irsplan.hpp"
#include "support/oracles.hpp"

using namespace irsplan;
using Catch::Approx;

namespace {

Requirements reqs(double budget = 1e4, double gamma = 1.0) {
  Requirements r;
  r.P_s = 1.0;
  r.Gamma_c = gamma;
  r.sigma2 = 1.0;
  r.P0_max = budget;
  return r;
}

}  // namespace

TEST_CASE("channel-based weights") {
  SECTION("hand example") {
    ChannelSet ch = zero_channels(2, 2, 1, 1, 1);
    ch.g[0][0] << cd(1, 0), cd(0, 0);           // |g|^2 = 1
    ch.h[0][0] << cd(1, 0), cd(0, 1);           // |h|^2 = 2
    ch.g[1][0] << cd(0, 0.5), cd(0.5, 0);       // 0.5
    ch.h[1][0] << cd(0.5, 0), cd(0, 0);         // 0.25
    // eta = P_s |g|^2 + sigma2 Gamma |h|^2 with Gamma = 2
    const CbdWeights w = cbd_weights(ch, reqs(1e4, 2.0));
    CHECK(w.eta[0] == Approx(5.0).epsilon(1e-15));
    CHECK(w.eta[1] == Approx(1.0).epsilon(1e-15));
    CHECK(w.beta_cbd[0] == 1.0);
    CHECK(w.beta_cbd[1] == Approx(0.2).epsilon(1e-15));
  }
  SECTION("identical sites give all ones") {
    std::mt19937_64 rng(1);
    ChannelSet ch = oracle::random_channels(1, 3, 2, 2, 2, rng);
    ch = [&] {
      ChannelSet two = zero_channels(2, 3, 2, 2, 2);
      for (int k = 0; k < 2; ++k) {
        two.H0[k] = ch.H0[0];
        two.g[k] = ch.g[0];
        two.h[k] = ch.h[0];
      }
      two.h0 = ch.h0;
      return two;
    }();
    const CbdWeights w = cbd_weights(ch, reqs());
    CHECK(w.beta_cbd[0] == 1.0);
    CHECK(w.beta_cbd[1] == 1.0);
  }
  SECTION("random instances against a direct sum") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 5; ++trial) {
      const ChannelSet ch = oracle::random_channels(4, 2, 2, 3, 2, rng);
      const Requirements r = reqs(1e4, 3.0);
      const CbdWeights w = cbd_weights(ch, r);
      RVec eta(4);
      for (int k = 0; k < 4; ++k) {
        double s = 0;
        for (int p = 0; p < 3; ++p)
          for (int m = 0; m < 2; ++m) s += r.P_s * std::norm(ch.g[k][p][m]);
        for (int q = 0; q < 2; ++q)
          for (int m = 0; m < 2; ++m) s += r.sigma2 * r.Gamma_c * std::norm(ch.h[k][q][m]);
        eta[k] = s;
      }
      CHECK((w.eta - eta).norm() <= 1e-12 * eta.norm());
      CHECK(w.beta_cbd.maxCoeff() == 1.0);
      CHECK(w.beta_cbd.minCoeff() >= 0.0);
    }
  }
  SECTION("no site reaches anything") {
    CHECK_THROWS_AS(cbd_weights(zero_channels(3, 2, 2, 1, 1), reqs()), InfeasibleError);
  }
  SECTION("scaling every threshold together leaves the weights alone") {
    std::mt19937_64 rng(3);
    const ChannelSet ch = oracle::random_channels(3, 2, 2, 2, 2, rng);
    Requirements a = reqs(), b = reqs();
    b.P_s *= 7.0;
    b.sigma2 *= 7.0;
    CHECK((cbd_weights(ch, a).beta_cbd - cbd_weights(ch, b).beta_cbd).norm() < 1e-14);
  }
}

TEST_CASE("channel-based plan") {
  SECTION("equal weights: removal goes by index") {
    ChannelSet ch = zero_channels(2, 1, 1, 1, 0);
    for (int k = 0; k < 2; ++k) {
      ch.H0[k](0, 0) = 1.0;
      ch.g[k][0][0] = 1.0;
    }
    const auto rep = cbd_plan(ch, reqs(), {1.0, 0.0}, CaseTag::I, 1);
    CHECK(rep.order == std::vector<int>{0, 1});
    CHECK(rep.plan.beta == std::vector<int>{0, 1});
  }
  SECTION("single site equals rounding at full weight") {
    std::mt19937_64 rng(4);
    const ChannelSet ch = oracle::random_channels(1, 3, 2, 2, 1, rng);
    const CostWeights w{1.0, 0.1};
    const auto a = cbd_plan(ch, reqs(), w, CaseTag::I, 5);
    const auto b = greedy_round(RVec::Ones(1), ch, reqs(), w, CaseTag::I, 5);
    CHECK(a.plan.beta == b.plan.beta);
    CHECK(a.plan.P0 == b.plan.P0);
    CHECK(a.plan.v == b.plan.v);
  }
  SECTION("plans pass the independent check") {
    std::mt19937_64 rng(5);
    const ChannelSet ch = oracle::random_channels(3, 2, 2, 2, 2, rng);
    for (CaseTag c : {CaseTag::I, CaseTag::II}) {
      const auto rep = cbd_plan(ch, reqs(100.0), {1.0, 0.05}, c, 3);
      CHECK(verify_plan(rep.plan, ch, reqs(100.0)).ok);
    }
  }
}

TEST_CASE("random phases") {
  const CVec a = random_phases(3, 4, 42), b = random_phases(3, 4, 42), c = random_phases(3, 4, 43);
  REQUIRE(a.size() == 12);
  CHECK(a == b);
  CHECK(a != c);
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int i = 0; i < 12; ++i) CHECK(a[i] == std::polar(1.0, u(rng)));
}

TEST_CASE("random-phase benchmark") {
  SECTION("one site") {
    ChannelSet ch = zero_channels(1, 2, 1, 1, 0);
    ch.H0[0] << 1.0, 1.0;
    ch.g[0][0] << 1.0, 0.5;
    const auto rep = rrb_plan(ch, reqs(), {1.0, 1.0}, 3);
    CHECK(rep.plan.beta == std::vector<int>{1});
    CHECK(rep.feasible_patterns == 1);
    CHECK(verify_plan(rep.plan, ch, reqs()).ok);
  }
  SECTION("agrees with a second enumeration") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 6; ++trial) {
      const ChannelSet ch = oracle::random_channels(3, 2, 2, 2, 1, rng, 0.2);
      const Requirements r = reqs(20.0);
      const CostWeights w{1.0, trial % 2 ? 0.0 : 0.2};
      const std::uint64_t seed = 100 + trial;
      const CVec v = random_phases(3, 2, seed);
      const oracle::Enumerated want = oracle::enumerate_patterns(ch, r, w, v);
      if (!want.feasible) {
        CHECK_THROWS_AS(rrb_plan(ch, r, w, seed), InfeasibleError);
        continue;
      }
      const auto rep = rrb_plan(ch, r, w, seed);
      CHECK(rep.plan.beta == want.beta);
      CHECK(rep.plan.P0 == Approx(want.P0).epsilon(1e-10));
      CHECK(rep.plan.cost == Approx(want.cost).epsilon(1e-10));
      CHECK(rep.plan.v == v);
      if (w.w2 == 0.0) {
        // pure count: nothing feasible has fewer sites
        int n = 0;
        for (int x : want.beta) n += x;
        CHECK(rep.plan.deployed() == n);
      }
    }
  }
  SECTION("more draws never cost more") {
    std::mt19937_64 rng(7);
    const ChannelSet ch = oracle::random_channels(4, 2, 2, 2, 1, rng);
    const CostWeights w{1.0, 0.1};
    const auto one = rrb_plan(ch, reqs(), w, 9);
    RrbOptions o;
    o.draws = 5;
    CHECK(rrb_plan(ch, reqs(), w, 9, o).plan.cost <= one.plan.cost);
  }
  SECTION("nothing feasible") {
    CHECK_THROWS_AS(rrb_plan(zero_channels(2, 1, 1, 1, 0), reqs(), {1.0, 0.0}, 1), InfeasibleError);
  }
  SECTION("too many sites") {
    CHECK_THROWS_AS(rrb_plan(zero_channels(21, 1, 1, 1, 0), reqs(), {1.0, 0.0}, 1), Error);
  }
  SECTION("relabelling sensing points changes nothing") {
    std::mt19937_64 rng(8);
    const ChannelSet ch = oracle::random_channels(3, 2, 2, 3, 1, rng);
    ChannelSet perm = ch;
    for (int k = 0; k < 3; ++k) perm.g[k] = {ch.g[k][2], ch.g[k][0], ch.g[k][1]};
    const CostWeights w{1.0, 0.1};
    const auto a = rrb_plan(ch, reqs(), w, 4), b = rrb_plan(perm, reqs(), w, 4);
    CHECK(a.plan.beta == b.plan.beta);
    CHECK(a.plan.P0 == b.plan.P0);
  }
}
