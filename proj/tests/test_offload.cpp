// Copyright 2026 The fogslice Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fogslice/game/offload.hpp"
#include "fogslice/game/oracle.hpp"
#include "fogslice/game/slice.hpp"
#include "game_fixtures.hpp"

using namespace fogslice;
using namespace fogslice::game;

namespace {

SliceInstance two_nodes(std::vector<double> energy, std::vector<double> lambda, double tau, double theta) {
  SliceInstance s;
  s.theta = theta;
  s.energy = std::move(energy);
  s.unit_energy = {1, 1};
  s.unit_rate = {10, 10};
  s.arrivals = std::move(lambda);
  s.neighbors = {{1}, {0}};
  s.rtt = Matrix::from_rows({{0, tau}, {tau, 0}});
  return s;
}

double deadline_slack(const SliceInstance& s, const Matrix& alpha, std::size_t i) {
  auto cap = s.capacities();
  return s.theta - queueing::mean_response_time(i, alpha, cap, s.arrivals, s.rtt);
}

}  // namespace

TEST(SliceWorth, SumsMemberRewards) {
  auto s = two_nodes({5, 5}, {60, 40}, 0.02, 0.1);
  Matrix a = Matrix::square(2);
  a(0, 0) = 0.5;  // 30 requests/s
  a(1, 1) = 0.5;  // 20 requests/s
  EXPECT_NEAR(slice_worth(s, a, 1.0), 50.0, 1e-12);
  EXPECT_NEAR(slice_worth(s, a, 2.5), 125.0, 1e-12);
  EXPECT_EQ(slice_worth(s, Matrix::square(2), 1.0), 0.0);
}

TEST(SliceWorth, RejectsInfeasible) {
  auto s = two_nodes({5, 5}, {60, 40}, 0.02, 0.1);
  Matrix a = Matrix::square(2);
  a(0, 0) = 0.8;
  a(0, 1) = 0.4;  // offload sum above 1
  EXPECT_THROW(slice_worth(s, a, 1.0), InfeasibleOffload);
  Matrix over = Matrix::square(2);
  over(0, 0) = 1.0;  // 60 requests/s on a 50 requests/s queue
  EXPECT_THROW(slice_worth(s, over, 1.0), InfeasibleOffload);
  s.neighbors = {{}, {}};
  Matrix fwd = Matrix::square(2);
  fwd(0, 1) = 0.1;
  EXPECT_THROW(slice_worth(s, fwd, 1.0), InfeasibleOffload);
}

TEST(SolveOffload, SingleNodeIsClosedForm) {
  for (double e : {0.0, 2.0, 5.0, 9.0}) {
    SliceInstance s;
    s.theta = 0.1;
    s.energy = {e};
    s.unit_energy = {1};
    s.unit_rate = {10};
    s.arrivals = {45};
    s.neighbors = {{}};
    s.rtt = Matrix::square(1);
    auto r = solve_offload(s);
    EXPECT_NEAR(r.alpha(0, 0), queueing::optimal_local_fraction(e, 1, 10, 45, 0.1), 1e-9) << "e=" << e;
  }
}

TEST(SolveOffload, TwoNodeMatchesFineGrid) {
  auto s = two_nodes({5, 5}, {80, 20}, 0.02, 0.1);
  auto r = solve_offload(s);
  auto o = oracle::best_offload_refined(s, 0.01, 0.001);
  EXPECT_NEAR(r.served, o.served, 1e-3 * o.served);
  EXPECT_TRUE(slice_violations(s, r.alpha).empty());
}

TEST(SolveOffload, RttAtDeadlineBlocksForwarding) {
  // node 0 has no local queue to average against, so every forwarded request
  // misses the deadline
  for (double tau : {0.1, 0.2, 1.0}) {
    auto s = two_nodes({0, 8}, {60, 10}, tau, 0.1);
    auto r = solve_offload(s);
    EXPECT_EQ(r.alpha(0, 1), 0.0) << "tau=" << tau;
    EXPECT_EQ(r.alpha(1, 0), 0.0) << "tau=" << tau;
    EXPECT_EQ(r.served, 10.0 * queueing::optimal_local_fraction(8, 1, 10, 10, 0.1));
  }
}

TEST(SolveOffload, LocalSlackCanCarryForwarding) {
  // with tau = theta a forwarded request alone is late, but node 0's fast
  // local share leaves room in its mean response time
  auto s = two_nodes({2, 8}, {60, 10}, 0.1, 0.1);
  auto r = solve_offload(s);
  EXPECT_GT(r.alpha(0, 1), 0.0);
  EXPECT_GE(deadline_slack(s, r.alpha, 0), -1e-9);
  EXPECT_GT(r.served, 10.0 + 10.0 * queueing::optimal_local_fraction(8, 1, 10, 10, 0.1));
}

TEST(SolveOffload, NothingOffloadableGivesZero) {
  auto s = two_nodes({1, 0}, {30, 30}, 0.02, 0.1);  // one unit cannot beat 1/theta
  auto r = solve_offload(s);
  EXPECT_EQ(r.served, 0.0);
  EXPECT_EQ(r.alpha.row_sum(0) + r.alpha.row_sum(1), 0.0);
}

TEST(SolveOffloadProperty, FeasibleAndMeetsDeadlines) {
  Rng rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    auto s = fixtures::random_slice(rng, 2 + trial % 3);
    auto r = solve_offload(s);
    EXPECT_TRUE(slice_violations(s, r.alpha).empty()) << "trial " << trial;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (r.alpha.row_sum(i) > 0.0) {
        EXPECT_GE(deadline_slack(s, r.alpha, i), -1e-9) << "trial " << trial;
      }
  }
}

TEST(SolveOffloadProperty, NeverWorseThanCoarseGrid) {
  Rng rng(77);
  for (int trial = 0; trial < 25; ++trial) {
    auto s = fixtures::random_slice(rng, 2 + trial % 2, 4);
    auto r = solve_offload(s);
    auto o = oracle::best_offload(s, 0.05);
    EXPECT_GE(r.served, o.served * (1 - 1e-3) - 1e-9) << "trial " << trial;
  }
}

TEST(SolveOffloadProperty, WorthMonotoneInEnergy) {
  Rng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    auto s = fixtures::random_slice(rng, 2 + trial % 3, 5);
    double before = solve_offload(s).served;
    std::size_t i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(s.size()));
    s.energy[i] += 1.0;
    double after = solve_offload(s).served;
    EXPECT_GE(after, before - 1e-9 * std::max(1.0, before)) << "trial " << trial;
  }
}

TEST(SolveOffloadProperty, RewardScaleLeavesArgmax) {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = fixtures::random_slice(rng, 3);
    auto r = solve_offload(s);
    double w1 = slice_worth(s, r.alpha, 1.0);
    EXPECT_NEAR(slice_worth(s, r.alpha, 3.0), 3.0 * w1, 1e-9 * std::max(1.0, w1));
  }
}

TEST(SolveOffload, Deterministic) {
  Rng rng(31);
  auto s = fixtures::random_slice(rng, 4);
  auto a = solve_offload(s);
  auto b = solve_offload(s);
  EXPECT_EQ(a.alpha, b.alpha);
}
