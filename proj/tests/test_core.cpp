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

#include <numeric>
#include <vector>

#include "fogslice/game/core.hpp"
#include "game_fixtures.hpp"

using namespace fogslice;
using namespace fogslice::game;
namespace fx = fogslice::fixtures;

TEST(CoreCheck, SolverAgreementHasNoDeviation) {
  for (std::uint64_t seed : {1, 2, 3, 5, 8}) {
    auto s = fx::seeded_game(seed);
    auto agr = solve_core_agreement(s.game, s.budgets);
    auto rep = check_core(agr, s.game, s.budgets);
    EXPECT_TRUE(rep.in_core()) << "seed " << seed;
    EXPECT_TRUE(rep.complete);
    EXPECT_EQ(rep.largest_checked, 3u);
    EXPECT_EQ(rep.coalitions_checked, 7u);
  }
}

TEST(CoreCheck, UnpaidContributorDeviates) {
  // node 1 could earn 15 alone but the hand-made payoff gives it nothing
  auto g = fx::grid_instance(2, 1, 0, 0);
  std::vector<double> budgets{4, 4};
  auto agr = solve_social_welfare(g, budgets);
  double w = welfare(agr);
  agr.allocation = {w, 0.0};
  auto rep = check_core(agr, g, budgets);
  ASSERT_FALSE(rep.in_core());
  EXPECT_EQ(rep.deviation->members, (std::vector<std::size_t>{1}));
  EXPECT_EQ(rep.deviation->current, 0.0);
  EXPECT_NEAR(rep.deviation->deviating, 15.0, 1e-9);  // min(40 - 10, 15)
}

TEST(CoreCheck, SingleNodeIsTriviallyInCore) {
  auto g = fx::grid_instance(1, 2, 0, 0);
  std::vector<double> budgets{4};
  auto agr = solve_core_agreement(g, budgets);
  auto rep = check_core(agr, g, budgets);
  EXPECT_TRUE(rep.in_core());
  EXPECT_TRUE(rep.complete);
}

TEST(CoreCheck, PartialWhenCoalitionsSkipped) {
  auto s = fx::seeded_game(2);
  auto agr = solve_core_agreement(s.game, s.budgets);
  CoreOptions opt;
  opt.max_coalition = 2;
  auto rep = check_core(agr, s.game, s.budgets, opt);
  EXPECT_FALSE(rep.complete);
  EXPECT_EQ(rep.largest_checked, 2u);
  EXPECT_EQ(rep.coalitions_checked, 6u);
}

TEST(CoreCheck, EmptyCoreInstanceIsReported) {
  // v({0,1}) equals the grand welfare while {1,2} and {0,2} also earn
  // plenty, so no split of the grand welfare satisfies every coalition
  auto s = fx::seeded_game(14);
  auto agr = solve_core_agreement(s.game, s.budgets);
  auto rep = check_core(agr, s.game, s.budgets);
  EXPECT_FALSE(rep.in_core());
}

TEST(LeastCore, EfficientAndNonnegative) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    auto s = fx::seeded_game(seed);
    auto agr = solve_core_agreement(s.game, s.budgets);
    ASSERT_EQ(agr.allocation.size(), 3u);
    double sum = std::accumulate(agr.allocation.begin(), agr.allocation.end(), 0.0);
    EXPECT_NEAR(sum, welfare(agr), 1e-7 * std::max(1.0, welfare(agr))) << "seed " << seed;
    for (double x : agr.allocation) EXPECT_GE(x, -1e-9);
  }
}

TEST(LeastCore, HandComputedThreePlayerGame) {
  // v(i) = 0, v({0,1}) = 8, other pairs 0, grand 10: core needs x0 + x1 >= 8
  std::vector<CoalitionValue> v{{{0}, 0}, {{1}, 0}, {{2}, 0}, {{0, 1}, 8}, {{0, 2}, 0}, {{1, 2}, 0}};
  auto x = least_core_allocation(3, v, 10.0);
  EXPECT_NEAR(x[0] + x[1] + x[2], 10.0, 1e-9);
  EXPECT_GE(x[0] + x[1], 8.0 - 1e-9);
}
